"""Fano decoder ablation: FER and average time steps with each technique toggled."""

import argparse

from pactree.sim_harness import Campaign, records_csv, run_campaign

BASE = dict(decoder="fano", max_div=None, cs=False, topdown=False, adaptive=False)
VARIANTS = {
    "unconstrained": {},
    "adaptive": dict(adaptive=True),
    "adaptive+topdown": dict(adaptive=True, topdown=True),
    "adaptive+topdown+cs": dict(adaptive=True, topdown=True, cs=True),
    "all (max_div=4)": dict(adaptive=True, topdown=True, cs=True, max_div=4),
    "all, no one-shot": dict(adaptive=True, topdown=True, cs=True, max_div=4, one_shot=False),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--snr", type=float, default=2.0)
    ap.add_argument("--frames", type=int, default=20_000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    base = None
    print(f"{'variant':24s} {'FER':>10s} {'errors':>7s} {'time steps':>11s} {'ratio':>6s}")
    for name, kw in VARIANTS.items():
        camp = Campaign(snr=[args.snr], min_errors=0, max_frames=args.frames, seed=args.seed,
                        timing=False, **{**BASE, **kw})
        r = run_campaign(camp)[0]
        base = base or r.avg_time_steps
        print(f"{name:24s} {r.fer:10.3e} {r.frame_errors:7d} {r.avg_time_steps:11.1f} "
              f"{r.avg_time_steps / base:6.3f}", flush=True)


if __name__ == "__main__":
    main()
