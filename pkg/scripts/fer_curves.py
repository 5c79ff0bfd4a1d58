"""FER/BER curves of PAC(128,64) and P(128,64) under the list, stack and Fano decoders.

Writes one CSV (and JSON mirror) per decoder into --out.
"""

import argparse
from pathlib import Path

from pactree.sim_harness import Campaign, parse_snr, run_campaign, write_csv, write_json

RUNS = {
    "pac_scl256": dict(decoder="scl", list_size=256),
    "polar_scl256": dict(decoder="scl", list_size=256, g="1"),
    "pac_stack256": dict(decoder="stack", stack_depth=256),
    "pac_fano_unconstrained": dict(decoder="fano", max_div=None, cs=False, topdown=False,
                                   adaptive=False),
    "pac_fano_full": dict(decoder="fano"),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--snr", default="1.0:3.0:0.5")
    ap.add_argument("--min-errors", type=int, default=200)
    ap.add_argument("--max-frames", type=int, default=10 ** 6)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--only", nargs="*", choices=sorted(RUNS))
    ap.add_argument("--out", default="results/fer")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name in args.only or RUNS:
        camp = Campaign(snr=parse_snr(args.snr), min_errors=args.min_errors,
                        max_frames=args.max_frames, workers=args.workers, **RUNS[name])
        recs = run_campaign(camp, on_record=lambda r, n=name: print(
            f"{n:24s} {r.ebn0_db:4.2f} dB  FER {r.fer:.3e}  ({r.frame_errors}/{r.frames})  "
            f"steps {r.avg_time_steps:.0f}", flush=True))
        write_csv(recs, out / f"{name}.csv")
        write_json(recs, camp, out / f"{name}.json")


if __name__ == "__main__":
    main()
