"""Command-line entry point: ``pactree simulate | spectrum | profile | genie-hist``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .analysis import genie_error_histogram, spectrum_scl
from .code import PACCode
from .sim_harness import (DECODERS, PROFILES, Campaign, ConfigError, campaign_from_values,
                          parse_config_text, records_csv, run_campaign, write_json)

# simulate flags and the campaign fields they set
_SIM_FLAGS = {
    "N": "N", "K": "K", "profile": "profile", "design_snr": "design_snr", "g": "g",
    "crc": "crc", "crc_bits": "crc_bits", "crc_poly": "crc_poly", "decoder": "decoder", "list_size": "list_size",
    "stack_depth": "stack_depth", "delta": "delta", "ibu": "ibu", "max_div": "max_div",
    "cs": "cs", "topdown": "topdown", "adaptive": "adaptive", "one_shot": "one_shot",
    "bias_snr": "bias_snr", "snr": "snr", "min_errors": "min_errors",
    "max_frames": "max_frames", "seed": "seed", "workers": "workers", "timing": "timing",
}


def _code_args(p: argparse.ArgumentParser, defaults: bool = True) -> None:
    d = (lambda x: x) if defaults else (lambda x: None)
    p.add_argument("--N", type=int, default=d(128), help="block length")
    p.add_argument("--K", type=int, default=d(64), help="data bits")
    p.add_argument("--profile", default=d("rm"),
                   help=f"rate profile: {', '.join(PROFILES)} or a profile file")
    p.add_argument("--design-snr", dest="design_snr", default=None,
                   help="design SNR (dB) of the profile construction")
    p.add_argument("--g", default=d("133"), help="convolution generator in octal (1 = polar)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pactree", description="PAC code simulation and analysis")
    sub = ap.add_subparsers(dest="cmd", required=True)

    s = sub.add_parser("simulate", help="Monte-Carlo FER/BER campaign")
    s.add_argument("--config", help="flat key = value file; command-line flags win")
    _code_args(s, defaults=False)
    s.add_argument("--crc", default=None, help="CRC polynomial, e.g. 0xA6 (implicit x^r), or off")
    s.add_argument("--crc-bits", dest="crc_bits", default=None, help="CRC length r (default 8)")
    s.add_argument("--crc-poly", dest="crc_poly", default=None,
                   help="CRC as a full binary polynomial, highest power first (e.g. 110100110)")
    s.add_argument("--decoder", default=None, choices=DECODERS)
    s.add_argument("--list-size", dest="list_size", default=None)
    s.add_argument("--stack-depth", dest="stack_depth", default=None)
    s.add_argument("--delta", default=None, help="Fano threshold step")
    s.add_argument("--ibu", default=None, help="bias-update bit index")
    s.add_argument("--max-div", dest="max_div", default=None, help="diversion limit (off = none)")
    for flag in ("cs", "topdown", "adaptive", "one-shot"):
        s.add_argument(f"--{flag}", dest=flag.replace("-", "_"), default=None, choices=("on", "off"))
    s.add_argument("--bias-snr", dest="bias_snr", default=None, help="design SNR of the Fano/stack bias")
    s.add_argument("--snr", default=None, help='Eb/N0 grid: "1,1.5,2" or "start:stop:step"')
    s.add_argument("--min-errors", dest="min_errors", default=None)
    s.add_argument("--max-frames", dest="max_frames", default=None)
    s.add_argument("--seed", default=None)
    s.add_argument("--workers", default=None)
    s.add_argument("--timing", default=None, choices=("on", "off"),
                   help="off writes wall_seconds = 0 so reruns are byte-identical")
    s.add_argument("--out", help="CSV path (default: stdout)")
    s.add_argument("--json", help="JSON mirror path (default: CSV path with .json)")

    p = sub.add_parser("spectrum", help="low-weight spectrum by list search")
    _code_args(p)
    p.add_argument("--code", help="profile file (overrides --N/--K/--profile)")
    p.add_argument("--list-size", dest="list_size", type=int, default=1 << 10)
    p.add_argument("--max-weight", dest="max_weight", type=int, default=None)
    p.add_argument("--levels", default="1", help="search levels, or 'all' for an exact search")
    p.add_argument("--out", help="weight,count CSV path (default: stdout)")

    r = sub.add_parser("profile", help="write a rate profile file")
    _code_args(r)
    r.add_argument("--out", help="profile path (default: stdout)")

    h = sub.add_parser("genie-hist", help="channel-induced error counts under genie-aided SC")
    _code_args(h)
    h.add_argument("--snr", type=float, default=2.5)
    h.add_argument("--failures", type=int, default=1000)
    h.add_argument("--seed", type=int, default=0)
    h.add_argument("--out", help="errors,failures CSV path (default: stdout)")
    return ap


def _emit(text: str, path) -> None:
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def _campaign(args) -> Campaign:
    values = {}
    if args.config:
        try:
            values.update(parse_config_text(Path(args.config).read_text()))
        except OSError as e:
            raise ConfigError(f"cannot read config: {e}") from e
    for flag, key in _SIM_FLAGS.items():
        v = getattr(args, flag, None)
        if v is not None:
            values[key] = v
    return campaign_from_values(values)


def _code(args) -> PACCode:
    values = {"N": args.N, "K": args.K, "profile": args.profile, "g": args.g}
    if args.design_snr is not None:
        values["design_snr"] = args.design_snr
    camp = campaign_from_values(values)
    return camp.build_code()


def cmd_simulate(args) -> int:
    camp = _campaign(args)
    records = run_campaign(camp, on_record=None if args.out else
                           lambda r: print("# " + records_csv([r]).splitlines()[1], file=sys.stderr))
    _emit(records_csv(records), args.out)
    json_path = args.json or (str(Path(args.out).with_suffix(".json")) if args.out else None)
    if json_path:
        write_json(records, camp, json_path)
    return 0


def cmd_spectrum(args) -> int:
    if args.code:
        from .construction import RateProfile
        try:
            prof = RateProfile.load(args.code)
        except (OSError, ValueError) as e:
            raise ConfigError(f"cannot load profile: {e}") from e
        code = PACCode(prof, g=args.g)
    else:
        code = _code(args)
    levels = None if str(args.levels).lower() == "all" else int(args.levels)
    if args.list_size < 1 or (levels is not None and levels < 1):
        raise ConfigError("list size and levels must be positive")
    spec = spectrum_scl(code, args.list_size, args.max_weight, levels)
    _emit(spec.to_csv(), args.out)
    return 0


def cmd_profile(args) -> int:
    prof = _code(args).profile
    lines = [f"{prof.N} {prof.K}"] + [str(i) for i in prof.info]
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def cmd_genie(args) -> int:
    if args.failures < 0:
        raise ConfigError("failures must be >= 0")
    hist = genie_error_histogram(_code(args), args.snr, args.failures, seed=args.seed)
    text = "errors,failures\n" + "".join(f"{k},{c}\n" for k, c in hist.counts.items())
    _emit(text, args.out)
    print(f"# {hist.failures} failures in {hist.frames} frames; "
          f"{100 * hist.fraction_at_most(5):.2f}% with at most 5 errors", file=sys.stderr)
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"simulate": cmd_simulate, "spectrum": cmd_spectrum, "profile": cmd_profile,
               "genie-hist": cmd_genie}[args.cmd]
    try:
        return handler(args)
    except ConfigError as e:
        print(f"pactree: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
