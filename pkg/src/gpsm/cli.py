"""Command-line entry point: ``gpsm <suite> [flags]``, ``gpsm run``, ``gpsm convergence``."""

from __future__ import annotations

import argparse
import json
import sys

from .harness import ConfigError, ExperimentConfig, SUITES, convergence_table, run

EXIT_PASS, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

# flag -> config field
OVERRIDES = {
    "p": "p", "q": "q", "domain": "domain", "res_boundary": "res_boundary",
    "res_slice": "res_slice", "res_eta": "res_eta", "levels": "levels", "fd_order": "fd_order",
    "fd_step": "fd_step", "tol": "tol", "seed": "seed", "out": "out", "format": "format",
    "t": "t", "ensemble": "ensemble",
}


def parse_domain(text: str) -> dict:
    """``ball:C0,..,Cm:R`` or ``box:C0,..,Cm:H0,..,Hm`` in stem coordinates."""
    try:
        kind, centre, size = text.split(":")
        c = [float(v) for v in centre.split(",")]
        if kind == "ball":
            return {"kind": "ball", "center": c, "radius": float(size)}
        if kind == "box":
            return {"kind": "box", "center": c, "halfwidths": [float(v) for v in size.split(",")]}
    except ValueError:
        pass
    raise argparse.ArgumentTypeError(f"bad domain {text!r}; use ball:C:R or box:C:H")


def _fd_step(text: str):
    return text if text == "auto" else float(text)


def _common(ap: argparse.ArgumentParser):
    g = ap.add_argument_group("configuration overrides")
    g.add_argument("--config", help="JSON config file; flags override its fields")
    g.add_argument("--p", type=int)
    g.add_argument("--q", type=int)
    g.add_argument("--domain", type=parse_domain, help="ball:C0,..:R or box:C0,..:H0,..")
    g.add_argument("--res-boundary", type=int, dest="res_boundary")
    g.add_argument("--res-slice", type=int, dest="res_slice")
    g.add_argument("--res-eta", type=int, dest="res_eta")
    g.add_argument("--levels", type=int, help="δ-exclusion schedule length")
    g.add_argument("--fd-order", type=int, dest="fd_order", choices=(2, 4))
    g.add_argument("--fd-step", type=_fd_step, dest="fd_step", help="float or 'auto'")
    g.add_argument("--tol", type=float)
    g.add_argument("--seed", type=int)
    g.add_argument("--t", type=float, help="norm-experiment exponent")
    g.add_argument("--ensemble", type=int)
    g.add_argument("--out", help="report path (stdout when omitted)")
    g.add_argument("--format", choices=("jsonl", "csv"))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gpsm", description="Verification suites for partial-slice monogenic analysis.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in SUITES:
        _common(sub.add_parser(name, help=f"run the {name} suite"))
    r = sub.add_parser("run", help="run the suites listed in the config (or --suites)")
    _common(r)
    r.add_argument("--suites", help="comma-separated suite names; empty for none")
    c = sub.add_parser("convergence", help="convergence table of one suite")
    _common(c)
    c.add_argument("suite", choices=sorted(SUITES))
    c.add_argument("--refine", type=int, nargs="+", default=[0, 1, 2], help="refinement levels")
    return ap


def make_config(args) -> ExperimentConfig:
    base = ExperimentConfig.from_file(args.config).to_dict() if args.config else {}
    for flag, fld in OVERRIDES.items():
        v = getattr(args, flag, None)
        if v is not None:
            base[fld] = v
    if args.command == "run" and args.suites is not None:
        base["suites"] = [s for s in args.suites.split(",") if s]
    elif args.command in SUITES:
        base["suites"] = [args.command]
    elif args.command == "convergence":
        base["suites"] = [args.suite]
    return ExperimentConfig.from_dict(base)


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_PASS
    try:
        cfg = make_config(args)
        if args.command == "convergence":
            report = convergence_table(cfg, args.suite, args.refine)
        else:
            report = run(cfg)
    except ConfigError as e:
        print(f"gpsm: usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    text = report.write(cfg.out)
    if not cfg.out:
        sys.stdout.write(text)
    summary = {"records": len(report.records), "passed": report.passed, "config_hash": cfg.hash()}
    print(json.dumps(summary), file=sys.stderr)
    return EXIT_PASS if report.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
