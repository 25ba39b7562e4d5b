"""Command-line entry point: list scenarios, run them, run the axiom suite."""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .calculus import axiom_suite
from .reduction import Tolerances
from .scenarios import CATALOGUE, RunConfig, builtin, run

REPORT_DIR_ENV = "GENRED_REPORT_DIR"
TOL_KEYS = ("rank_tol", "angle_tol", "level_tol", "residual_tol")


class UsageError(Exception):
    pass


def _positive_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if not v > 0:
        raise argparse.ArgumentTypeError("tolerances must be positive")
    return v


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if v < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="genred", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("list", help="print the scenario catalogue")

    r = sub.add_parser("run", help="run a scenario and write its report")
    r.add_argument("scenario")
    r.add_argument("--samples", type=_positive_int)
    r.add_argument("--seed", type=int)
    r.add_argument("--config", type=Path, help="JSON file with samples, seed, tolerances, variant, jobs")
    r.add_argument("--report", type=Path, help=f"report path (default: ${REPORT_DIR_ENV} or the current directory)")
    for key in TOL_KEYS:
        r.add_argument("--" + key.replace("_", "-"), dest=key, type=_positive_float)
    r.add_argument("--jobs", type=_positive_int)
    r.add_argument("-v", "--verbose", action="count", default=0)

    a = sub.add_parser("axioms", help="Courant axioms and bracket properties on random data")
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--twist", choices=("closed", "nonclosed", "zero"), default="closed")
    a.add_argument("--samples", type=_positive_int, default=100)
    a.add_argument("--residual-tol", dest="residual_tol", type=_positive_float, default=1e-8)
    return parser


def _load_config(path: Path | None) -> dict:
    if path is None:
        return {}
    try:
        data = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}")
    if not isinstance(data, dict):
        raise UsageError("config file must hold a JSON object")
    known = {"samples", "seed", "jobs", "variant", "tolerances", *TOL_KEYS}
    unknown = set(data) - known
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
    flat = dict(data)
    flat.update(flat.pop("tolerances", {}) or {})
    return flat


def _run_config(args, cfg: dict) -> RunConfig:
    merged = dict(cfg)
    for key in ("samples", "seed", "jobs", *TOL_KEYS):
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
    try:
        tols = Tolerances(**{k: float(merged[k]) for k in TOL_KEYS if k in merged})
        return RunConfig(samples=int(merged.get("samples", 20)), seed=int(merged.get("seed", 0)),
                         tolerances=tols, jobs=int(merged.get("jobs", 1)))
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc))


def _cmd_list() -> int:
    for name in CATALOGUE:
        print(f"{name:<7s} {builtin(name).description}")
    return 0


def _cmd_run(args, parser) -> int:
    cfg = _load_config(args.config)
    name = args.scenario
    if cfg.get("variant"):
        name = f"{name}-{cfg['variant']}"
    if name not in CATALOGUE:
        parser.print_usage(sys.stderr)
        raise UsageError(f"unknown scenario {name!r}; choose from {', '.join(CATALOGUE)}")
    config = _run_config(args, cfg)
    result = run(name, config)
    path = args.report
    if path is None:
        base = Path(os.environ.get(REPORT_DIR_ENV, "."))
        path = base / f"{name}-seed{config.seed}.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(result.to_json() + "\n")
    print(result.summary())
    if args.verbose:
        for pt in result.document["points"]:
            bad = sorted(k for k, v in pt["checks"].items() if not v)
            status = "ok" if pt["pass"] else ("error: " + pt["error"] if pt["error"] else "failed: " + ", ".join(bad))
            print(f"  point {pt['index']:3d} {status}")
    print(f"report written to {path}")
    return 0 if result.passed else 1


def _cmd_axioms(args) -> int:
    res = axiom_suite(args.seed, args.twist, args.samples, tol=args.residual_tol)
    print(f"axiom suite: twist {res['twist']}, seed {res['seed']}, {res['samples']} samples")
    for k, v in res["max_residuals"].items():
        mark = "" if k == "dH" else ("ok" if v < res["tol"] else "VIOLATED")
        print(f"  {k:<12s} {v:.3e} {mark}")
    print("PASS" if res["pass"] else "FAIL")
    return 0 if res["pass"] else 1


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    try:
        if args.command == "list":
            return _cmd_list()
        if args.command == "run":
            return _cmd_run(args, parser)
        return _cmd_axioms(args)
    except UsageError as exc:
        print(f"genred: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
