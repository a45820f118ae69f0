"""Command-line entry point ``bellincompat``."""

from __future__ import annotations

import argparse
import math
import sys

from .errors import BellIncompatError, ConfigError, InfeasibleTarget
from .sweep import (
    REPORT_KINDS,
    SCHEMA_VERSION,
    WORKERS_ENV,
    RunConfig,
    default_workers,
    run_optimization,
    run_qrac_sweep,
    run_report,
    run_sweep,
    run_thresholds,
)


def _p_value(text: str) -> float:
    if text.lower() in ("inf", "infinity"):
        return math.inf
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid norm order {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("norm order must be >= 1")
    return v


def _common(sp: argparse.ArgumentParser, samples: int | None = 1000) -> None:
    sp.add_argument("--d", type=int, help="local dimension (default 3)")
    if samples is not None:
        sp.add_argument("--samples", type=int, help=f"sample count (default {samples})")
    sp.add_argument("--seed", type=int, help="master seed (default 0)")
    sp.add_argument("--p", type=_p_value, help="Schatten order: inf (default), 1 or 2")
    sp.add_argument("--out", help="output path (stdout when omitted)")
    sp.add_argument(
        "--workers",
        type=int,
        help=f"worker processes (default ${WORKERS_ENV} or 1)",
    )
    sp.add_argument("--config", help="JSON file with RunConfig fields")


def _opt_flags(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--budget", type=int, help="objective evaluations (default 20000)")
    sp.add_argument("--i-target", type=float, help="pinned incompatibility")
    sp.add_argument("--manifold", choices=("unitary", "interferometric"))
    sp.add_argument("--sense", choices=("max", "min"))
    sp.add_argument("--side", choices=("alice", "bob", "both"))
    sp.add_argument("--tol", type=float, help="constraint tolerance (default 1e-3)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="bellincompat",
        description="Incompatibility, CGLMP and QRAC computations.",
        epilog=f"output schema version {SCHEMA_VERSION}",
    )
    ap.add_argument("--version", action="version", version=f"schema {SCHEMA_VERSION}")
    subs = ap.add_subparsers(dest="command", required=True)

    class _Sub:
        # every subcommand's --help also reports the schema version
        @staticmethod
        def add_parser(name, **kw):
            return subs.add_parser(name, epilog=f"output schema version {SCHEMA_VERSION}", **kw)

    sub = _Sub()

    sp = sub.add_parser("sweep", help="Haar sweep: incompatibilities, chi, QRAC, Schmidt data")
    _common(sp)
    sp.add_argument("--eta-a", type=float, help="Alice's unsharpness (default 1)")
    sp.add_argument("--eta-b", type=float, help="Bob's unsharpness (default 1)")

    sp = sub.add_parser("qrac-sweep", help="Haar sweep of QRAC decodings")
    _common(sp)

    sp = sub.add_parser("thresholds", help="critical unsharpness table")
    _common(sp, samples=None)
    sp.add_argument("--d-min", type=int, help="smallest d (default 2)")
    sp.add_argument("--d-max", type=int, help="largest d (default 8)")

    sp = sub.add_parser("opt-chi", help="constrained extremum of chi_3, JSON report")
    _common(sp, samples=None)
    _opt_flags(sp)

    sp = sub.add_parser("report", help="plot-ready data for one figure")
    sp.add_argument("kind", choices=REPORT_KINDS)
    _common(sp)
    _opt_flags(sp)
    sp.add_argument("--grid", type=int, help="grid size for scans")

    sp = sub.add_parser("scan", help="interferometric scan over Alice's free phase")
    _common(sp, samples=None)
    sp.add_argument("--grid", type=int, help="grid points over [0, 2 pi] (default 629)")
    return ap


_CONFIG_KEYS = (
    "d", "samples", "seed", "p", "eta_a", "eta_b", "out", "workers", "budget",
    "i_target", "manifold", "sense", "side", "d_min", "d_max", "grid", "tol",
)


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    """Merge, lowest precedence first: field defaults, ``--config`` file, explicit flags."""
    vals = {}
    if getattr(ns, "config", None):
        with open(ns.config, encoding="utf-8") as fh:
            vals = RunConfig.from_json(fh.read(), ns.config).to_json()
        if vals.get("p") == "inf":
            vals["p"] = math.inf
    for key in _CONFIG_KEYS:
        v = getattr(ns, key, None)
        if v is not None:
            vals[key] = v
    if vals.get("workers") is None:
        vals["workers"] = default_workers()
    vals["command"] = ns.command
    return RunConfig(**vals)


def _emit(text: str, cfg: RunConfig) -> None:
    if cfg.out is None:
        sys.stdout.write(text)


def main(argv=None) -> int:
    ap = build_parser()
    ns = ap.parse_args(argv)
    try:
        cfg = config_from_args(ns)
        if ns.command == "sweep":
            summary = run_sweep(cfg)
        elif ns.command == "qrac-sweep":
            summary = run_qrac_sweep(cfg)
        elif ns.command == "thresholds":
            summary = run_thresholds(cfg)
        elif ns.command == "report":
            summary = run_report(ns.kind, cfg)
        elif ns.command == "scan":
            summary = run_report("fig3-scan", cfg)
        else:
            _, text = run_optimization(cfg)
            _emit(text, cfg)
            return 0
    except InfeasibleTarget as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ConfigError, BellIncompatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    _emit(summary.text, cfg)
    for name, ok in summary.checks.items():
        print(f"check {name}: {'pass' if ok else 'FAIL'}", file=sys.stderr)
    if summary.failures:
        print(f"{summary.failures}/{summary.rows} samples failed", file=sys.stderr)
    return 0 if summary.ok else 1


if __name__ == "__main__":
    sys.exit(main())
