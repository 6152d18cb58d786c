"""Command line entry point: ``riscim <subcommand> [options]``.

Exit status is 0 on success, 2 for a bad configuration or arguments and 3
when the simulation itself fails.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import plotting
from .config import ConfigError, SimConfig, load_config
from .simulate import (
    emit_csv,
    run_array_sweep,
    run_curve,
    run_perturbation_sweep,
    run_sparsity_sweep,
)

EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _dims(text: str) -> tuple[int, int]:
    nx, _, ny = text.lower().partition("x")
    return int(nx), int(ny or nx)


def _sizes(text: str):
    """``4x4:6x6,8x8:10x10`` -> [((4, 4), (6, 6)), ((8, 8), (10, 10))]."""
    try:
        out = []
        for item in text.split(","):
            ant, ris = item.split(":")
            out.append((_dims(ant), _dims(ris)))
        return out
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected ANTxANT:RISxRIS[,...], e.g. 4x4:6x6, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="flat YAML file of SimConfig fields")
    common.add_argument("--seed", type=int, help="master seed (overrides the config)")
    common.add_argument("--trials", type=int, help="trials per power point")
    common.add_argument("--out", type=Path, help="CSV output path; a PNG is written alongside")
    common.add_argument("--strategy", help="BGCS-CIM, SIMPLE-CIM, SSM or RCS")
    common.add_argument("--threads", type=int, help="worker processes")
    common.add_argument("--no-plot", action="store_true", help="skip the PNG figure")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="riscim", description="RIS-assisted cluster index "
                                "modulation link simulator")
    sub = p.add_subparsers(dest="command", required=True)

    powers = argparse.ArgumentParser(add_help=False)
    powers.add_argument("--powers", type=_floats, help="comma-separated powers in dBm")

    sub.add_parser("curve", parents=[common, powers], help="ABER and union bound versus power")

    a = sub.add_parser("array-sweep", parents=[common], help="ABER versus array size")
    a.add_argument("--sizes", type=_sizes, default=_sizes("4x4:6x6,8x8:10x10"),
                   help="ANTxANT:RISxRIS list (default: 4x4:6x6,8x8:10x10)")
    a.add_argument("--power", type=float, default=20.0, help="transmit power in dBm")

    s = sub.add_parser("sparsity-sweep", parents=[common, powers],
                       help="ABER over (C_R, L_R) grid")
    s.add_argument("--clusters", type=_ints, default=[2, 8])
    s.add_argument("--paths", type=_ints, default=[2, 10])
    s.add_argument("--strategies", default=None,
                   help="comma-separated strategies (default: --strategy or the config)")

    d = sub.add_parser("perturb-sweep", parents=[common, powers],
                       help="ABER versus angle error")
    d.add_argument("--deltas", type=_floats, default=[0.0, 1.0, 2.0, 5.0],
                   help="cluster-angle errors in degrees")
    return p


def _config(args) -> SimConfig:
    overrides = dict(seed=args.seed, trials_per_point=args.trials, strategy=args.strategy,
                     threads=args.threads)
    if getattr(args, "powers", None):
        overrides["powers_dbm"] = args.powers
    if args.config is not None:
        return load_config(args.config, **overrides)
    try:
        return SimConfig(**{k: v for k, v in overrides.items() if v is not None})
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def _run(args, cfg: SimConfig) -> Path:
    out = args.out or Path(f"{args.command}.csv")
    out.parent.mkdir(parents=True, exist_ok=True)
    png = out.with_suffix(".png")
    if args.command == "curve":
        curve = run_curve(cfg)
        emit_csv(curve, out)
        if not args.no_plot and len(curve):
            plotting.plot_curve(curve, png)
        return out
    if args.command == "array-sweep":
        rows = run_array_sweep(cfg, args.sizes, args.power)
        emit_csv(rows, out)
        if not args.no_plot and rows and rows[0]["trials"]:
            plotting.plot_array_sweep(rows, png)
        return out
    if args.command == "sparsity-sweep":
        strategies = args.strategies.split(",") if args.strategies else None
        rows = run_sparsity_sweep(cfg, args.clusters, args.paths, strategies)
        emit_csv(rows, out)
        if not args.no_plot and rows:
            plotting.plot_rows(rows, png, ("strategy", "C_R", "L_R"))
        return out
    rows = run_perturbation_sweep(cfg, args.deltas)
    emit_csv(rows, out)
    if not args.no_plot and rows:
        plotting.plot_rows(rows, png, ("delta_deg",))
    return out


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _config(args)
        if args.command == "sparsity-sweep" and args.strategies:
            for s in args.strategies.split(","):
                cfg.replace(strategy=s)
    except ValueError as exc:  # ConfigError included
        print(f"riscim: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        out = _run(args, cfg)
    except (ArithmeticError, ValueError, OSError) as exc:
        print(f"riscim: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
