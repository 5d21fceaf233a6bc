"""Command-line interface: render figures from simulator CSV outputs."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .figures import plot_probability, plot_snapshots, plot_sweep
from .io import SchemaError


def cmd_snapshots(args) -> int:
    times = [float(v) for v in args.times.split(",") if v]
    if not times:
        print("error: --times must list at least one time", file=sys.stderr)
        return 2
    written = plot_snapshots(args.trace, times, args.out, config_path=args.config)
    for path in written:
        print(f"wrote {path}")
    return 0


def cmd_probability(args) -> int:
    out = Path(args.out) / args.name
    path = plot_probability(args.summaries, out)
    print(f"wrote {path}")
    return 0


def cmd_sweep(args) -> int:
    out = Path(args.out) / args.name
    path = plot_sweep(args.sweep, out)
    print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ringcover-plots",
                                 description="figures from ringcover CSV traces")
    sub = ap.add_subparsers(dest="command", required=True)

    p_snap = sub.add_parser("snapshots", help="layer snapshot scatter plots")
    p_snap.add_argument("trace", help="trace.csv path")
    p_snap.add_argument("--times", required=True, help="comma-separated seconds")
    p_snap.add_argument("--config", default=None,
                        help="config.json echo for layer outlines")
    p_snap.add_argument("-o", "--out", default="plots")
    p_snap.set_defaults(fn=cmd_snapshots)

    p_prob = sub.add_parser("probability", help="detection probability curves")
    p_prob.add_argument("summaries", nargs="+", help="summary.csv path(s)")
    p_prob.add_argument("-o", "--out", default="plots")
    p_prob.add_argument("--name", default="probability.png")
    p_prob.set_defaults(fn=cmd_probability)

    p_sweep = sub.add_parser("sweep", help="final P vs swept parameter")
    p_sweep.add_argument("sweep", help="sweep.csv path")
    p_sweep.add_argument("-o", "--out", default="plots")
    p_sweep.add_argument("--name", default="sweep.png")
    p_sweep.set_defaults(fn=cmd_sweep)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
