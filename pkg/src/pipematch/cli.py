"""``decode`` command line: single runs, sweeps, and plot-data extraction."""

from __future__ import annotations

import argparse
import sys

from .circuits import FAMILIES
from .pipeline import (
    RunConfig,
    RunStats,
    pick_rounds,
    plotdata_files,
    read_csv,
    run,
    write_csv,
)


def _onoff(value: str) -> bool:
    if value not in ("on", "off"):
        raise argparse.ArgumentTypeError("expected 'on' or 'off'")
    return value == "on"


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="decode",
        description="Pipelined correlated matching decoder for surface codes.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="one Monte-Carlo data point")
    p_run.add_argument("--family", required=True, choices=FAMILIES)
    p_run.add_argument("--distance", required=True, type=int)
    p_run.add_argument("--p", required=True, type=float)
    p_run.add_argument("--rounds", required=True, type=int)
    p_run.add_argument("--shots", required=True, type=int)
    p_run.add_argument("--correlated", type=_onoff, default=True,
                       metavar="{on|off}")
    p_run.add_argument("--stage2", type=_onoff, default=False,
                       metavar="{on|off}")
    p_run.add_argument("--seed", type=int, default=0)
    p_run.add_argument("--workers", type=int, default=1)
    p_run.add_argument("--out", default=None,
                       help="CSV output path (default: stdout)")

    p_sweep = sub.add_parser("sweep", help="grid of data points from a config file")
    p_sweep.add_argument("--config", required=True,
                         help="key=value file; see `decode sweep --help-format`")

    p_plot = sub.add_parser("plotdata",
                            help="split a results CSV into per-curve data files")
    p_plot.add_argument("--csv", required=True)
    p_plot.add_argument("--prefix", required=True)

    return parser


SWEEP_KEYS = """\
family      = unrotated            # or toric / rotated
distances   = 3,5                  # comma separated odd distances
ps          = 0.004,0.008          # comma separated physical error rates
shots       = 100000
rounds      = auto                 # integer, or 'auto' to target P ~ 10%
correlated  = on                   # on / off / both
stage2      = off
seed        = 0
workers     = 1
out         = sweep.csv
"""


def _parse_sweep_config(path: str) -> dict:
    opts = {
        "family": "unrotated", "distances": "3", "ps": "0.01",
        "shots": "1000", "rounds": "auto", "correlated": "on",
        "stage2": "off", "seed": "0", "workers": "1", "out": "sweep.csv",
    }
    with open(path) as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"bad sweep config line: {line!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in opts:
                raise ValueError(f"unknown sweep config key {key!r}")
            opts[key] = value
    return opts


def _cmd_run(args) -> int:
    config = RunConfig(args.family, args.distance, args.p, args.rounds,
                       args.shots, correlated=args.correlated,
                       stage2_prematch=args.stage2, seed=args.seed,
                       workers=args.workers)
    stats = run(config)
    write_csv([stats], args.out if args.out else sys.stdout)
    return 0


def _cmd_sweep(args) -> int:
    opts = _parse_sweep_config(args.config)
    family = opts["family"]
    distances = [int(x) for x in opts["distances"].split(",") if x.strip()]
    ps = [float(x) for x in opts["ps"].split(",") if x.strip()]
    corr_modes = ([True, False] if opts["correlated"] == "both"
                  else [opts["correlated"] == "on"])
    rows: list[RunStats] = []
    for d in distances:
        for p in ps:
            if opts["rounds"] == "auto":
                rounds = pick_rounds(family, d, p, seed=int(opts["seed"]))
            else:
                rounds = int(opts["rounds"])
            for corr in corr_modes:
                config = RunConfig(
                    family, d, p, rounds, int(opts["shots"]), correlated=corr,
                    stage2_prematch=opts["stage2"] == "on",
                    seed=int(opts["seed"]), workers=int(opts["workers"]))
                rows.append(run(config))
    write_csv(rows, opts["out"])
    print(f"wrote {len(rows)} rows to {opts['out']}")
    return 0


def _cmd_plotdata(args) -> int:
    stats = read_csv(args.csv)
    for path in plotdata_files(stats, args.prefix):
        print(path)
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "run":
        return _cmd_run(args)
    if args.command == "sweep":
        return _cmd_sweep(args)
    return _cmd_plotdata(args)


if __name__ == "__main__":
    sys.exit(main())
