"""Command-line entry point.

Subcommands (all take a config file; see steinflow.config for the key table):

    steinflow run <config> [--output PATH]
    steinflow sweep <config> --nu a,b,c [--particles n1,n2] [--output PATH]
    steinflow bench <config> --counts n1,n2,... [--output PATH]
    steinflow gaussian-oracle <config> --delta D [--output PATH]
    steinflow diagnose <config> [--output PATH]

Exit status is 0 on success and 1 on any error, with a message on stderr.
"""

import argparse
import sys

from . import harness
from .config import parse_config
from .errors import ConfigError


def _load(path: str):
    with open(path, "r", encoding="utf-8") as handle:
        return parse_config(handle.read())


def _csv_floats(text):
    return [float(tok) for tok in text.split(",")]


def _csv_ints(text):
    return [int(tok) for tok in text.split(",")]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="steinflow",
                                     description="Regularized SVGD experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run replicates and write metric rows")
    p_run.add_argument("config")
    p_run.add_argument("--output", default=None)

    p_sweep = sub.add_parser("sweep", help="cross nu values and particle counts")
    p_sweep.add_argument("config")
    p_sweep.add_argument("--nu", required=True, type=_csv_floats)
    p_sweep.add_argument("--particles", type=_csv_ints, default=None)
    p_sweep.add_argument("--output", default=None)

    p_bench = sub.add_parser("bench", help="per-iteration timing versus nu=1")
    p_bench.add_argument("config")
    p_bench.add_argument("--counts", required=True, type=_csv_ints)
    p_bench.add_argument("--timed", type=int, default=None,
                         help="timed iterations per point (min 20)")
    p_bench.add_argument("--output", default=None)

    p_oracle = sub.add_parser("gaussian-oracle",
                              help="compare particles with the closed-form covariance flow")
    p_oracle.add_argument("config")
    p_oracle.add_argument("--delta", required=True, type=float)
    p_oracle.add_argument("--output", default=None)

    p_diag = sub.add_parser("diagnose", help="KSD / regularized-KSD trajectory only")
    p_diag.add_argument("config")
    p_diag.add_argument("--output", default=None)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _load(args.config)
        if args.command == "run":
            path = harness.run_experiment(cfg, args.output)
        elif args.command == "sweep":
            counts = args.particles or [cfg.n_particles]
            path = harness.sweep(cfg, args.nu, counts, args.output)
        elif args.command == "bench":
            timed = args.timed if args.timed is not None else harness.BENCH_TIMED
            path = harness.bench_timing(cfg, args.counts, args.output,
                                        timed_iterations=timed)
        elif args.command == "gaussian-oracle":
            path = harness.gaussian_oracle(cfg, args.delta, args.output)
        else:
            path = harness.diagnose(cfg, args.output)
    except (OSError, ValueError, RuntimeError, ConfigError) as exc:
        print(f"steinflow: error: {exc}", file=sys.stderr)
        return 1
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
