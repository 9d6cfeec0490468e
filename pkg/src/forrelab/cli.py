"""Command-line entry point: ``forrelab <subcommand> [options]``."""
from __future__ import annotations

import argparse
import logging
import sys

from . import experiments

SUBCOMMANDS = ("concentration", "tau-tail", "rounding", "dynkin", "advantage", "suite")

log = logging.getLogger("forrelab")


def _epsilon(text: str):
    return text if text == "default" else float(text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="forrelab", description=__doc__)
    parser.add_argument("experiment", choices=SUBCOMMANDS)
    parser.add_argument("--config", help="YAML config file (default: packaged acceptance profile)")
    parser.add_argument("--profile", default="acceptance", choices=("acceptance", "quick"),
                        help="packaged profile used when --config is absent")
    parser.add_argument("--n", dest="N", type=int, help="dimension N = 2n")
    parser.add_argument("--k", type=int)
    parser.add_argument("--epsilon", type=_epsilon, help="horizon, or 'default' for 1/(28 k^2 ln N)")
    parser.add_argument("--delta", type=float, help="Euler step (default epsilon/64)")
    parser.add_argument("--trials", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--workers", type=int, help="worker processes (default $FORRELAB_WORKERS or 1)")
    parser.add_argument("--output", help="write the table here instead of stdout")
    parser.add_argument("--format", choices=("csv", "json"))
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    cfg = experiments.load_config(args.config, profile=args.profile, experiment=args.experiment,
                                  N=args.N, k=args.k, epsilon=args.epsilon, delta=args.delta,
                                  trials=args.trials, seed=args.seed, workers=args.workers,
                                  output=args.output, format=args.format)
    if args.experiment == "suite":
        if any(v is not None for v in (args.N, args.k, args.epsilon, args.delta, args.trials)):
            log.warning("per-experiment flags are ignored by 'suite'; edit the config instead")
        table = experiments.run_suite(cfg)
    else:
        table = experiments.run_check(args.experiment, cfg)
    text = table.render(cfg.format)
    if cfg.output:
        with open(cfg.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    for row in table.failures():
        log.warning("FAIL %s %s: estimate=%.6g threshold=%.6g (%s)", row.check, row.metric,
                    row.estimate, row.threshold, row.rule)
    return 0 if table.passed else 1


if __name__ == "__main__":
    sys.exit(main())
