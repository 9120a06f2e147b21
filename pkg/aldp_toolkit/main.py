"""ALDP Toolkit - command-line entry point."""
from __future__ import annotations

import argparse
import logging
import sys
from typing import List, Optional

from aldp_toolkit import __version__
from aldp_toolkit.commands import bench, reports
from aldp_toolkit.config import settings
from aldp_toolkit.exceptions import AldpError

logger = logging.getLogger("aldp_toolkit")


def _float_list(text: str) -> List[float]:
    try:
        return [float(item) for item in text.split(",") if item.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers, got '{text}'") from exc


def _int_list(text: str) -> List[int]:
    try:
        return [int(item) for item in text.split(",") if item.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of integers, got '{text}'") from exc


def _common_flags() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=settings.seed, help="master seed")
    common.add_argument("--eps", type=_float_list, default=None, help="epsilon values, comma separated")
    common.add_argument("--delta", type=_float_list, default=None, help="delta values, comma separated")
    common.add_argument("--n", type=int, default=None, help="number of users")
    common.add_argument("--dims", "--domain", dest="sizes", type=_int_list, default=None,
                        help="dimensions d (numeric) or domain sizes k (categorical)")
    common.add_argument("--reps", type=int, default=None, help="repetitions per grid point")
    common.add_argument("--mechanism", type=str, default=None, help="numeric mechanisms, comma separated")
    common.add_argument("--protocol", type=str, default=None, help="categorical protocols, comma separated")
    common.add_argument("--tie-rule", type=str, default=settings.tie_rule, help="STRICT or INCLUSIVE")
    common.add_argument("--out", type=str, default=None, help="output CSV path")
    common.add_argument("--quick", action="store_true", help="CI scale: fewer users and repetitions")
    common.add_argument("--workers", type=int, default=settings.workers, help="parallel worker processes")
    common.add_argument("--log-level", type=str, default=None, help="logging level")
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aldp_toolkit",
        description="Approximate local differential privacy mechanisms and desk-scale benchmarks.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = _common_flags()
    commands = parser.add_subparsers(dest="command", required=True)

    perturb = commands.add_parser("perturb", parents=[common], help="perturb a CSV dataset")
    perturb.add_argument("--input", required=True, help="dataset CSV")
    perturb.add_argument("--schema", required=True, help="JSON schema sidecar")
    perturb.add_argument("--prr-q", type=float, default=None, help="explicit q for PRR")
    perturb.set_defaults(handler=reports.perturb)

    estimate = commands.add_parser("estimate", parents=[common], help="estimate means and frequencies from reports")
    estimate.add_argument("--reports", required=True, help="reports CSV written by perturb")
    estimate.set_defaults(handler=reports.estimate)

    bench_mean = commands.add_parser("bench-mean", parents=[common], help="numeric mean-estimation benchmark")
    bench_mean.add_argument("--duchi-variant", type=str, default="FIXED_STRICT")
    bench_mean.set_defaults(handler=bench.bench_mean)

    bench_freq = commands.add_parser("bench-freq", parents=[common], help="categorical frequency benchmark")
    bench_freq.add_argument("--zipf", type=float, default=settings.zipf_exponent, help="Zipf exponent")
    bench_freq.add_argument("--prr-q", type=float, default=None, help="explicit q for PRR")
    bench_freq.set_defaults(handler=bench.bench_freq)

    variance = commands.add_parser("variance-table", parents=[common], help="analytic variance table")
    variance.add_argument("--prr-q", type=float, default=None, help="add PRR rows at this q")
    variance.set_defaults(handler=bench.variance_table)

    train = commands.add_parser("train", parents=[common], help="private SGD benchmark")
    train.add_argument("--task", type=str, default="LINEAR", help="LINEAR, LOGISTIC or SVM")
    train.add_argument("--lr", type=float, default=settings.learning_rate, help="learning rate")
    train.add_argument("--batch-size", type=int, default=settings.batch_size)
    train.add_argument("--metrics-dir", type=str, default=None, help="write per-iteration logs here")
    train.add_argument("--input", default=None, help="train on this dataset CSV instead of synthetic data")
    train.add_argument("--schema", default=None, help="JSON schema sidecar for --input")
    train.add_argument("--label", default=None, help="numeric target column of --input")
    train.set_defaults(handler=bench.train)

    audit = commands.add_parser("audit", parents=[common], help="exhaustive privacy audit")
    audit.add_argument("--duchi-variant", type=str, default="FIXED_STRICT")
    audit.set_defaults(handler=bench.audit)

    return parser


def configure_logging(level: str) -> None:
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level or settings.log_level)
    try:
        return args.handler(args)
    except AldpError as exc:
        logger.error("%s: %s", type(exc).__name__, exc)
        return 2
    except ValueError as exc:
        logger.error("invalid argument: %s", exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
