# aldp_toolkit/commands/bench.py
"""Benchmark subcommands: bench-mean, bench-freq, variance-table, train, audit."""
from __future__ import annotations

import argparse
import logging
from pathlib import Path
from typing import List, Optional

from aldp_toolkit.config import settings
from aldp_toolkit.exceptions import SchemaError
from aldp_toolkit.models.core import DuchiVariant, NumericMechanism, Protocol, Task, TieRule, parse_enum
from aldp_toolkit.models.experiment import ExperimentConfig, ExperimentTask
from aldp_toolkit.services.datasets import load_csv_dataset, to_labeled_data
from aldp_toolkit.services.experiments import (
    emit_variance_table,
    run_audit_grid,
    run_freq_experiment,
    run_mean_experiment,
    run_sgd_experiment,
    run_sgd_on_data,
    write_manifest,
    write_records,
)

logger = logging.getLogger(__name__)


def _split(text: Optional[str], default: str) -> List[str]:
    return [item.strip() for item in (text or default).split(",") if item.strip()]


def _default_floats(text: str) -> List[float]:
    return [float(item) for item in text.split(",")]


def _output(args: argparse.Namespace, name: str) -> Path:
    return Path(args.out) if args.out else settings.output_dir / f"{name}.csv"


def _scale(args: argparse.Namespace, full_users: int) -> tuple[int, int]:
    if args.quick:
        users, reps = settings.quick_users, settings.quick_repetitions
    else:
        users, reps = full_users, settings.repetitions
    return args.n or users, args.reps or reps


def _config(
    args: argparse.Namespace,
    task: ExperimentTask,
    mechanisms: List[str],
    sizes: List[int],
    full_users: int,
    **extra,
) -> ExperimentConfig:
    n_users, repetitions = _scale(args, full_users)
    return ExperimentConfig(
        task=task,
        mechanisms=mechanisms,
        epsilons=args.eps or _default_floats(settings.default_epsilons),
        deltas=args.delta or _default_floats(settings.default_deltas),
        sizes=args.sizes or sizes,
        n_users=n_users,
        repetitions=repetitions,
        seed=args.seed,
        tie_rule=parse_enum(args.tie_rule, TieRule),
        workers=args.workers,
        **extra,
    )


def _finish(records, config: ExperimentConfig, path: Path) -> int:
    write_records(records, path)
    write_manifest(config, path)
    logger.info("%s results in %s", config.task.value, path)
    return 0


def bench_mean(args: argparse.Namespace) -> int:
    mechanisms = _split(args.mechanism, "MECH1,MECH2,GAUSSIAN")
    for name in mechanisms:
        parse_enum(name, NumericMechanism)
    config = _config(
        args,
        ExperimentTask.MEAN,
        mechanisms,
        [1, 5, 10],
        settings.numeric_users,
        gaussian_sd=settings.gaussian_sd,
        duchi_variant=parse_enum(args.duchi_variant, DuchiVariant),
    )
    return _finish(run_mean_experiment(config), config, _output(args, "bench_mean"))


def bench_freq(args: argparse.Namespace) -> int:
    protocols = _split(args.protocol, "GRR,SPRR,OLH,OPT_GM")
    for name in protocols:
        parse_enum(name, Protocol)
    config = _config(
        args,
        ExperimentTask.FREQ,
        protocols,
        [8, 32, 128],
        settings.categorical_users,
        zipf_exponent=args.zipf,
        prr_q=args.prr_q,
    )
    return _finish(run_freq_experiment(config), config, _output(args, "bench_freq"))


def variance_table(args: argparse.Namespace) -> int:
    epsilons = args.eps or [round(0.1 * step, 1) for step in range(1, 101)]
    deltas = args.delta or _default_floats(settings.default_deltas)
    sizes = args.sizes or [2, 8, 32]
    rows = emit_variance_table(epsilons, deltas, sizes, prr_q=args.prr_q)
    path = _output(args, "variance_table")
    write_records(rows, path)
    write_manifest(
        {"task": ExperimentTask.VARIANCE_TABLE.value, "epsilons": epsilons, "deltas": deltas,
         "sizes": sizes, "prr_q": args.prr_q},
        path,
    )
    return 0


def train(args: argparse.Namespace) -> int:
    mechanisms = _split(args.mechanism, "NON_PRIVATE,MECH1,MECH2,GAUSSIAN")
    for name in mechanisms:
        parse_enum(name, NumericMechanism)
    config = _config(
        args,
        ExperimentTask.SGD,
        mechanisms,
        [5],
        settings.training_users,
        sgd_task=parse_enum(args.task, Task),
        learning_rate=args.lr,
        batch_size=args.batch_size,
        test_fraction=settings.test_fraction,
        metrics_dir=args.metrics_dir,
    )
    if args.input is None:
        return _finish(run_sgd_experiment(config), config, _output(args, "train"))

    if args.schema is None or args.label is None:
        raise SchemaError("training on --input needs --schema and --label")
    data = to_labeled_data(load_csv_dataset(args.input, args.schema), args.label, config.sgd_task)
    config = config.model_copy(update={"sizes": [data.features.shape[1]], "n_users": len(data)})
    path = _output(args, "train")
    write_records(run_sgd_on_data(config, data), path)
    write_manifest(
        {**config.model_dump(mode="json"), "input": str(args.input), "schema": str(args.schema), "label": args.label},
        path,
    )
    logger.info("%s results on %s in %s", config.task.value, args.input, path)
    return 0


def _audit_mechanism(name: str):
    try:
        return parse_enum(name, NumericMechanism)
    except ValueError:
        return parse_enum(name, Protocol)


def audit(args: argparse.Namespace) -> int:
    names = _split(args.mechanism, "") + _split(args.protocol, "")
    mechanisms = [_audit_mechanism(name) for name in names or _split(None, "ONEDIM,MECH1,DUCHI")]
    sizes = args.sizes or [1, 2, 3]
    epsilons = args.eps or [0.5, 1.0, 4.0]
    deltas = args.delta or [0.0, 1e-4, 0.05]
    tie_rule = parse_enum(args.tie_rule, TieRule)
    duchi_variant = parse_enum(args.duchi_variant, DuchiVariant)
    reports = run_audit_grid(
        mechanisms, sizes, epsilons, deltas, tie_rule=tie_rule, duchi_variant=duchi_variant, seed=args.seed
    )
    path = _output(args, "audit")
    write_records(reports, path)
    write_manifest(
        {
            "task": ExperimentTask.PRIVACY_AUDIT.value,
            "mechanisms": [mechanism.value for mechanism in mechanisms],
            "sizes": sizes,
            "epsilons": epsilons,
            "deltas": deltas,
            "tie_rule": tie_rule.value,
            "duchi_variant": duchi_variant.value,
            "seed": args.seed,
        },
        path,
    )
    failed = [report for report in reports if not report.passed]
    logger.info("%d of %d audits passed", len(reports) - len(failed), len(reports))
    return 1 if failed else 0
