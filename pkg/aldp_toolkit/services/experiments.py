"""Experiment harness: mean, frequency, SGD and audit grids plus CSV output.

Jobs are keyed by (size, repetition). Each job regenerates its data from
``RandomSource(seed).derive(stream, size, repetition)`` and perturbs it once
per (mechanism, epsilon, delta) on a stream addressed by the grid indices,
so results do not depend on worker count or scheduling order.
"""
from __future__ import annotations

import json
import logging
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Callable, Iterable, List, Optional, Sequence, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel

from aldp_toolkit import __version__
from aldp_toolkit.exceptions import InsufficientUsers
from aldp_toolkit.models.core import (
    DuchiVariant,
    NumericMechanism,
    PrivacyBudget,
    Protocol,
    TieRule,
    parse_enum,
)
from aldp_toolkit.models.experiment import (
    AuditReport,
    ExperimentConfig,
    MseRecord,
    SgdRecord,
    VarianceRow,
)
from aldp_toolkit.models.training import LabeledData, ModelSpec, TrainingRun
from aldp_toolkit.services.audit import run_privacy_audit
from aldp_toolkit.services.categorical import (
    build_protocol_params,
    estimate_frequencies,
    perturb_categorical_batch,
    variance_star,
)
from aldp_toolkit.services.datasets import gen_gaussian_numeric, gen_regression_task, gen_zipf_categorical
from aldp_toolkit.services.gaussian import optimal_sigma
from aldp_toolkit.services.numeric import (
    max_admissible_delta,
    mech2_worst_case_variance,
    onedim_variance,
    optimal_k,
    perturb_numeric_batch,
)
from aldp_toolkit.services.randomness import RandomSource
from aldp_toolkit.services.sgd import evaluate, private_sgd_train

logger = logging.getLogger(__name__)

_DATA_STREAM = 0
_MECHANISM_STREAM = 1
_DELTA_BACKOFF = 1e-3


def _budgets(config: ExperimentConfig):
    for eps_index, epsilon in enumerate(config.epsilons):
        for delta_index, delta in enumerate(config.deltas):
            yield eps_index, delta_index, PrivacyBudget(epsilon, delta)


def _mean_job(config: ExperimentConfig, size: int, repetition: int) -> List[MseRecord]:
    root = RandomSource(config.seed)
    data = gen_gaussian_numeric(config.n_users, size, root.derive(_DATA_STREAM, size, repetition), config.gaussian_sd)
    truth = data.numeric.mean(axis=0)
    records = []
    for mech_index, name in enumerate(config.mechanisms):
        mechanism = parse_enum(name, NumericMechanism)
        for eps_index, delta_index, budget in _budgets(config):
            rng = root.derive(_MECHANISM_STREAM, size, repetition, mech_index, eps_index, delta_index)
            reports = perturb_numeric_batch(
                data.numeric,
                mechanism,
                budget,
                rng,
                tie_rule=config.tie_rule,
                duchi_variant=config.duchi_variant,
            )
            mse = float(np.mean((reports.mean(axis=0) - truth) ** 2))
            records.append(
                MseRecord(
                    mechanism=mechanism.value,
                    epsilon=budget.epsilon,
                    delta=budget.delta,
                    size=size,
                    n_users=config.n_users,
                    repetition=repetition,
                    mse=mse,
                )
            )
    return records


def _freq_job(config: ExperimentConfig, size: int, repetition: int) -> List[MseRecord]:
    root = RandomSource(config.seed)
    data = gen_zipf_categorical(config.n_users, size, config.zipf_exponent, root.derive(_DATA_STREAM, size, repetition))
    values = data.categorical[:, 0]
    truth = np.bincount(values, minlength=size) / config.n_users
    records = []
    for mech_index, name in enumerate(config.mechanisms):
        protocol = parse_enum(name, Protocol)
        for eps_index, delta_index, budget in _budgets(config):
            params = build_protocol_params(protocol, size, budget, prr_q=config.prr_q)
            rng = root.derive(_MECHANISM_STREAM, size, repetition, mech_index, eps_index, delta_index)
            estimate = estimate_frequencies(perturb_categorical_batch(values, params, rng), params)
            mse = float(np.mean((estimate.raw_frequencies - truth) ** 2))
            records.append(
                MseRecord(
                    mechanism=protocol.value,
                    epsilon=budget.epsilon,
                    delta=budget.delta,
                    size=size,
                    n_users=config.n_users,
                    repetition=repetition,
                    mse=mse,
                )
            )
    return records


def _training_delta(mechanism: NumericMechanism, dims: int, budget: PrivacyBudget, tie_rule: TieRule) -> PrivacyBudget:
    if mechanism != NumericMechanism.MECH1:
        return budget
    ceiling = max_admissible_delta(dims, tie_rule)
    if budget.delta < ceiling:
        return budget
    lowered = ceiling * _DELTA_BACKOFF
    logger.warning(
        "delta=%g is not admissible for Mechanism-1 at d=%d (must stay below %g); using %g",
        budget.delta, dims, ceiling, lowered,
    )
    return PrivacyBudget(budget.epsilon, lowered)


def _sgd_records(
    config: ExperimentConfig, train: LabeledData, test: LabeledData, size: int, repetition: int
) -> List[SgdRecord]:
    root = RandomSource(config.seed)
    spec = ModelSpec(
        task=config.sgd_task,
        dims=size,
        learning_rate=config.learning_rate,
        batch_size=config.batch_size,
    )
    records = []
    for mech_index, name in enumerate(config.mechanisms):
        mechanism = parse_enum(name, NumericMechanism)
        for eps_index, delta_index, budget in _budgets(config):
            used = _training_delta(mechanism, size, budget, config.tie_rule)
            rng = root.derive(_MECHANISM_STREAM, size, repetition, mech_index, eps_index, delta_index)
            run = private_sgd_train(train, spec, mechanism, used, rng, test_set=test, tie_rule=config.tie_rule)
            if config.metrics_dir is not None:
                log_name = f"{mechanism.value}_eps{budget.epsilon:g}_delta{budget.delta:g}_d{size}_rep{repetition}.csv"
                write_training_log(run, Path(config.metrics_dir) / log_name)
            records.append(
                SgdRecord(
                    mechanism=mechanism.value,
                    task=config.sgd_task,
                    epsilon=budget.epsilon,
                    delta=budget.delta,
                    delta_used=used.delta,
                    dims=size,
                    n_users=len(train),
                    repetition=repetition,
                    iterations=run.iterations,
                    metric=evaluate(run.theta, test, spec.task),
                )
            )
    return records


def _sgd_job(config: ExperimentConfig, size: int, repetition: int) -> List[SgdRecord]:
    root = RandomSource(config.seed)
    n_test = max(1, int(round(config.n_users * config.test_fraction)))
    data, _ = gen_regression_task(config.n_users + n_test, size, config.sgd_task, root.derive(_DATA_STREAM, size, repetition))
    train, test = data.subset(np.arange(config.n_users)), data.subset(np.arange(config.n_users, len(data)))
    return _sgd_records(config, train, test, size, repetition)


def _run_grid(config: ExperimentConfig, job: Callable, sort_key: Callable) -> list:
    tasks = [(size, repetition) for size in config.sizes for repetition in range(config.repetitions)]
    logger.info(
        "%s grid: %d jobs x %d mechanisms x %d budgets on %d worker(s)",
        config.task.value, len(tasks), len(config.mechanisms),
        len(config.epsilons) * len(config.deltas), config.workers,
    )
    records: list = []
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            futures = [pool.submit(job, config, size, repetition) for size, repetition in tasks]
            for future in futures:
                records.extend(future.result())
    else:
        for size, repetition in tasks:
            logger.info("size=%d repetition=%d", size, repetition)
            records.extend(job(config, size, repetition))
    return sorted(records, key=sort_key)


def _record_key(record) -> tuple:
    size = record.size if isinstance(record, MseRecord) else record.dims
    return (record.mechanism, size, record.epsilon, record.delta, record.repetition)


def run_mean_experiment(config: ExperimentConfig) -> List[MseRecord]:
    return _run_grid(config, _mean_job, _record_key)


def run_freq_experiment(config: ExperimentConfig) -> List[MseRecord]:
    return _run_grid(config, _freq_job, _record_key)


def run_sgd_experiment(config: ExperimentConfig) -> List[SgdRecord]:
    return _run_grid(config, _sgd_job, _record_key)


def run_sgd_on_data(config: ExperimentConfig, data: LabeledData) -> List[SgdRecord]:
    """SGD grid on a fixed dataset; every repetition draws a fresh train/test split."""
    size = data.features.shape[1]
    n_test = max(1, int(round(len(data) * config.test_fraction)))
    if n_test >= len(data):
        raise InsufficientUsers(f"{len(data)} rows leave no training users after the test split")
    records: List[SgdRecord] = []
    for repetition in range(config.repetitions):
        order = RandomSource(config.seed).derive(_DATA_STREAM, size, repetition).permutation(len(data))
        train, test = data.subset(order[n_test:]), data.subset(order[:n_test])
        logger.info("repetition=%d: %d training and %d test rows", repetition, len(train), len(test))
        records.extend(_sgd_records(config, train, test, size, repetition))
    return sorted(records, key=_record_key)


def run_audit_grid(
    mechanisms: Sequence[Union[NumericMechanism, Protocol]],
    sizes: Sequence[int],
    epsilons: Sequence[float],
    deltas: Sequence[float],
    *,
    tie_rule: TieRule = TieRule.STRICT,
    duchi_variant: DuchiVariant = DuchiVariant.FIXED_STRICT,
    seed: Optional[int] = None,
) -> List[AuditReport]:
    reports = []
    for mechanism in mechanisms:
        for size in sizes:
            for epsilon in epsilons:
                for delta in deltas:
                    reports.append(
                        run_privacy_audit(
                            mechanism,
                            size,
                            PrivacyBudget(epsilon, delta),
                            tie_rule=tie_rule,
                            duchi_variant=duchi_variant,
                            seed=seed,
                        )
                    )
    return reports


def emit_variance_table(
    epsilons: Iterable[float],
    deltas: Iterable[float],
    sizes: Iterable[int],
    *,
    prr_q: Optional[float] = None,
) -> List[VarianceRow]:
    """Per-user analytic variances for every mechanism and protocol.

    Numeric rows give the one-dimensional worst case (x = 0), Mechanism-2's
    worst case at d = size with its default k, and the numeric Gaussian
    sigma^2 at sensitivity 2. Categorical rows give Var* at k = size (OLH's
    parameter column is its chosen g). Gaussian rows are skipped at delta = 0.
    """
    rows: List[VarianceRow] = []
    sizes = list(sizes)
    for epsilon in epsilons:
        for delta in deltas:
            budget = PrivacyBudget(epsilon, delta)

            def add(mechanism: str, parameter: int, variance: float) -> None:
                rows.append(
                    VarianceRow(epsilon=epsilon, delta=delta, mechanism=mechanism, parameter=parameter, variance=variance)
                )

            add(NumericMechanism.ONEDIM.value, 1, float(onedim_variance(0.0, budget)))
            if delta > 0:
                add("OPT_GM_NUMERIC", 2, optimal_sigma(budget, 2.0).sigma ** 2)
            for size in sizes:
                add(NumericMechanism.MECH2.value, size, mech2_worst_case_variance(size, optimal_k(size, epsilon), budget))
                for protocol in (Protocol.GRR, Protocol.SPRR, Protocol.OLH, Protocol.OPT_GM):
                    if protocol == Protocol.OPT_GM and delta == 0:
                        continue
                    params = build_protocol_params(protocol, size, budget)
                    parameter = params.g if protocol == Protocol.OLH else size
                    add(protocol.value, parameter, variance_star(params))
                if prr_q is not None:
                    add(Protocol.PRR.value, size, variance_star(build_protocol_params(Protocol.PRR, size, budget, prr_q=prr_q)))
    return rows


def write_records(records: Sequence[BaseModel], path: Union[str, Path]) -> Path:
    """Write rows as RFC-4180 CSV with CRLF line endings."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame([record.model_dump(mode="json") for record in records])
    frame.to_csv(path, index=False, lineterminator="\r\n")
    logger.info("wrote %d rows to %s", len(frame), path)
    return path


def manifest_path(path: Union[str, Path]) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".manifest.json")


def write_manifest(payload: Union[BaseModel, dict], path: Union[str, Path]) -> Path:
    body = payload.model_dump(mode="json") if isinstance(payload, BaseModel) else payload
    target = manifest_path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(json.dumps({"tool_version": __version__, "config": body}, indent=2, sort_keys=True) + "\n")
    return target


def write_training_log(run: TrainingRun, path: Union[str, Path]) -> Path:
    frame = pd.DataFrame(
        [
            {"iteration": item.iteration, "loss": item.loss, "test_metric": item.test_metric}
            for item in run.metrics
        ]
    )
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, lineterminator="\r\n")
    return path
