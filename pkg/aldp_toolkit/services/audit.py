"""Exhaustive privacy audit of discrete-output mechanisms.

For small dimensions or domains the full conditional output distribution
P[y | x] is built analytically for every admissible input. The audit reports

    max over x, x', y of  P[y | x] - e^eps * P[y | x']

together with the worst likelihood ratio. Numeric inputs range over the
vertices {-1, 1}^d, where the ratio of every mechanism here is extremal.
"""
from __future__ import annotations

import itertools
import logging
import math
from typing import Optional, Union

import numpy as np

from aldp_toolkit.config import settings
from aldp_toolkit.exceptions import DomainTooLarge, UnsupportedMechanism
from aldp_toolkit.models.core import DuchiVariant, NumericMechanism, PrivacyBudget, Protocol, TieRule
from aldp_toolkit.models.experiment import AuditReport
from aldp_toolkit.services.categorical import build_protocol_params
from aldp_toolkit.services.hashing import seeded_hash
from aldp_toolkit.services.numeric import (
    duchi_params,
    mech1_output_distribution,
    mech1_params,
    onedim_magnitude,
    onedim_positive_probability,
    optimal_k,
)
from aldp_toolkit.services.randomness import RandomSource

logger = logging.getLogger(__name__)

Mechanism = Union[NumericMechanism, Protocol]

_AUDIT_SEEDS = 16


def _vertices(d: int) -> np.ndarray:
    return np.array(list(itertools.product((-1.0, 1.0), repeat=d)))


def _mech1_matrix(params) -> np.ndarray:
    return np.array([mech1_output_distribution(x, params)[1] for x in _vertices(params.d)])


def _mech2_matrix(d: int, budget: PrivacyBudget, k: Optional[int]) -> np.ndarray:
    k = optimal_k(d, budget.epsilon) if k is None else k
    sub = budget.split(k)
    subsets = list(itertools.combinations(range(d), k))
    outputs = [(subset, signs) for subset in subsets for signs in itertools.product((-1.0, 1.0), repeat=k)]
    rows = []
    for x in _vertices(d):
        positive = onedim_positive_probability(x, sub)
        row = []
        for subset, signs in outputs:
            probability = 1.0 / len(subsets)
            for j, sign in zip(subset, signs):
                probability *= positive[j] if sign > 0 else 1.0 - positive[j]
            row.append(probability)
        rows.append(row)
    return np.array(rows)


def _onedim_matrix(budget: PrivacyBudget) -> np.ndarray:
    positive = onedim_positive_probability(np.array([-1.0, 1.0]), budget)
    return np.column_stack([positive, 1.0 - positive])


def _bit_matrix(k: int, p: float, q: float) -> np.ndarray:
    outputs = np.array(list(itertools.product((0, 1), repeat=k)), dtype=bool)
    rows = []
    for value in range(k):
        keep = np.where(np.arange(k) == value, p, q)
        rows.append(np.prod(np.where(outputs, keep, 1.0 - keep), axis=1))
    return np.array(rows)


def _hash_matrix(params, rng: RandomSource) -> np.ndarray:
    """Rows are values, columns are (seed, y) outputs for a handful of fixed seeds."""
    seeds = rng.uint64(_AUDIT_SEEDS)
    blocks = []
    for seed in seeds:
        hashed = seeded_hash(np.array([seed]), np.arange(params.k), params.g)
        blocks.append(np.where(hashed[:, np.newaxis] == np.arange(params.g), params.p, params.q) / _AUDIT_SEEDS)
    return np.hstack(blocks)


def conditional_matrix(
    mechanism: Mechanism,
    size: int,
    budget: PrivacyBudget,
    *,
    tie_rule: TieRule = TieRule.STRICT,
    duchi_variant: DuchiVariant = DuchiVariant.FIXED_STRICT,
    prr_q: Optional[float] = None,
    k_override: Optional[int] = None,
    seed: Optional[int] = None,
) -> np.ndarray:
    """Matrix of P[output | input]; one row per input, one column per output."""
    if isinstance(mechanism, NumericMechanism):
        if size > settings.audit_max_dims:
            raise DomainTooLarge(f"numeric audit is limited to d <= {settings.audit_max_dims}, got {size}")
        if mechanism == NumericMechanism.MECH1:
            return _mech1_matrix(mech1_params(size, budget, tie_rule))
        if mechanism == NumericMechanism.DUCHI:
            return _mech1_matrix(duchi_params(size, budget.epsilon, duchi_variant))
        if mechanism == NumericMechanism.ONEDIM:
            return _onedim_matrix(budget)
        if mechanism == NumericMechanism.MECH2:
            return _mech2_matrix(size, budget, k_override)
        raise UnsupportedMechanism(f"{mechanism.value} has a continuous output and cannot be audited exhaustively")

    if size > settings.audit_max_domain:
        raise DomainTooLarge(f"categorical audit is limited to k <= {settings.audit_max_domain}, got {size}")
    params = build_protocol_params(mechanism, size, budget, prr_q=prr_q)
    if mechanism == Protocol.GRR:
        return np.where(np.eye(size, dtype=bool), params.p, params.q)
    if mechanism in (Protocol.PRR, Protocol.SPRR):
        return _bit_matrix(size, params.p, params.q)
    if mechanism in (Protocol.LH, Protocol.OLH):
        seed = settings.seed if seed is None else seed
        return _hash_matrix(params, RandomSource(seed).derive(size))
    raise UnsupportedMechanism(f"{mechanism.value} has a continuous output and cannot be audited exhaustively")


def audit_matrix(matrix: np.ndarray, epsilon: float) -> tuple[float, float]:
    """Worst additive excess and worst likelihood ratio over input pairs and outputs."""
    highest = matrix.max(axis=0)
    lowest = matrix.min(axis=0)
    excess = float(np.max(highest - math.exp(epsilon) * lowest))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(highest > 0, highest / lowest, 1.0)
    return excess, float(np.max(ratios))


def run_privacy_audit(
    mechanism: Mechanism,
    size: int,
    budget: PrivacyBudget,
    *,
    tie_rule: TieRule = TieRule.STRICT,
    duchi_variant: DuchiVariant = DuchiVariant.FIXED_STRICT,
    prr_q: Optional[float] = None,
    tolerance: Optional[float] = None,
    seed: Optional[int] = None,
) -> AuditReport:
    tolerance = settings.audit_tolerance if tolerance is None else tolerance
    matrix = conditional_matrix(
        mechanism, size, budget, tie_rule=tie_rule, duchi_variant=duchi_variant, prr_q=prr_q, seed=seed
    )
    # Duchi is a pure-LDP baseline: audited against delta = 0
    delta = 0.0 if mechanism == NumericMechanism.DUCHI else budget.delta
    excess, ratio = audit_matrix(matrix, budget.epsilon)
    report = AuditReport(
        mechanism=_label(mechanism, tie_rule, duchi_variant),
        size=size,
        epsilon=budget.epsilon,
        delta=delta,
        max_excess=excess,
        max_ratio=ratio,
        slack=delta - excess,
        passed=excess <= delta + tolerance,
    )
    if not report.passed:
        logger.warning(
            "%s fails the audit at d/k=%d, eps=%g: excess %.3e over delta=%g (ratio %.4g vs e^eps=%.4g)",
            report.mechanism, size, budget.epsilon, excess, delta, ratio, math.exp(budget.epsilon),
        )
    return report


def _label(mechanism: Mechanism, tie_rule: TieRule, duchi_variant: DuchiVariant) -> str:
    if mechanism == NumericMechanism.MECH1:
        return f"{mechanism.value}_{tie_rule.value}"
    if mechanism == NumericMechanism.DUCHI:
        return f"{mechanism.value}_{duchi_variant.value}"
    return mechanism.value
