"""Categorical frequency oracles under (epsilon, delta)-LDP.

Protocols: generalized randomized response (GRR), bit-vector randomized
response with a free q (PRR) or with p + q = 1 (SPRR), local hashing with a
given or optimal range (LH / OLH), and the Gaussian one-hot baseline
(Opt-GM). Every protocol is described by ``ProtocolParams``; the aggregator
only needs ``p_star`` and ``q_star``, the probabilities that a report
supports a value its user holds or does not hold.
"""
from __future__ import annotations

import logging
import math
from typing import Callable, Dict, Optional, Sequence, Union

import numpy as np

from aldp_toolkit.config import settings
from aldp_toolkit.exceptions import (
    DomainViolation,
    InvalidQ,
    MixedProtocolReports,
    NegativeDiscriminant,
    UnsupportedMechanism,
)
from aldp_toolkit.models.core import CategoricalValue, PrivacyBudget, Protocol
from aldp_toolkit.models.mechanisms import (
    AnalyticVariance,
    CategoricalReport,
    FrequencyEstimate,
    ProtocolParams,
    ReportBatch,
    SupportCounts,
)
from aldp_toolkit.services.gaussian import optimal_sigma
from aldp_toolkit.services.hashing import seeded_hash
from aldp_toolkit.services.randomness import RandomSource

logger = logging.getLogger(__name__)

_HASH_CHUNK = 8192
MAX_HASH_RANGE = 2**16 - 1


def _check_domain(k: int) -> None:
    if int(k) != k or k < 2:
        raise DomainViolation(f"domain size must be an integer >= 2, got {k}")


def grr_params(k: int, budget: PrivacyBudget) -> ProtocolParams:
    _check_domain(k)
    e, delta = budget.exp_epsilon, budget.delta
    p = (e + (k - 1) * delta) / (e + k - 1)
    q = (1 - delta) / (e + k - 1)
    return ProtocolParams(protocol=Protocol.GRR, k=k, budget=budget, p=p, q=q, p_star=p, q_star=q)


def sprr_params(k: int, budget: PrivacyBudget) -> ProtocolParams:
    _check_domain(k)
    e, delta = budget.exp_epsilon, budget.delta
    p = (e - math.sqrt(e * (1 - delta) + delta)) / (e - 1)
    q = 1 - p
    return ProtocolParams(protocol=Protocol.SPRR, k=k, budget=budget, p=p, q=q, p_star=p, q_star=q)


def prr_params(k: int, budget: PrivacyBudget, q_free: Optional[float] = None) -> ProtocolParams:
    """Bit-vector randomized response with the bit-flip bound tight for the given q.

    Without ``q_free`` the symmetric choice of SPRR is used.
    """
    _check_domain(k)
    q = sprr_params(k, budget).q if q_free is None else float(q_free)
    if not 0 < q < 1:
        raise InvalidQ(f"q must lie in (0, 1), got {q}")
    e, delta = budget.exp_epsilon, budget.delta
    p = (q * e + delta) / (1 - q + q * e)
    if p <= q or p > 1:
        raise InvalidQ(f"q={q} gives p={p}, which must satisfy q < p <= 1")
    return ProtocolParams(protocol=Protocol.PRR, k=k, budget=budget, p=p, q=q, p_star=p, q_star=q)


def lh_params(budget: PrivacyBudget, g: int, k: int = 2, protocol: Protocol = Protocol.LH) -> ProtocolParams:
    _check_domain(k)
    if int(g) != g or not 2 <= g <= MAX_HASH_RANGE:
        raise DomainViolation(f"hash range must be an integer in [2, {MAX_HASH_RANGE}], got {g}")
    e, delta = budget.exp_epsilon, budget.delta
    p = (e + (g - 1) * delta) / (e + g - 1)
    q = (1 - delta) / (e + g - 1)
    return ProtocolParams(protocol=protocol, k=k, budget=budget, p=p, q=q, p_star=p, q_star=1 / g, g=int(g))


def lh_variance_star(budget: PrivacyBudget, g: int, n: int = 1) -> float:
    e, delta = budget.exp_epsilon, budget.delta
    return n * (e + g - 1) ** 2 / ((g - 1) * (e + g * delta - 1) ** 2)


def _olh_grid_search(budget: PrivacyBudget) -> int:
    upper = int(math.ceil(10 * (budget.exp_epsilon + 1)))
    candidates = np.arange(2, max(upper, 2) + 1)
    variances = [lh_variance_star(budget, int(g)) for g in candidates]
    return int(candidates[int(np.argmin(variances))])


def _olh_closed_form(budget: PrivacyBudget, delta_threshold: float) -> float:
    e, delta = budget.exp_epsilon, budget.delta
    if delta < delta_threshold:
        return e + 1
    discriminant = (1 - delta) * (e + delta - 9 * e * delta - 1)
    if discriminant < 0:
        raise NegativeDiscriminant(
            f"closed-form hash range undefined for eps={budget.epsilon}, delta={delta}"
        )
    return (-3 * e * delta - math.sqrt(e - 1) * math.sqrt(discriminant) + e + 3 * delta - 1) / (2 * delta)


def olh_optimal_g(budget: PrivacyBudget, *, delta_threshold: Optional[float] = None) -> int:
    threshold = settings.olh_delta_threshold if delta_threshold is None else delta_threshold
    try:
        g_real = _olh_closed_form(budget, threshold)
    except NegativeDiscriminant as exc:
        logger.warning("%s; falling back to grid search", exc)
        return _olh_grid_search(budget)
    if not math.isfinite(g_real) or g_real <= 0:
        logger.warning("closed-form hash range %s is unusable; falling back to grid search", g_real)
        return _olh_grid_search(budget)
    candidates = sorted({max(2, math.floor(g_real)), max(2, math.ceil(g_real))})
    candidates = [min(g, MAX_HASH_RANGE) for g in candidates]
    return min(candidates, key=lambda g: (lh_variance_star(budget, g), g))


def olh_params(k: int, budget: PrivacyBudget) -> ProtocolParams:
    return lh_params(budget, olh_optimal_g(budget), k, protocol=Protocol.OLH)


def opt_gm_params(k: int, budget: PrivacyBudget) -> ProtocolParams:
    _check_domain(k)
    calibration = optimal_sigma(budget, math.sqrt(2))
    return ProtocolParams(
        protocol=Protocol.OPT_GM,
        k=k,
        budget=budget,
        p=1.0,
        q=0.0,
        p_star=1.0,
        q_star=0.0,
        sigma=calibration.sigma,
    )


def build_protocol_params(
    protocol: Protocol,
    k: int,
    budget: PrivacyBudget,
    *,
    g: Optional[int] = None,
    prr_q: Optional[float] = None,
) -> ProtocolParams:
    if protocol == Protocol.GRR:
        return grr_params(k, budget)
    if protocol == Protocol.PRR:
        return prr_params(k, budget, prr_q)
    if protocol == Protocol.SPRR:
        return sprr_params(k, budget)
    if protocol == Protocol.LH:
        return lh_params(budget, g if g is not None else k, k)
    if protocol == Protocol.OLH:
        return olh_params(k, budget)
    if protocol == Protocol.OPT_GM:
        return opt_gm_params(k, budget)
    raise UnsupportedMechanism(f"no categorical protocol named {protocol}")


def perturb_categorical_batch(values, params: ProtocolParams, rng: RandomSource) -> ReportBatch:
    values = np.asarray(values, dtype=np.int64)
    if values.size and (values.min() < 0 or values.max() >= params.k):
        raise DomainViolation(f"categorical values must lie in [0, {params.k - 1}]")
    n, k = values.shape[0], params.k
    protocol = params.protocol

    if protocol == Protocol.GRR:
        keep = rng.bernoulli(params.p, n)
        offset = rng.integers(k, n, low=1)
        reported = np.where(keep, values, (values + offset) % k)
        return ReportBatch(protocol=protocol, k=k, values=reported)

    if protocol in (Protocol.PRR, Protocol.SPRR):
        bits = rng.uniform((n, k)) < params.q
        bits[np.arange(n), values] = rng.uniform(n) < params.p
        return ReportBatch(protocol=protocol, k=k, values=bits)

    if protocol in (Protocol.LH, Protocol.OLH):
        g = params.g
        seeds = rng.uint64(n)
        hashed = seeded_hash(seeds, values, g)
        keep = rng.bernoulli(params.p, n)
        offset = rng.integers(g, n, low=1)
        reported = np.where(keep, hashed, (hashed + offset) % g)
        return ReportBatch(protocol=protocol, k=k, values=reported, seeds=seeds, g=g)

    if protocol == Protocol.OPT_GM:
        one_hot = np.zeros((n, k))
        one_hot[np.arange(n), values] = 1.0
        noisy = one_hot + params.sigma * rng.gaussian((n, k))
        return ReportBatch(protocol=protocol, k=k, values=noisy)

    raise UnsupportedMechanism(f"no categorical protocol named {protocol}")


def perturb_categorical(value: CategoricalValue, params: ProtocolParams, rng: RandomSource) -> CategoricalReport:
    if value.domain_size != params.k:
        raise DomainViolation(f"value from a domain of size {value.domain_size}, protocol built for {params.k}")
    return perturb_categorical_batch(np.array([value.index]), params, rng).report(0)


def _as_batch(reports: Union[ReportBatch, Sequence[CategoricalReport]]) -> ReportBatch:
    return reports if isinstance(reports, ReportBatch) else ReportBatch.from_reports(reports)


def support_counts(reports: Union[ReportBatch, Sequence[CategoricalReport]], params: ProtocolParams) -> SupportCounts:
    batch = _as_batch(reports)
    if batch.protocol != params.protocol or batch.k != params.k or batch.g != params.g:
        raise MixedProtocolReports(
            f"{batch.protocol.value} reports (k={batch.k}, g={batch.g}) cannot be aggregated under "
            f"{params.protocol.value} parameters (k={params.k}, g={params.g})"
        )
    k = params.k
    if batch.protocol == Protocol.GRR:
        if batch.values.size and (batch.values.min() < 0 or batch.values.max() >= k):
            raise DomainViolation(f"GRR reports must lie in [0, {k - 1}]")
        counts = np.bincount(batch.values, minlength=k).astype(float)
    elif batch.protocol in (Protocol.LH, Protocol.OLH):
        counts = np.zeros(k)
        domain = np.arange(k)[np.newaxis, :]
        for start in range(0, len(batch), _HASH_CHUNK):
            seeds = batch.seeds[start:start + _HASH_CHUNK, np.newaxis]
            ys = batch.values[start:start + _HASH_CHUNK, np.newaxis]
            counts += (seeded_hash(seeds, domain, params.g) == ys).sum(axis=0)
    else:
        counts = np.asarray(batch.values, dtype=float).sum(axis=0)
    return SupportCounts(protocol=batch.protocol, counts=counts, n=len(batch))


def _post_process(raw_counts: np.ndarray, protocol: Protocol) -> np.ndarray:
    counts = np.rint(raw_counts) if protocol == Protocol.OPT_GM else raw_counts.copy()
    return np.clip(counts, 0.0, None)


def estimate_from_support(support: SupportCounts, params: ProtocolParams) -> FrequencyEstimate:
    if support.protocol != params.protocol:
        raise MixedProtocolReports("support counts and parameters disagree on the protocol")
    if params.protocol == Protocol.OPT_GM:
        raw = support.counts.astype(float)
    else:
        raw = (support.counts - support.n * params.q_star) / (params.p_star - params.q_star)
    counts = _post_process(raw, params.protocol)
    total = counts.sum()
    if total > 0:
        frequencies = counts / total
    else:
        logger.warning("all %d post-processed counts are zero; reporting a uniform distribution", params.k)
        frequencies = np.full(params.k, 1.0 / params.k)
    return FrequencyEstimate(raw_counts=raw, counts=counts, frequencies=frequencies, n=support.n)


def estimate_frequencies(
    reports: Union[ReportBatch, Sequence[CategoricalReport]],
    params: ProtocolParams,
) -> FrequencyEstimate:
    return estimate_from_support(support_counts(reports, params), params)


def variance_star(params: ProtocolParams, n: int = 1) -> float:
    if params.protocol == Protocol.OPT_GM:
        return n * params.sigma**2
    gap = params.p_star - params.q_star
    return n * params.q_star * (1 - params.q_star) / gap**2


def analytic_variance(params: ProtocolParams, n: int, f_v: float) -> AnalyticVariance:
    approximate = variance_star(params, n)
    if params.protocol == Protocol.OPT_GM:
        return AnalyticVariance(exact=approximate, approximate=approximate)
    gap = params.p_star - params.q_star
    exact = approximate + n * f_v * (1 - params.p_star - params.q_star) / gap
    return AnalyticVariance(exact=exact, approximate=approximate)


def _grr_closed_form(params: ProtocolParams, n: int) -> float:
    e, delta, k = params.budget.exp_epsilon, params.budget.delta, params.k
    return n * (1 - delta) * (e + k - 2 + delta) / (e + k * delta - 1) ** 2


def _sprr_closed_form(params: ProtocolParams, n: int) -> float:
    e, delta = params.budget.exp_epsilon, params.budget.delta
    s = math.sqrt(e * (1 - delta) + delta)
    return n * (e - s) * (s - 1) / (e + 1 - 2 * s) ** 2


def _prr_closed_form(params: ProtocolParams, n: int) -> float:
    e, delta, q = params.budget.exp_epsilon, params.budget.delta, params.q
    p = (q * e + delta) / (1 - q + q * e)
    return n * q * (1 - q) / (p - q) ** 2


def _lh_closed_form(params: ProtocolParams, n: int) -> float:
    return lh_variance_star(params.budget, params.g, n)


def _gm_closed_form(params: ProtocolParams, n: int) -> float:
    return n * params.sigma**2


CLOSED_FORM_VARIANCE: Dict[Protocol, Callable[[ProtocolParams, int], float]] = {
    Protocol.GRR: _grr_closed_form,
    Protocol.PRR: _prr_closed_form,
    Protocol.SPRR: _sprr_closed_form,
    Protocol.LH: _lh_closed_form,
    Protocol.OLH: _lh_closed_form,
    Protocol.OPT_GM: _gm_closed_form,
}


def closed_form_variance_star(params: ProtocolParams, n: int = 1) -> float:
    return CLOSED_FORM_VARIANCE[params.protocol](params, n)
