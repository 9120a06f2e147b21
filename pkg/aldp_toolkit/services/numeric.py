"""Numeric perturbation mechanisms for tuples in [-1, 1]^d.

Covers the sign-vector mechanism (Mechanism-1), the one-dimensional
two-point mechanism, the sampling mechanism built on it (Mechanism-2), the
pure-LDP Duchi baseline with its even-dimension fixes, and the Gaussian
baseline. Batch functions take an (N, d) matrix and a single RandomSource;
the per-tuple operations delegate to them.
"""
from __future__ import annotations

import itertools
import math
from typing import Optional, Tuple

import numpy as np
from scipy.optimize import brentq

from aldp_toolkit.config import settings
from aldp_toolkit.exceptions import (
    CombinatorialOverflow,
    ConstraintViolated,
    DimensionMismatch,
    DomainTooLarge,
    InvalidDimension,
    UnsupportedMechanism,
)
from aldp_toolkit.models.core import (
    DuchiVariant,
    NumericMechanism,
    NumericTuple,
    PrivacyBudget,
    TieRule,
    clamp_to_domain,
)
from aldp_toolkit.models.mechanisms import Mech1Params, NumericReport
from aldp_toolkit.services.gaussian import optimal_sigma
from aldp_toolkit.services.randomness import RandomSource

MAX_EXACT_DIM = 62
MAX_ENUMERATION_DIM = 12
K_RATIO = 2.17


# ---------------------------------------------------------------------------
# Combinatorial constants
# ---------------------------------------------------------------------------

def _check_dim(d: int) -> int:
    if int(d) != d or d < 1:
        raise InvalidDimension(f"dimension must be an integer >= 1, got {d}")
    if d > MAX_EXACT_DIM:
        raise CombinatorialOverflow(f"dimension {d} exceeds the exact-arithmetic limit of {MAX_EXACT_DIM}")
    return int(d)


def compute_Cd(d: int) -> int:
    d = _check_dim(d)
    if d % 2:
        return 2 ** (d - 1)
    return 2 ** (d - 1) - math.comb(d, d // 2) // 2


def tie_set_sizes(d: int, tie_rule: TieRule = TieRule.STRICT) -> Tuple[int, int]:
    """Sizes of the positive and negative output sets for one sign vector."""
    c_d = compute_Cd(d)
    if d % 2:
        return c_d, c_d
    if tie_rule == TieRule.INCLUSIVE:
        return 2**d - c_d, c_d
    return c_d, 2**d - c_d


def _boundary_binomial(d: int) -> int:
    if d % 2:
        return math.comb(d - 1, (d - 1) // 2)
    return math.comb(d - 1, d // 2)


def max_admissible_delta(d: int, tie_rule: TieRule = TieRule.STRICT) -> float:
    """Supremum of delta for which Mechanism-1 keeps alpha < 1 (strict inequality)."""
    t_plus, _ = tie_set_sizes(d, tie_rule)
    return 1.0 / t_plus


def _require_admissible(d: int, budget: PrivacyBudget, tie_rule: TieRule) -> Tuple[int, int]:
    t_plus, t_minus = tie_set_sizes(d, tie_rule)
    if t_plus * budget.delta >= 1:
        raise ConstraintViolated(
            f"|T+| * delta = {t_plus} * {budget.delta} >= 1 for d={d} ({tie_rule.value} rule); "
            f"delta must stay below {1.0 / t_plus:.3e}"
        )
    return t_plus, t_minus


def compute_alpha(d: int, budget: PrivacyBudget, tie_rule: TieRule = TieRule.STRICT) -> float:
    t_plus, t_minus = _require_admissible(d, budget, tie_rule)
    e = budget.exp_epsilon
    return (t_plus * e + t_plus * t_minus * budget.delta) / (t_plus * e + t_minus)


def compute_B(d: int, budget: PrivacyBudget, tie_rule: TieRule = TieRule.STRICT) -> float:
    t_plus, t_minus = _require_admissible(d, budget, tie_rule)
    e = budget.exp_epsilon
    return (t_plus * e + t_minus) / (_boundary_binomial(d) * (e + 2**d * budget.delta - 1))


def _unbiased_scale(d: int, alpha: float, t_plus: int, t_minus: int) -> float:
    gap = alpha / t_plus - (1 - alpha) / t_minus
    if gap <= 0:
        raise ConstraintViolated(f"alpha={alpha} does not favour the positive set for d={d}")
    return 1.0 / (gap * _boundary_binomial(d))


def mech1_params(d: int, budget: PrivacyBudget, tie_rule: TieRule = TieRule.STRICT) -> Mech1Params:
    t_plus, t_minus = tie_set_sizes(d, tie_rule)
    alpha = compute_alpha(d, budget, tie_rule)
    b = compute_B(d, budget, tie_rule)
    # 1 - alpha in closed form; alpha itself rounds to 1.0 for large epsilon
    complement = t_minus * (1 - t_plus * budget.delta) / (t_plus * budget.exp_epsilon + t_minus)
    if not complement > 0 or alpha / t_plus < complement / t_minus:
        raise ConstraintViolated(f"alpha={alpha} outside the admissible range for d={d}")
    if not b > 1:
        raise ConstraintViolated(f"B={b} must exceed 1")
    return Mech1Params(
        d=d,
        budget=budget,
        tie_rule=tie_rule,
        c_d=compute_Cd(d),
        t_plus=t_plus,
        t_minus=t_minus,
        alpha=alpha,
        b=b,
    )


# ---------------------------------------------------------------------------
# Mechanism-1
# ---------------------------------------------------------------------------

def _agreement_tables(params: Mech1Params) -> Tuple[np.ndarray, np.ndarray]:
    d = params.d
    agreements = np.arange(d + 1)
    inner = 2 * agreements - d
    positive = inner >= 0 if params.tie_rule == TieRule.INCLUSIVE else inner > 0
    weights = np.array([float(math.comb(d, j)) for j in agreements])
    plus = np.where(positive, weights, 0.0)
    minus = np.where(positive, 0.0, weights)
    plus_cdf, minus_cdf = np.cumsum(plus), np.cumsum(minus)
    return plus_cdf / plus_cdf[-1], minus_cdf / minus_cdf[-1]


def _sign_vectors(x: np.ndarray, rng: RandomSource) -> np.ndarray:
    return np.where(rng.uniform(x.shape) < (1.0 + x) / 2.0, 1.0, -1.0)


def mech1_perturb_batch(x: np.ndarray, params: Mech1Params, rng: RandomSource) -> np.ndarray:
    x = clamp_to_domain(np.atleast_2d(x), settings.domain_tolerance)
    n, d = x.shape
    if d != params.d:
        raise DimensionMismatch(f"tuples have {d} dimensions, params were built for {params.d}")
    v = _sign_vectors(x, rng)
    take_plus = rng.bernoulli(params.alpha, n)
    plus_cdf, minus_cdf = _agreement_tables(params)
    draws = rng.uniform(n)
    agree_plus = np.searchsorted(plus_cdf, draws, side="right")
    agree_minus = np.searchsorted(minus_cdf, draws, side="right")
    agreements = np.where(take_plus, agree_plus, agree_minus)
    agree = rng.subset_mask(n, d, agreements)
    return np.where(agree, v, -v) * params.b


def mech1_perturb(x: NumericTuple, params: Mech1Params, rng: RandomSource) -> NumericReport:
    values = mech1_perturb_batch(x.values[np.newaxis, :], params, rng)[0]
    return NumericReport(values=values, mechanism=NumericMechanism.MECH1)


def _vertices(d: int) -> np.ndarray:
    return np.array(list(itertools.product((-1.0, 1.0), repeat=d)))


def mech1_output_distribution(x, params: Mech1Params) -> Tuple[np.ndarray, np.ndarray]:
    """Exact output distribution of Mechanism-1 at input ``x`` by enumeration."""
    if params.d > MAX_ENUMERATION_DIM:
        raise DomainTooLarge(f"enumeration is limited to d <= {MAX_ENUMERATION_DIM}")
    x = clamp_to_domain(np.asarray(x, dtype=float).reshape(params.d), settings.domain_tolerance)
    signs = _vertices(params.d)
    sign_probability = np.prod((1.0 + signs * x) / 2.0, axis=1)
    inner = signs @ signs.T
    positive = inner >= 0 if params.tie_rule == TieRule.INCLUSIVE else inner > 0
    kernel = np.where(positive, params.alpha / params.t_plus, (1 - params.alpha) / params.t_minus)
    return signs * params.b, kernel @ sign_probability


def mech1_expectation(x, params: Mech1Params) -> np.ndarray:
    outputs, probabilities = mech1_output_distribution(x, params)
    return probabilities @ outputs


# ---------------------------------------------------------------------------
# One-dimensional mechanism and Mechanism-2
# ---------------------------------------------------------------------------

def onedim_magnitude(budget: PrivacyBudget) -> float:
    e = budget.exp_epsilon
    return (e + 1) / (e + 2 * budget.delta - 1)


def onedim_positive_probability(x, budget: PrivacyBudget):
    e = budget.exp_epsilon
    return x * (e + 2 * budget.delta - 1) / (2 * (e + 1)) + 0.5


def onedim_variance(x, budget: PrivacyBudget):
    return onedim_magnitude(budget) ** 2 - np.square(x)


def onedim_perturb_batch(x: np.ndarray, budget: PrivacyBudget, rng: RandomSource) -> np.ndarray:
    x = clamp_to_domain(x, settings.domain_tolerance)
    magnitude = onedim_magnitude(budget)
    positive = rng.uniform(x.shape) < onedim_positive_probability(x, budget)
    return np.where(positive, magnitude, -magnitude)


def onedim_perturb(x: float, budget: PrivacyBudget, rng: RandomSource) -> float:
    return float(onedim_perturb_batch(np.array([x], dtype=float), budget, rng)[0])


def optimal_k(d: int, epsilon: float) -> int:
    return max(1, min(int(d), math.floor(epsilon / K_RATIO)))


def mech2_worst_case_variance(d: int, k: int, budget: PrivacyBudget) -> float:
    return (d / k) * onedim_magnitude(budget.split(k)) ** 2


def best_k(d: int, budget: PrivacyBudget) -> int:
    """Integer brute-force minimiser of the Mechanism-2 worst-case variance."""
    variances = [mech2_worst_case_variance(d, k, budget) for k in range(1, d + 1)]
    return int(np.argmin(variances)) + 1


def optimal_k_ratio() -> float:
    """Per-dimension budget a* minimising a * ((e^a + 1) / (e^a - 1))^2."""
    return brentq(lambda a: math.exp(2 * a) - 4 * a * math.exp(a) - 1, 1.0, 5.0, xtol=1e-14)


def mech2_perturb_batch(
    x: np.ndarray,
    budget: PrivacyBudget,
    rng: RandomSource,
    k: Optional[int] = None,
) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x, dtype=float))
    n, d = x.shape
    k = optimal_k(d, budget.epsilon) if k is None else int(k)
    if not 1 <= k <= d:
        raise InvalidDimension(f"k={k} must lie in [1, {d}]")
    selected = rng.subset_mask(n, d, k)
    perturbed = onedim_perturb_batch(x, budget.split(k), rng) * (d / k)
    return np.where(selected, perturbed, 0.0)


def mech2_perturb(x: NumericTuple, budget: PrivacyBudget, rng: RandomSource) -> NumericReport:
    values = mech2_perturb_batch(x.values[np.newaxis, :], budget, rng)[0]
    return NumericReport(values=values, mechanism=NumericMechanism.MECH2)


def mech2_expectation(x, budget: PrivacyBudget, k: Optional[int] = None) -> np.ndarray:
    x = clamp_to_domain(np.asarray(x, dtype=float), settings.domain_tolerance)
    d = x.size
    k = optimal_k(d, budget.epsilon) if k is None else k
    sub = budget.split(k)
    magnitude = onedim_magnitude(sub) * d / k
    per_dim = (2 * onedim_positive_probability(x, sub) - 1) * magnitude
    return (k / d) * per_dim


# ---------------------------------------------------------------------------
# Duchi baseline
# ---------------------------------------------------------------------------

def duchi_tie_rule(variant: DuchiVariant) -> TieRule:
    return TieRule.INCLUSIVE if variant == DuchiVariant.FIXED_INCLUSIVE else TieRule.STRICT


def duchi_alpha(d: int, epsilon: float, variant: DuchiVariant) -> float:
    e = math.exp(epsilon)
    if d % 2 or variant == DuchiVariant.ORIGINAL:
        return e / (e + 1)
    c_d = compute_Cd(d)
    if variant == DuchiVariant.FIXED_STRICT:
        return e * c_d / ((e - 1) * c_d + 2**d)
    return e * (2**d - c_d) / (e * (2**d - c_d) + c_d)


def duchi_scale(d: int, epsilon: float, variant: DuchiVariant) -> float:
    t_plus, t_minus = tie_set_sizes(d, duchi_tie_rule(variant))
    return _unbiased_scale(d, duchi_alpha(d, epsilon, variant), t_plus, t_minus)


def duchi_params(d: int, epsilon: float, variant: DuchiVariant = DuchiVariant.FIXED_STRICT) -> Mech1Params:
    tie_rule = duchi_tie_rule(variant)
    t_plus, t_minus = tie_set_sizes(d, tie_rule)
    return Mech1Params(
        d=d,
        budget=PrivacyBudget(epsilon, 0.0),
        tie_rule=tie_rule,
        c_d=compute_Cd(d),
        t_plus=t_plus,
        t_minus=t_minus,
        alpha=duchi_alpha(d, epsilon, variant),
        b=duchi_scale(d, epsilon, variant),
    )


def duchi_perturb(
    x: NumericTuple,
    epsilon: float,
    rng: RandomSource,
    variant: DuchiVariant = DuchiVariant.FIXED_STRICT,
) -> NumericReport:
    params = duchi_params(x.dims, epsilon, variant)
    values = mech1_perturb_batch(x.values[np.newaxis, :], params, rng)[0]
    return NumericReport(values=values, mechanism=NumericMechanism.DUCHI)


# ---------------------------------------------------------------------------
# Gaussian baseline
# ---------------------------------------------------------------------------

def gaussian_sensitivity(d: int) -> float:
    """l2 diameter of [-1, 1]^d."""
    return 2.0 * math.sqrt(d)


def gaussian_perturb_batch(x: np.ndarray, sigma: float, rng: RandomSource) -> np.ndarray:
    if not sigma > 0:
        raise ConstraintViolated(f"sigma must be positive, got {sigma}")
    x = np.asarray(x, dtype=float)
    return x + sigma * rng.gaussian(x.shape)


def gaussian_perturb_numeric(x: NumericTuple, sigma: float, rng: RandomSource) -> NumericReport:
    values = gaussian_perturb_batch(x.values, sigma, rng)
    return NumericReport(values=values, mechanism=NumericMechanism.GAUSSIAN)


# ---------------------------------------------------------------------------
# Dispatch
# ---------------------------------------------------------------------------

def perturb_numeric_batch(
    x: np.ndarray,
    mechanism: NumericMechanism,
    budget: PrivacyBudget,
    rng: RandomSource,
    *,
    tie_rule: TieRule = TieRule.STRICT,
    duchi_variant: DuchiVariant = DuchiVariant.FIXED_STRICT,
    sigma: Optional[float] = None,
) -> np.ndarray:
    """Perturb every row of ``x`` with one mechanism and budget."""
    x = clamp_to_domain(np.atleast_2d(x), settings.domain_tolerance)
    d = x.shape[1]
    if mechanism == NumericMechanism.MECH1:
        return mech1_perturb_batch(x, mech1_params(d, budget, tie_rule), rng)
    if mechanism == NumericMechanism.MECH2:
        return mech2_perturb_batch(x, budget, rng)
    if mechanism == NumericMechanism.ONEDIM:
        if d != 1:
            raise DimensionMismatch(f"the one-dimensional mechanism takes d=1, got d={d}")
        return onedim_perturb_batch(x, budget, rng)
    if mechanism == NumericMechanism.DUCHI:
        return mech1_perturb_batch(x, duchi_params(d, budget.epsilon, duchi_variant), rng)
    if mechanism == NumericMechanism.GAUSSIAN:
        if sigma is None:
            sigma = optimal_sigma(budget, gaussian_sensitivity(d)).sigma
        return gaussian_perturb_batch(x, sigma, rng)
    if mechanism == NumericMechanism.NON_PRIVATE:
        return x.copy()
    raise UnsupportedMechanism(f"no numeric mechanism named {mechanism}")
