"""Optimal Gaussian mechanism calibration.

The noise scale comes from the root xi of

    erfc(xi) - e^eps * erfc(sqrt(xi^2 + eps)) = 2 * delta

which is continuous and strictly decreasing in xi, so a symmetric expanding
bracket followed by bisection always converges when a root exists.
"""
from __future__ import annotations

import math
from typing import Optional

import numpy as np
from scipy import special
from scipy.optimize import bisect
from scipy.stats import norm

from aldp_toolkit.config import settings
from aldp_toolkit.exceptions import ConstraintViolated, InvalidBudget, NoRootInBracket
from aldp_toolkit.models.core import PrivacyBudget
from aldp_toolkit.models.mechanisms import GaussianCalibration


def erfc(x):
    return special.erfc(x)


def calibration_residual(xi: float, budget: PrivacyBudget) -> float:
    return float(
        erfc(xi) - budget.exp_epsilon * erfc(math.sqrt(xi * xi + budget.epsilon)) - 2 * budget.delta
    )


def _bracket(budget: PrivacyBudget, limit: float) -> float:
    width = 1.0
    while True:
        if calibration_residual(-width, budget) > 0 and calibration_residual(width, budget) < 0:
            return width
        if width >= limit:
            raise NoRootInBracket(
                f"no calibration root for eps={budget.epsilon}, delta={budget.delta} within |xi| <= {limit}"
            )
        width = min(2 * width, limit)


def solve_xi(
    budget: PrivacyBudget,
    *,
    bracket_limit: Optional[float] = None,
    xtol: Optional[float] = None,
    maxiter: Optional[int] = None,
) -> float:
    if not 0 < budget.delta < 1:
        raise InvalidBudget(f"Gaussian calibration needs 0 < delta < 1, got {budget.delta}")
    width = _bracket(budget, bracket_limit or settings.bracket_limit)
    try:
        return float(
            bisect(
                calibration_residual,
                -width,
                width,
                args=(budget,),
                xtol=xtol or settings.bisection_width,
                maxiter=maxiter or settings.bisection_max_iter,
                disp=False,
            )
        )
    except (ValueError, RuntimeError) as exc:
        raise NoRootInBracket(f"bisection failed for eps={budget.epsilon}, delta={budget.delta}") from exc


def optimal_sigma(budget: PrivacyBudget, sensitivity: float) -> GaussianCalibration:
    if not sensitivity > 0:
        raise ConstraintViolated(f"sensitivity must be positive, got {sensitivity}")
    xi = solve_xi(budget)
    sigma = (xi + math.sqrt(xi * xi + budget.epsilon)) * sensitivity / (budget.epsilon * math.sqrt(2))
    return GaussianCalibration(xi=xi, sigma=sigma, sensitivity=sensitivity, budget=budget)


def classical_sigma(budget: PrivacyBudget, sensitivity: float) -> float:
    if not 0 < budget.delta < 1:
        raise InvalidBudget(f"classical calibration needs 0 < delta < 1, got {budget.delta}")
    return sensitivity * math.sqrt(2 * math.log(1.25 / budget.delta)) / budget.epsilon


def gaussian_delta(sigma: float, epsilon: float, sensitivity: float) -> float:
    """Smallest delta for which N(0, sigma^2) noise at this sensitivity is (epsilon, delta)-DP."""
    shift = sensitivity / (2 * sigma)
    scaled = epsilon * sigma / sensitivity
    return float(norm.cdf(shift - scaled) - np.exp(epsilon) * norm.cdf(-shift - scaled))
