import math

import numpy as np
import pytest

from aldp_toolkit.exceptions import ConstraintViolated, InvalidBudget, NoRootInBracket
from aldp_toolkit.models.core import PrivacyBudget
from aldp_toolkit.services.gaussian import (
    calibration_residual,
    classical_sigma,
    erfc,
    gaussian_delta,
    optimal_sigma,
    solve_xi,
)


class TestErfc:
    def test_values(self):
        assert erfc(0.0) == 1.0
        assert erfc(1.0) == pytest.approx(0.157299207050285, rel=1e-14)
        assert erfc(40.0) == 0.0
        assert erfc(-40.0) == 2.0


class TestSolveXi:
    def test_residual(self):
        budget = PrivacyBudget(1.0, 1e-4)
        assert abs(calibration_residual(solve_xi(budget), budget)) <= 1e-12

    def test_zero_root(self):
        epsilon = 0.7
        delta = (1.0 - math.exp(epsilon) * erfc(math.sqrt(epsilon))) / 2
        assert solve_xi(PrivacyBudget(epsilon, delta)) == pytest.approx(0.0, abs=1e-10)

    def test_negative_root_for_large_delta(self):
        budget = PrivacyBudget(0.5, 0.6)
        xi = solve_xi(budget)
        assert xi < 0
        assert abs(calibration_residual(xi, budget)) <= 1e-12

    def test_bracket_independent(self):
        budget = PrivacyBudget(2.0, 1e-6)
        assert solve_xi(budget, bracket_limit=10.0) == pytest.approx(solve_xi(budget, bracket_limit=50.0), abs=1e-12)

    def test_needs_positive_delta(self):
        with pytest.raises(InvalidBudget):
            solve_xi(PrivacyBudget(1.0, 0.0))

    def test_bracket_exhausted(self):
        with pytest.raises(NoRootInBracket):
            solve_xi(PrivacyBudget(1.0, 1e-6), bracket_limit=1.0)


class TestOptimalSigma:
    def test_formula(self):
        budget = PrivacyBudget(1.0, 1e-4)
        calibration = optimal_sigma(budget, 2.0)
        xi = calibration.xi
        assert calibration.sigma == pytest.approx((xi + math.sqrt(xi * xi + 1.0)) * 2.0 / math.sqrt(2))

    def test_linear_in_sensitivity(self):
        budget = PrivacyBudget(1.5, 1e-5)
        assert optimal_sigma(budget, 4.0).sigma == pytest.approx(2 * optimal_sigma(budget, 2.0).sigma)

    def test_beats_classical(self):
        budget = PrivacyBudget(1.0, 1e-4)
        assert optimal_sigma(budget, 2.0).sigma < classical_sigma(budget, 2.0)

    def test_smaller_delta_needs_more_noise(self):
        assert optimal_sigma(PrivacyBudget(1.0, 1e-6), 2.0).sigma > optimal_sigma(PrivacyBudget(1.0, 1e-4), 2.0).sigma

    def test_monotone_grid(self):
        epsilons = [0.1, 0.5, 1.0, 2.0, 5.0, 10.0]
        deltas = [1e-7, 1e-6, 1e-5, 1e-4, 1e-3]
        table = np.array([[optimal_sigma(PrivacyBudget(e, d), 1.0).sigma for d in deltas] for e in epsilons])
        assert np.all(np.diff(table, axis=0) < 0)
        assert np.all(np.diff(table, axis=1) < 0)

    @pytest.mark.parametrize("epsilon", [0.1, 1.0, 4.0, 10.0])
    @pytest.mark.parametrize("delta", [1e-7, 1e-6, 1e-4])
    def test_two_point_privacy(self, epsilon, delta):
        sigma = optimal_sigma(PrivacyBudget(epsilon, delta), 2.0).sigma
        achieved = gaussian_delta(sigma, epsilon, 2.0)
        assert achieved <= delta + 1e-10
        assert achieved == pytest.approx(delta, rel=1e-4)

    def test_bad_sensitivity(self):
        with pytest.raises(ConstraintViolated):
            optimal_sigma(PrivacyBudget(1.0, 1e-5), 0.0)
