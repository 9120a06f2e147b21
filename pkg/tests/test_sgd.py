import numpy as np
import pytest

from aldp_toolkit.exceptions import DimensionMismatch, InsufficientUsers, InvalidLabels, UnsupportedMechanism
from aldp_toolkit.models.core import NumericMechanism, PrivacyBudget, Task
from aldp_toolkit.models.training import LabeledData, ModelSpec
from aldp_toolkit.services.datasets import gen_regression_task
from aldp_toolkit.services.randomness import RandomSource
from aldp_toolkit.services.sgd import (
    clip_gradient,
    evaluate,
    gradient,
    losses,
    perturb_gradients,
    private_sgd_train,
)


def _central_difference(task, theta, x, y, step=1e-6):
    result = np.zeros_like(theta)
    for j in range(theta.size):
        shift = np.zeros_like(theta)
        shift[j] = step
        upper = losses(task, theta + shift, x[np.newaxis, :], np.array([y]))[0]
        lower = losses(task, theta - shift, x[np.newaxis, :], np.array([y]))[0]
        result[j] = (upper - lower) / (2 * step)
    return result


class TestGradient:
    def test_linear_zero(self):
        np.testing.assert_array_equal(gradient(Task.LINEAR, np.zeros(3), np.zeros(3), 0.7), 0.0)

    def test_hinge_flat_region(self):
        np.testing.assert_array_equal(gradient(Task.SVM, np.array([2.0, 0.0]), np.array([1.0, 0.5]), 1.0), 0.0)

    @pytest.mark.parametrize("task", list(Task))
    def test_matches_finite_differences(self, task):
        source = RandomSource(17)
        checked = 0
        while checked < 10:
            theta = source.uniform(4) * 2 - 1
            x = source.uniform(4) * 2 - 1
            y = float(source.uniform() * 2 - 1) if task == Task.LINEAR else float(np.sign(source.uniform() - 0.5))
            if task == Task.SVM and abs(1 - y * x @ theta) < 1e-3:
                continue
            analytic = gradient(task, theta, x, y)
            numeric = _central_difference(task, theta, x, y)
            np.testing.assert_allclose(analytic, numeric, rtol=1e-5, atol=1e-8)
            checked += 1

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            gradient(Task.LINEAR, np.zeros(3), np.zeros(2), 1.0)

    def test_labels_must_be_signs(self):
        with pytest.raises(InvalidLabels):
            gradient(Task.LOGISTIC, np.zeros(2), np.ones(2), 0.5)


class TestClip:
    def test_examples(self):
        np.testing.assert_array_equal(clip_gradient([0.5, -0.2]), [0.5, -0.2])
        np.testing.assert_array_equal(clip_gradient([3.0, -7.0]), [1.0, -1.0])

    def test_idempotent(self):
        grad = np.array([2.5, -0.1, -9.0])
        np.testing.assert_array_equal(clip_gradient(clip_gradient(grad)), clip_gradient(grad))


class TestEvaluate:
    def test_perfect_predictor(self):
        data, theta_star = gen_regression_task(500, 3, Task.LINEAR, RandomSource(1))
        assert evaluate(theta_star, data, Task.LINEAR) == pytest.approx(0.0, abs=1e-20)
        svm, theta_star = gen_regression_task(500, 3, Task.SVM, RandomSource(1))
        assert evaluate(theta_star, svm, Task.SVM) == 0.0

    def test_constant_sign_predictor(self):
        labels = np.where(RandomSource(2).uniform(20_000) < 0.5, 1.0, -1.0)
        data = LabeledData(features=np.ones((20_000, 1)), labels=labels)
        assert evaluate(np.array([1.0]), data, Task.LOGISTIC) == pytest.approx(0.5, abs=0.02)


class TestTraining:
    def _linear(self, n=20_000, d=5, seed=5):
        data, theta_star = gen_regression_task(n, d, Task.LINEAR, RandomSource(seed))
        return data, theta_star

    def test_single_participation(self):
        data, _ = self._linear(n=10_500)
        spec = ModelSpec(task=Task.LINEAR, dims=5, batch_size=1000)
        run = private_sgd_train(data, spec, NumericMechanism.MECH1, PrivacyBudget(1.0, 1e-6), RandomSource(1))
        assert run.iterations == 10
        users = np.concatenate(run.batches)
        assert users.size == np.unique(users).size == run.users_consumed == 10_000
        assert len(run.theta_history) == 11
        np.testing.assert_array_equal(run.theta_history[0], 0.0)

    def test_insufficient_users(self):
        data, _ = self._linear(n=50)
        with pytest.raises(InsufficientUsers):
            private_sgd_train(
                data, ModelSpec(task=Task.LINEAR, dims=5, batch_size=100), NumericMechanism.NON_PRIVATE, None,
                RandomSource(0),
            )

    def test_non_private_recovers_parameters(self):
        data, theta_star = self._linear(n=100_000)
        spec = ModelSpec(task=Task.LINEAR, dims=5, learning_rate=0.1, batch_size=100)
        run = private_sgd_train(data, spec, NumericMechanism.NON_PRIVATE, None, RandomSource(3), test_set=data)
        assert np.linalg.norm(run.theta - theta_star) <= 0.05 * np.linalg.norm(theta_star)
        losses_by_iteration = [item.loss for item in run.metrics]
        assert np.mean(losses_by_iteration[-50:]) < np.mean(losses_by_iteration[:50])

    def test_vanishing_noise_matches_non_private(self):
        data, _ = self._linear(n=5000)
        spec = ModelSpec(task=Task.LINEAR, dims=5, batch_size=500)
        plain = private_sgd_train(data, spec, NumericMechanism.NON_PRIVATE, None, RandomSource(8))
        gaussian = private_sgd_train(
            data, spec, NumericMechanism.GAUSSIAN, PrivacyBudget(1.0, 1e-6), RandomSource(8), gaussian_sigma=1e-12
        )
        for left, right in zip(plain.batches, gaussian.batches):
            np.testing.assert_array_equal(left, right)
        np.testing.assert_allclose(gaussian.theta, plain.theta, atol=1e-9)

    @pytest.mark.parametrize("mechanism", [NumericMechanism.MECH1, NumericMechanism.MECH2, NumericMechanism.GAUSSIAN])
    def test_perturbed_batch_mean_is_unbiased(self, mechanism):
        data, _ = self._linear(n=50)
        grads = clip_gradient(np.tile([0.3, -0.8, 0.1, 0.0, 1.0], (50, 1)) * data.features)
        resamples = 1000
        noisy = perturb_gradients(np.tile(grads, (resamples, 1)), mechanism, PrivacyBudget(2.0, 1e-6), RandomSource(4))
        batch_means = noisy.reshape(resamples, 50, 5).mean(axis=1)
        standard_error = batch_means.std(axis=0, ddof=1) / np.sqrt(resamples)
        assert np.all(np.abs(batch_means.mean(axis=0) - grads.mean(axis=0)) <= 4 * standard_error)

    def test_rejects_one_dimensional_mechanism(self):
        with pytest.raises(UnsupportedMechanism):
            perturb_gradients(np.zeros((2, 1)), NumericMechanism.ONEDIM, PrivacyBudget(1.0), RandomSource(0))

    @pytest.mark.slow
    @pytest.mark.parametrize("epsilon", [1.0, 5.0])
    def test_utility_ordering(self, epsilon):
        spec = ModelSpec(task=Task.LINEAR, dims=5, learning_rate=0.1, batch_size=1000)
        errors = {mechanism: [] for mechanism in (NumericMechanism.NON_PRIVATE, NumericMechanism.MECH1,
                                                  NumericMechanism.MECH2, NumericMechanism.GAUSSIAN)}
        for seed in range(5):
            train, _ = gen_regression_task(100_000, 5, Task.LINEAR, RandomSource(seed))
            test, _ = gen_regression_task(10_000, 5, Task.LINEAR, RandomSource(seed).derive(1))
            for mechanism in errors:
                budget = None if mechanism == NumericMechanism.NON_PRIVATE else PrivacyBudget(epsilon, 1e-6)
                run = private_sgd_train(train, spec, mechanism, budget, RandomSource(seed).derive(2))
                errors[mechanism].append(evaluate(run.theta, test, Task.LINEAR))
        median = {mechanism: np.median(values) for mechanism, values in errors.items()}
        assert median[NumericMechanism.NON_PRIVATE] <= median[NumericMechanism.MECH1]
        assert median[NumericMechanism.MECH1] <= median[NumericMechanism.GAUSSIAN]
        assert median[NumericMechanism.MECH2] <= median[NumericMechanism.GAUSSIAN]
