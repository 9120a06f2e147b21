"""Single-pass private SGD for linear regression, logistic regression and SVM.

Each user contributes one clipped, perturbed gradient and is consumed by
exactly one batch; the update is the plain mini-batch step
``theta <- theta - eta * mean(perturbed gradients)``.
"""
from __future__ import annotations

import logging
from typing import Optional

import numpy as np
from scipy.special import expit

from aldp_toolkit.exceptions import (
    DimensionMismatch,
    InsufficientUsers,
    InvalidLabels,
    NonFiniteInput,
    UnsupportedMechanism,
)
from aldp_toolkit.models.core import NumericMechanism, PrivacyBudget, Task, TieRule
from aldp_toolkit.models.training import IterationMetrics, LabeledData, ModelSpec, TrainingRun
from aldp_toolkit.services.numeric import perturb_numeric_batch
from aldp_toolkit.services.randomness import RandomSource

logger = logging.getLogger(__name__)

TRAINING_MECHANISMS = (
    NumericMechanism.NON_PRIVATE,
    NumericMechanism.MECH1,
    NumericMechanism.MECH2,
    NumericMechanism.GAUSSIAN,
)


def _check_inputs(task: Task, theta: np.ndarray, features: np.ndarray, labels: np.ndarray) -> None:
    if features.shape[-1] != theta.shape[0]:
        raise DimensionMismatch(f"features have {features.shape[-1]} columns, theta has {theta.shape[0]}")
    if features.shape[0] != labels.shape[0]:
        raise DimensionMismatch(f"{features.shape[0]} feature rows but {labels.shape[0]} labels")
    if task != Task.LINEAR and not np.all(np.abs(labels) == 1):
        raise InvalidLabels(f"{task.value} labels must be -1 or 1")


def losses(task: Task, theta, features, labels) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    features = np.atleast_2d(np.asarray(features, dtype=float))
    labels = np.atleast_1d(np.asarray(labels, dtype=float))
    _check_inputs(task, theta, features, labels)
    score = features @ theta
    if task == Task.LINEAR:
        return 0.5 * (score - labels) ** 2
    margin = labels * score
    if task == Task.LOGISTIC:
        return np.logaddexp(0.0, -margin)
    return np.maximum(0.0, 1.0 - margin)


def gradients(task: Task, theta, features, labels) -> np.ndarray:
    """Per-sample gradients as an (N, d) matrix."""
    theta = np.asarray(theta, dtype=float)
    features = np.atleast_2d(np.asarray(features, dtype=float))
    labels = np.atleast_1d(np.asarray(labels, dtype=float))
    _check_inputs(task, theta, features, labels)
    score = features @ theta
    if task == Task.LINEAR:
        coefficient = score - labels
    elif task == Task.LOGISTIC:
        coefficient = -labels * expit(-labels * score)
    else:
        coefficient = np.where(labels * score < 1, -labels, 0.0)
    return coefficient[:, np.newaxis] * features


def gradient(task: Task, theta, x, y: float) -> np.ndarray:
    return gradients(task, theta, np.atleast_2d(x), np.array([y]))[0]


def clip_gradient(grad) -> np.ndarray:
    grad = np.asarray(grad, dtype=float)
    if not np.all(np.isfinite(grad)):
        raise NonFiniteInput("gradient has non-finite components")
    return np.clip(grad, -1.0, 1.0)


def perturb_gradients(
    grads: np.ndarray,
    mechanism: NumericMechanism,
    budget: Optional[PrivacyBudget],
    rng: RandomSource,
    *,
    tie_rule: TieRule = TieRule.STRICT,
    sigma: Optional[float] = None,
) -> np.ndarray:
    if mechanism not in TRAINING_MECHANISMS:
        raise UnsupportedMechanism(f"{mechanism.value} is not available for training")
    if mechanism == NumericMechanism.NON_PRIVATE:
        return grads
    return perturb_numeric_batch(grads, mechanism, budget, rng, tie_rule=tie_rule, sigma=sigma)


def evaluate(theta, test_set: LabeledData, task: Task) -> float:
    """Mean squared error for regression, misclassification rate otherwise."""
    score = test_set.features @ np.asarray(theta, dtype=float)
    if task == Task.LINEAR:
        return float(np.mean((score - test_set.labels) ** 2))
    predictions = np.where(score >= 0, 1.0, -1.0)
    return float(np.mean(predictions != test_set.labels))


def private_sgd_train(
    data: LabeledData,
    spec: ModelSpec,
    mechanism: NumericMechanism,
    budget: Optional[PrivacyBudget],
    rng: RandomSource,
    *,
    test_set: Optional[LabeledData] = None,
    tie_rule: TieRule = TieRule.STRICT,
    gaussian_sigma: Optional[float] = None,
) -> TrainingRun:
    """Train with disjoint batches of users in a seeded shuffled order.

    The batch order is drawn from ``rng.derive(0)`` and the noise of
    iteration t from ``rng.derive(1, t)``, so two runs sharing a seed visit
    identical batches whatever the mechanism.
    """
    n = len(data)
    if data.features.shape[1] != spec.dims:
        raise DimensionMismatch(f"data has {data.features.shape[1]} features, model expects {spec.dims}")
    if n < spec.batch_size:
        raise InsufficientUsers(f"{n} users cannot fill one batch of {spec.batch_size}")

    order = rng.derive(0).permutation(n)
    iterations = n // spec.batch_size
    theta = np.zeros(spec.dims)
    run = TrainingRun(mechanism=mechanism, budget=budget, theta_history=[theta.copy()])

    for iteration in range(iterations):
        batch = order[iteration * spec.batch_size:(iteration + 1) * spec.batch_size]
        features, labels = data.features[batch], data.labels[batch]
        loss = float(losses(spec.task, theta, features, labels).mean())
        clipped = clip_gradient(gradients(spec.task, theta, features, labels))
        noisy = perturb_gradients(
            clipped,
            mechanism,
            budget,
            rng.derive(1, iteration),
            tie_rule=tie_rule,
            sigma=gaussian_sigma,
        )
        theta = theta - spec.learning_rate * noisy.mean(axis=0)
        run.theta_history.append(theta.copy())
        run.batches.append(batch)
        metric = evaluate(theta, test_set, spec.task) if test_set is not None else None
        run.metrics.append(IterationMetrics(iteration=iteration, loss=loss, test_metric=metric))

    logger.debug("trained %s for %d iterations on %d users", mechanism.value, iterations, run.users_consumed)
    return run
