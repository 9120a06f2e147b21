# aldp_toolkit/models/core.py
"""Shared domain types: budgets, tuples, categorical values and datasets."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Tuple

import numpy as np

from aldp_toolkit.exceptions import (
    DimensionMismatch,
    DomainViolation,
    InvalidBudget,
    NonFiniteInput,
)


class TieRule(str, Enum):
    STRICT = "STRICT"
    INCLUSIVE = "INCLUSIVE"


class NumericMechanism(str, Enum):
    MECH1 = "MECH1"
    MECH2 = "MECH2"
    ONEDIM = "ONEDIM"
    DUCHI = "DUCHI"
    GAUSSIAN = "GAUSSIAN"
    NON_PRIVATE = "NON_PRIVATE"


class DuchiVariant(str, Enum):
    ORIGINAL = "ORIGINAL"
    FIXED_STRICT = "FIXED_STRICT"
    FIXED_INCLUSIVE = "FIXED_INCLUSIVE"


class Protocol(str, Enum):
    GRR = "GRR"
    PRR = "PRR"
    SPRR = "SPRR"
    LH = "LH"
    OLH = "OLH"
    OPT_GM = "OPT_GM"


class Task(str, Enum):
    LINEAR = "LINEAR"
    LOGISTIC = "LOGISTIC"
    SVM = "SVM"


def parse_enum(value: str, enum_cls: type) -> Enum:
    """Case-insensitive lookup accepting both ``opt-gm`` and ``OPT_GM``."""
    if isinstance(value, enum_cls):
        return value
    key = str(value).strip().upper().replace("-", "_")
    try:
        return enum_cls[key]
    except KeyError as exc:
        choices = ", ".join(member.value for member in enum_cls)
        raise ValueError(f"unknown {enum_cls.__name__} '{value}' (expected one of {choices})") from exc


@dataclass(frozen=True)
class PrivacyBudget:
    epsilon: float
    delta: float = 0.0

    def __post_init__(self) -> None:
        if not math.isfinite(self.epsilon) or self.epsilon <= 0:
            raise InvalidBudget(f"epsilon must be a finite value > 0, got {self.epsilon}")
        if not math.isfinite(self.delta) or not 0 <= self.delta < 1:
            raise InvalidBudget(f"delta must satisfy 0 <= delta < 1, got {self.delta}")

    @property
    def exp_epsilon(self) -> float:
        return math.exp(self.epsilon)

    def split(self, parts: int) -> PrivacyBudget:
        """Evenly divided budget for ``parts`` sequentially composed releases."""
        return PrivacyBudget(self.epsilon / parts, self.delta / parts)


def validate_budget(epsilon: float, delta: float) -> PrivacyBudget:
    return PrivacyBudget(float(epsilon), float(delta))


def clamp_to_domain(values, tolerance: float = 1e-9) -> np.ndarray:
    """Clamp values into [-1, 1]; anything further out than ``tolerance`` is rejected."""
    array = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(array)):
        raise NonFiniteInput("numeric values must be finite")
    overshoot = np.abs(array) - 1.0
    if array.size and overshoot.max() > tolerance:
        worst = np.unravel_index(int(np.argmax(overshoot)), array.shape)
        raise DomainViolation(f"value {array[worst]} at index {tuple(int(i) for i in worst)} is outside [-1, 1]")
    return np.clip(array, -1.0, 1.0)


@dataclass(frozen=True, eq=False)
class NumericTuple:
    values: np.ndarray

    def __post_init__(self) -> None:
        array = clamp_to_domain(np.atleast_1d(self.values))
        if array.ndim != 1 or array.size == 0:
            raise DimensionMismatch("a numeric tuple is a non-empty vector")
        array.setflags(write=False)
        object.__setattr__(self, "values", array)

    @property
    def dims(self) -> int:
        return int(self.values.size)


@dataclass(frozen=True)
class CategoricalValue:
    index: int
    domain_size: int

    def __post_init__(self) -> None:
        if self.domain_size < 2:
            raise DomainViolation(f"domain size must be >= 2, got {self.domain_size}")
        if not 0 <= self.index < self.domain_size:
            raise DomainViolation(f"index {self.index} outside [0, {self.domain_size - 1}]")


@dataclass(frozen=True, eq=False)
class Dataset:
    numeric: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    categorical: np.ndarray = field(default_factory=lambda: np.zeros((0, 0), dtype=np.int64))
    domain_sizes: Tuple[int, ...] = ()
    numeric_columns: Tuple[str, ...] = ()
    categorical_columns: Tuple[str, ...] = ()
    categories: Optional[Tuple[Tuple[str, ...], ...]] = None

    def __post_init__(self) -> None:
        numeric = np.asarray(self.numeric, dtype=float)
        categorical = np.asarray(self.categorical, dtype=np.int64)
        if numeric.ndim != 2 or categorical.ndim != 2:
            raise DimensionMismatch("dataset blocks must be two-dimensional")
        if numeric.size and categorical.size and numeric.shape[0] != categorical.shape[0]:
            raise DimensionMismatch(
                f"numeric block has {numeric.shape[0]} rows, categorical block has {categorical.shape[0]}"
            )
        if categorical.shape[1] != len(self.domain_sizes):
            raise DimensionMismatch("one domain size is required per categorical column")
        for column, size in enumerate(self.domain_sizes):
            values = categorical[:, column]
            if size < 2:
                raise DomainViolation(f"categorical column {column} has domain size {size} < 2")
            if values.size and (values.min() < 0 or values.max() >= size):
                raise DomainViolation(f"categorical column {column} holds values outside [0, {size - 1}]")
        numeric = clamp_to_domain(numeric) if numeric.size else numeric
        object.__setattr__(self, "numeric", numeric)
        object.__setattr__(self, "categorical", categorical)
        if not self.numeric_columns and numeric.shape[1]:
            object.__setattr__(self, "numeric_columns", tuple(f"x{j}" for j in range(numeric.shape[1])))
        if not self.categorical_columns and categorical.shape[1]:
            object.__setattr__(self, "categorical_columns", tuple(f"c{j}" for j in range(categorical.shape[1])))

    @property
    def n_users(self) -> int:
        return int(max(self.numeric.shape[0], self.categorical.shape[0]))

    @property
    def numeric_dims(self) -> int:
        return int(self.numeric.shape[1])
