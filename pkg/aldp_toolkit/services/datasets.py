"""Dataset generation, CSV ingestion and feature encoding."""
from __future__ import annotations

import logging
from pathlib import Path
from typing import Dict, List, Literal, Optional, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ValidationError
from scipy.special import expit

from aldp_toolkit.config import settings
from aldp_toolkit.exceptions import (
    DomainViolation,
    EmptyInput,
    InvalidDimension,
    MissingValue,
    NonFiniteInput,
    SchemaError,
)
from aldp_toolkit.models.core import Dataset, Task
from aldp_toolkit.models.training import LabeledData
from aldp_toolkit.services.randomness import RandomSource

logger = logging.getLogger(__name__)


class ColumnSchema(BaseModel):
    type: Literal["numeric", "categorical"]
    domain_size: Optional[int] = None
    categories: Optional[List[str]] = None


class DatasetSchema(BaseModel):
    columns: Dict[str, ColumnSchema]


def normalize_numeric(raw_column) -> np.ndarray:
    column = np.asarray(raw_column, dtype=float).ravel()
    if column.size == 0:
        raise EmptyInput("cannot normalize an empty column")
    if not np.all(np.isfinite(column)):
        raise NonFiniteInput(f"column holds non-finite value at position {int(np.argmin(np.isfinite(column)))}")
    low, high = column.min(), column.max()
    if low == high:
        return np.zeros_like(column)
    if low == -1.0 and high == 1.0:
        return column.copy()
    return np.clip(2.0 * (column - low) / (high - low) - 1.0, -1.0, 1.0)


def zipf_pmf(k: int, s: float) -> np.ndarray:
    weights = np.power(np.arange(1, k + 1, dtype=float), -s)
    return weights / weights.sum()


def gen_gaussian_numeric(n: int, d: int, rng: RandomSource, sd: Optional[float] = None) -> Dataset:
    if n < 1 or d < 1:
        raise InvalidDimension(f"need n >= 1 and d >= 1, got n={n}, d={d}")
    sd = settings.gaussian_sd if sd is None else sd
    values = np.clip(sd * rng.gaussian((n, d)), -1.0, 1.0)
    return Dataset(numeric=values)


def gen_zipf_categorical(n: int, k: int, s: float, rng: RandomSource) -> Dataset:
    if k < 2:
        raise DomainViolation(f"domain size must be >= 2, got {k}")
    if not s > 0:
        raise DomainViolation(f"Zipf exponent must be positive, got {s}")
    values = rng.generator.choice(k, size=n, p=zipf_pmf(k, s))
    return Dataset(categorical=values.reshape(n, 1), domain_sizes=(k,))


def _reject_missing(frame: pd.DataFrame) -> None:
    missing = frame.isna()
    if missing.values.any():
        row_pos, col_pos = np.argwhere(missing.values)[0]
        # +2: one for the header line, one for 1-based numbering
        raise MissingValue(f"missing value in column '{frame.columns[col_pos]}' at row {row_pos + 2}")


def _encode_categorical(series: pd.Series, spec: ColumnSchema) -> Tuple[np.ndarray, int, Tuple[str, ...]]:
    name = series.name
    if spec.categories:
        lookup = {label: index for index, label in enumerate(spec.categories)}
        labels = series.astype(str)
        unknown = ~labels.isin(lookup)
        if unknown.any():
            raise DomainViolation(f"column '{name}' holds unknown category '{labels[unknown].iloc[0]}'")
        return labels.map(lookup).to_numpy(dtype=np.int64), max(2, len(spec.categories)), tuple(spec.categories)
    if spec.domain_size is not None:
        try:
            one_based = pd.to_numeric(series, errors="raise").to_numpy()
        except (ValueError, TypeError) as exc:
            raise SchemaError(f"column '{name}' must hold integer codes 1..{spec.domain_size}") from exc
        if np.any(one_based != np.round(one_based)) or one_based.min() < 1 or one_based.max() > spec.domain_size:
            raise DomainViolation(f"column '{name}' holds codes outside 1..{spec.domain_size}")
        labels = tuple(str(code) for code in range(1, spec.domain_size + 1))
        return one_based.astype(np.int64) - 1, spec.domain_size, labels
    distinct = sorted(series.astype(str).unique())
    lookup = {label: index for index, label in enumerate(distinct)}
    return series.astype(str).map(lookup).to_numpy(dtype=np.int64), max(2, len(distinct)), tuple(distinct)


def load_schema(schema_path: Union[str, Path]) -> DatasetSchema:
    try:
        return DatasetSchema.model_validate_json(Path(schema_path).read_text())
    except (OSError, ValidationError) as exc:
        raise SchemaError(f"cannot read dataset schema {schema_path}") from exc


def load_csv_dataset(csv_path: Union[str, Path], schema_path: Union[str, Path]) -> Dataset:
    """Load a CSV whose columns are typed by a JSON sidecar schema.

    Numeric columns are normalized into [-1, 1]. Categorical columns use the
    listed categories, 1-based integer codes when only ``domain_size`` is
    given, or the sorted distinct values otherwise. Columns absent from the
    schema are ignored.
    """
    schema = load_schema(schema_path)
    frame = pd.read_csv(csv_path, dtype=str, keep_default_na=True)
    absent = [name for name in schema.columns if name not in frame.columns]
    if absent:
        raise SchemaError(f"schema columns missing from {csv_path}: {', '.join(absent)}")
    frame = frame[list(schema.columns)]
    if frame.empty:
        raise EmptyInput(f"{csv_path} has no data rows")
    _reject_missing(frame)

    numeric_columns = [name for name, spec in schema.columns.items() if spec.type == "numeric"]
    categorical_columns = [name for name, spec in schema.columns.items() if spec.type == "categorical"]

    numeric = np.zeros((len(frame), len(numeric_columns)))
    for position, name in enumerate(numeric_columns):
        try:
            raw = pd.to_numeric(frame[name], errors="raise").to_numpy(dtype=float)
        except (ValueError, TypeError) as exc:
            raise SchemaError(f"column '{name}' is declared numeric but holds non-numeric values") from exc
        numeric[:, position] = normalize_numeric(raw)

    categorical = np.zeros((len(frame), len(categorical_columns)), dtype=np.int64)
    domain_sizes: List[int] = []
    categories: List[Tuple[str, ...]] = []
    for position, name in enumerate(categorical_columns):
        codes, size, labels = _encode_categorical(frame[name], schema.columns[name])
        categorical[:, position] = codes
        domain_sizes.append(size)
        categories.append(labels)

    logger.info(
        "loaded %d rows from %s (%d numeric, %d categorical columns)",
        len(frame), csv_path, len(numeric_columns), len(categorical_columns),
    )
    return Dataset(
        numeric=numeric,
        categorical=categorical,
        domain_sizes=tuple(domain_sizes),
        numeric_columns=tuple(numeric_columns),
        categorical_columns=tuple(categorical_columns),
        categories=tuple(categories),
    )


def one_hot_minus_one(column, k: int) -> np.ndarray:
    """Encode indices in [0, k) as k-1 features in {-1, 1}; index 0 is all -1."""
    column = np.asarray(column, dtype=np.int64)
    encoded = -np.ones((column.size, k - 1))
    rows = np.flatnonzero(column > 0)
    encoded[rows, column[rows] - 1] = 1.0
    return encoded


def binarize_labels(values) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    return np.where(values > values.mean(), 1.0, -1.0)


def default_theta_star(d: int) -> np.ndarray:
    return np.linspace(0.5, -0.5, d) if d > 1 else np.array([0.5])


def gen_regression_task(
    n: int,
    d: int,
    task: Task,
    rng: RandomSource,
    theta_star: Optional[np.ndarray] = None,
) -> Tuple[LabeledData, np.ndarray]:
    """Synthetic features in [-1, 1]^(d-1) plus a constant bias column.

    Linear targets are noiseless ``x . theta*``; logistic labels are drawn
    with P(y=1) = sigmoid(4 x . theta*); SVM labels are the sign of the score.
    """
    if d < 1:
        raise InvalidDimension(f"d must be >= 1, got {d}")
    theta_star = default_theta_star(d) if theta_star is None else np.asarray(theta_star, dtype=float)
    features = np.hstack([rng.uniform((n, d - 1)) * 2.0 - 1.0, np.ones((n, 1))])
    score = features @ theta_star
    if task == Task.LINEAR:
        labels = score
    elif task == Task.LOGISTIC:
        labels = np.where(rng.uniform(n) < expit(4.0 * score), 1.0, -1.0)
    else:
        labels = np.where(score >= 0, 1.0, -1.0)
    return LabeledData(features=features, labels=labels), theta_star


def to_labeled_data(dataset: Dataset, label: str, task: Task) -> LabeledData:
    """Training rows from a loaded dataset.

    Features are the remaining numeric columns, every categorical column in
    the k-1 feature {-1, 1} encoding and a constant bias column. The numeric
    ``label`` column is the target for linear regression and is binarized at
    its mean for the classification tasks.
    """
    if label not in dataset.numeric_columns:
        raise SchemaError(f"label column '{label}' must be a numeric column of the schema")
    position = dataset.numeric_columns.index(label)
    blocks = [np.delete(dataset.numeric, position, axis=1)]
    blocks += [one_hot_minus_one(dataset.categorical[:, j], k) for j, k in enumerate(dataset.domain_sizes)]
    blocks.append(np.ones((dataset.n_users, 1)))
    target = dataset.numeric[:, position]
    labels = target if task == Task.LINEAR else binarize_labels(target)
    return LabeledData(features=np.hstack(blocks), labels=labels)
