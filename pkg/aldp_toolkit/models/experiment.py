# aldp_toolkit/models/experiment.py
"""Experiment configuration and result rows."""
from __future__ import annotations

from enum import Enum
from pathlib import Path
from typing import List, Optional

from pydantic import BaseModel, Field, field_validator

from aldp_toolkit.models.core import DuchiVariant, Task, TieRule


class ExperimentTask(str, Enum):
    MEAN = "MEAN"
    FREQ = "FREQ"
    VARIANCE_TABLE = "VARIANCE_TABLE"
    SGD = "SGD"
    PRIVACY_AUDIT = "PRIVACY_AUDIT"


class ExperimentConfig(BaseModel):
    task: ExperimentTask
    mechanisms: List[str] = Field(min_length=1)
    epsilons: List[float] = Field(min_length=1)
    deltas: List[float] = Field(min_length=1)
    sizes: List[int] = Field(min_length=1, description="d for numeric tasks, k for categorical tasks")
    n_users: int = Field(default=50_000, ge=1)
    repetitions: int = Field(default=1, ge=1)
    seed: int = 42
    tie_rule: TieRule = TieRule.STRICT
    duchi_variant: DuchiVariant = DuchiVariant.FIXED_STRICT
    zipf_exponent: float = Field(default=1.3, gt=0)
    gaussian_sd: float = Field(default=0.25, gt=0)
    prr_q: Optional[float] = None
    sgd_task: Task = Task.LINEAR
    learning_rate: float = Field(default=0.1, gt=0)
    batch_size: int = Field(default=1000, ge=1)
    test_fraction: float = Field(default=0.1, gt=0, lt=1)
    workers: int = Field(default=1, ge=1)
    metrics_dir: Optional[Path] = None

    @field_validator("mechanisms")
    @classmethod
    def _upper(cls, value: List[str]) -> List[str]:
        return [item.strip().upper().replace("-", "_") for item in value]


class MseRecord(BaseModel):
    mechanism: str
    epsilon: float
    delta: float
    size: int
    n_users: int
    repetition: int
    mse: float = Field(ge=0)


class SgdRecord(BaseModel):
    mechanism: str
    task: Task
    epsilon: float
    delta: float
    delta_used: float
    dims: int
    n_users: int
    repetition: int
    iterations: int
    metric: float = Field(ge=0)


class VarianceRow(BaseModel):
    epsilon: float
    delta: float
    mechanism: str
    parameter: int
    variance: float


class AuditReport(BaseModel):
    mechanism: str
    size: int
    epsilon: float
    delta: float
    max_excess: float
    max_ratio: float
    slack: float
    passed: bool
