# aldp_toolkit/models/training.py
"""Private SGD model types."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, Field

from aldp_toolkit.models.core import NumericMechanism, PrivacyBudget, Task


class ModelSpec(BaseModel):
    task: Task
    dims: int = Field(ge=1, description="feature dimension including the bias column")
    learning_rate: float = Field(default=0.1, gt=0)
    batch_size: int = Field(default=1000, ge=1)


@dataclass(frozen=True, eq=False)
class LabeledData:
    features: np.ndarray
    labels: np.ndarray

    def __len__(self) -> int:
        return int(self.features.shape[0])

    def subset(self, index: np.ndarray) -> LabeledData:
        return LabeledData(features=self.features[index], labels=self.labels[index])


@dataclass(frozen=True)
class IterationMetrics:
    iteration: int
    loss: float
    test_metric: Optional[float]


@dataclass
class TrainingRun:
    mechanism: NumericMechanism
    budget: Optional[PrivacyBudget]
    theta_history: List[np.ndarray] = field(default_factory=list)
    batches: List[np.ndarray] = field(default_factory=list)
    metrics: List[IterationMetrics] = field(default_factory=list)

    @property
    def theta(self) -> np.ndarray:
        return self.theta_history[-1]

    @property
    def iterations(self) -> int:
        return len(self.batches)

    @property
    def users_consumed(self) -> int:
        return int(sum(batch.size for batch in self.batches))
