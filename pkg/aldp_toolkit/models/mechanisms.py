# aldp_toolkit/models/mechanisms.py
"""Mechanism parameters and report types."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from aldp_toolkit.exceptions import DimensionMismatch, MixedProtocolReports
from aldp_toolkit.models.core import NumericMechanism, PrivacyBudget, Protocol, TieRule


@dataclass(frozen=True)
class Mech1Params:
    """Constants of the sign-vector mechanism for one dimension and budget.

    ``t_plus`` and ``t_minus`` are the sizes of the output sets whose inner
    product with the sampled sign vector is positive (resp. not), and
    ``alpha`` is the probability of drawing from the positive set.
    """

    d: int
    budget: PrivacyBudget
    tie_rule: TieRule
    c_d: int
    t_plus: int
    t_minus: int
    alpha: float
    b: float


@dataclass(frozen=True, eq=False)
class NumericReport:
    values: np.ndarray
    mechanism: NumericMechanism

    @property
    def nonzero(self) -> int:
        return int(np.count_nonzero(self.values))


@dataclass(frozen=True)
class GaussianCalibration:
    xi: float
    sigma: float
    sensitivity: float
    budget: PrivacyBudget


@dataclass(frozen=True)
class ProtocolParams:
    protocol: Protocol
    k: int
    budget: PrivacyBudget
    p: float
    q: float
    p_star: float
    q_star: float
    g: Optional[int] = None
    sigma: Optional[float] = None


@dataclass(frozen=True)
class AnalyticVariance:
    exact: float
    approximate: float


Payload = Union[int, Tuple[int, ...], Tuple[int, int], Tuple[float, ...]]


@dataclass(frozen=True)
class CategoricalReport:
    """A single user's report.

    GRR carries the reported index, PRR/SPRR the bit tuple, LH/OLH the
    ``(seed, y)`` pair and Opt-GM the noisy one-hot vector.
    """

    protocol: Protocol
    k: int
    payload: Payload
    g: Optional[int] = None


@dataclass(frozen=True, eq=False)
class ReportBatch:
    """Column-oriented reports of one protocol.

    ``values`` is (N,) int for GRR and the ``y`` column for LH/OLH,
    (N, k) bool for PRR/SPRR and (N, k) float for Opt-GM.
    """

    protocol: Protocol
    k: int
    values: np.ndarray
    seeds: Optional[np.ndarray] = None
    g: Optional[int] = None

    def __len__(self) -> int:
        return int(self.values.shape[0])

    def report(self, index: int) -> CategoricalReport:
        row = self.values[index]
        if self.protocol == Protocol.GRR:
            payload: Payload = int(row)
        elif self.protocol in (Protocol.PRR, Protocol.SPRR):
            payload = tuple(int(bit) for bit in row)
        elif self.protocol in (Protocol.LH, Protocol.OLH):
            payload = (int(self.seeds[index]), int(row))
        else:
            payload = tuple(float(value) for value in row)
        return CategoricalReport(protocol=self.protocol, k=self.k, payload=payload, g=self.g)

    @classmethod
    def from_reports(cls, reports: Sequence[CategoricalReport]) -> ReportBatch:
        if not reports:
            raise MixedProtocolReports("cannot build a batch from zero reports")
        first = reports[0]
        for report in reports:
            if (report.protocol, report.k, report.g) != (first.protocol, first.k, first.g):
                raise MixedProtocolReports(
                    f"report from {report.protocol.value} (k={report.k}, g={report.g}) mixed with "
                    f"{first.protocol.value} (k={first.k}, g={first.g})"
                )
        seeds = None
        if first.protocol == Protocol.GRR:
            values = np.array([report.payload for report in reports], dtype=np.int64)
        elif first.protocol in (Protocol.PRR, Protocol.SPRR):
            values = np.array([report.payload for report in reports], dtype=bool)
        elif first.protocol in (Protocol.LH, Protocol.OLH):
            seeds = np.array([report.payload[0] for report in reports], dtype=np.uint64)
            values = np.array([report.payload[1] for report in reports], dtype=np.int64)
        else:
            values = np.array([report.payload for report in reports], dtype=float)
        if values.ndim == 2 and values.shape[1] != first.k:
            raise DimensionMismatch(f"expected {first.k} components per report, got {values.shape[1]}")
        return cls(protocol=first.protocol, k=first.k, values=values, seeds=seeds, g=first.g)


@dataclass(frozen=True, eq=False)
class SupportCounts:
    """Partial support counts; shards merge with ``+``."""

    protocol: Protocol
    counts: np.ndarray
    n: int

    def __add__(self, other: SupportCounts) -> SupportCounts:
        if other.protocol != self.protocol or other.counts.shape != self.counts.shape:
            raise MixedProtocolReports("support counts from different protocols or domains")
        return SupportCounts(protocol=self.protocol, counts=self.counts + other.counts, n=self.n + other.n)


@dataclass(frozen=True, eq=False)
class FrequencyEstimate:
    raw_counts: np.ndarray
    counts: np.ndarray
    frequencies: np.ndarray
    n: int

    @property
    def raw_frequencies(self) -> np.ndarray:
        return self.raw_counts / self.n
