"""Text encoding of categorical reports for CSV cells.

GRR reports are decimal integers. The other protocols are hex strings of a
little-endian binary layout: PRR/SPRR pack the k bits, LH/OLH store the
64-bit seed followed by a 16-bit y, and Opt-GM stores k float64 values.
"""
from __future__ import annotations

import struct
from typing import List, Optional, Sequence

import numpy as np

from aldp_toolkit.exceptions import DimensionMismatch, DomainViolation, SchemaError
from aldp_toolkit.models.core import Protocol
from aldp_toolkit.models.mechanisms import ReportBatch

_HASH_LAYOUT = struct.Struct("<QH")


def _check_range(values: np.ndarray, upper: int, protocol: Protocol, what: str) -> np.ndarray:
    outside = np.flatnonzero((values < 0) | (values >= upper))
    if outside.size:
        row = int(outside[0])
        raise DomainViolation(
            f"{protocol.value} report {row} carries {what}={int(values[row])} outside [0, {upper - 1}]"
        )
    return values


def encode_batch(batch: ReportBatch) -> List[str]:
    protocol = batch.protocol
    if protocol == Protocol.GRR:
        return [str(int(value)) for value in batch.values]
    if protocol in (Protocol.PRR, Protocol.SPRR):
        packed = np.packbits(batch.values.astype(np.uint8), axis=1, bitorder="little")
        return [row.tobytes().hex() for row in packed]
    if protocol in (Protocol.LH, Protocol.OLH):
        return [
            _HASH_LAYOUT.pack(int(seed), int(y)).hex()
            for seed, y in zip(batch.seeds, batch.values)
        ]
    vectors = np.ascontiguousarray(batch.values, dtype="<f8")
    return [row.tobytes().hex() for row in vectors]


def decode_batch(cells: Sequence[str], protocol: Protocol, k: int, g: Optional[int] = None) -> ReportBatch:
    try:
        if protocol == Protocol.GRR:
            values = np.array([int(cell) for cell in cells], dtype=np.int64)
            _check_range(values, k, protocol, "value")
            return ReportBatch(protocol=protocol, k=k, values=values)
        if protocol in (Protocol.PRR, Protocol.SPRR):
            packed = np.array([list(bytes.fromhex(cell)) for cell in cells], dtype=np.uint8)
            bits = np.unpackbits(packed, axis=1, count=k, bitorder="little").astype(bool)
            return ReportBatch(protocol=protocol, k=k, values=bits)
        if protocol in (Protocol.LH, Protocol.OLH):
            pairs = [_HASH_LAYOUT.unpack(bytes.fromhex(cell)) for cell in cells]
            seeds = np.array([seed for seed, _ in pairs], dtype=np.uint64)
            values = np.array([y for _, y in pairs], dtype=np.int64)
            if g is None:
                raise SchemaError(f"{protocol.value} reports need the hash range g")
            _check_range(values, g, protocol, "y")
            return ReportBatch(protocol=protocol, k=k, values=values, seeds=seeds, g=g)
        vectors = np.array([np.frombuffer(bytes.fromhex(cell), dtype="<f8") for cell in cells])
    except (ValueError, struct.error) as exc:
        raise SchemaError(f"malformed {protocol.value} report cell") from exc
    if vectors.ndim != 2 or vectors.shape[1] != k:
        raise DimensionMismatch(f"Opt-GM reports must carry {k} values")
    return ReportBatch(protocol=protocol, k=k, values=vectors.astype(float))
