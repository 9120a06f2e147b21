"""Seeded 64-bit hash family used by the local-hashing protocols.

Each value is hashed as its 8-byte little-endian encoding with xxHash64
under the report's seed, then reduced modulo the hash range ``g``.
"""
from __future__ import annotations

import numpy as np
import xxhash


def seeded_hash(seeds, values, g: int) -> np.ndarray:
    """Hash ``values`` under ``seeds`` into [0, g); the two arguments broadcast."""
    seeds, values = np.broadcast_arrays(np.asarray(seeds, dtype=np.uint64), np.asarray(values, dtype=np.int64))
    encoded = {value: value.to_bytes(8, "little", signed=True) for value in np.unique(values).tolist()}
    digests = np.fromiter(
        (
            xxhash.xxh64_intdigest(encoded[value], seed=seed)
            for seed, value in zip(seeds.ravel().tolist(), values.ravel().tolist())
        ),
        dtype=np.uint64,
        count=seeds.size,
    )
    return (digests % np.uint64(g)).astype(np.int64).reshape(seeds.shape)
