"""Seeded, splittable randomness.

Every stream is a counter-based Philox generator keyed by the master seed and
a spawn path, so ``RandomSource(seed).derive(i)`` gives the same draws
regardless of which process or in which order it is created.
"""
from __future__ import annotations

from typing import Optional, Sequence, Tuple, Union

import numpy as np

_SEED_MODULUS = 2**64

Size = Optional[Union[int, Tuple[int, ...]]]


class RandomSource:
    def __init__(self, seed: int, stream: Sequence[int] = ()) -> None:
        self.seed = int(seed) % _SEED_MODULUS
        self.stream: Tuple[int, ...] = tuple(int(index) for index in stream)
        sequence = np.random.SeedSequence(entropy=self.seed, spawn_key=self.stream)
        self._generator = np.random.Generator(np.random.Philox(sequence))

    def __repr__(self) -> str:
        return f"RandomSource(seed={self.seed}, stream={self.stream})"

    @property
    def generator(self) -> np.random.Generator:
        return self._generator

    def derive(self, *index: int) -> RandomSource:
        """Independent child stream addressed by ``index`` under this stream."""
        return RandomSource(self.seed, self.stream + tuple(int(i) for i in index))

    def uniform(self, size: Size = None) -> np.ndarray:
        return self._generator.random(size)

    def bernoulli(self, p, size: Size = None) -> np.ndarray:
        return self._generator.random(size) < p

    def integers(self, high: int, size: Size = None, low: int = 0) -> np.ndarray:
        return self._generator.integers(low, high, size=size)

    def gaussian(self, size: Size = None) -> np.ndarray:
        return self._generator.standard_normal(size)

    def uint64(self, size: int) -> np.ndarray:
        return np.asarray(self._generator.bit_generator.random_raw(size), dtype=np.uint64)

    def permutation(self, n: int) -> np.ndarray:
        return self._generator.permutation(n)

    def subset_mask(self, rows: int, dims: int, counts) -> np.ndarray:
        """Boolean (rows, dims) mask with ``counts[i]`` uniformly placed True entries in row i."""
        ranks = np.argsort(np.argsort(self._generator.random((rows, dims)), axis=1), axis=1)
        return ranks < np.reshape(counts, (-1, 1))
