import numpy as np
import pytest
import xxhash

from aldp_toolkit.services.hashing import seeded_hash
from aldp_toolkit.services.randomness import RandomSource


class TestSeededHash:
    def test_matches_xxhash(self):
        seeds = RandomSource(0).uint64(20)
        expected = [xxhash.xxh64_intdigest((3).to_bytes(8, "little"), seed=int(seed)) % 97 for seed in seeds]
        np.testing.assert_array_equal(seeded_hash(seeds, 3, 97), expected)

    def test_deterministic(self):
        seeds = RandomSource(1).uint64(100)
        np.testing.assert_array_equal(seeded_hash(seeds, 5, 64), seeded_hash(seeds, 5, 64))

    def test_range_and_broadcast(self):
        seeds = RandomSource(2).uint64(50)[:, np.newaxis]
        hashed = seeded_hash(seeds, np.arange(7)[np.newaxis, :], 13)
        assert hashed.shape == (50, 7)
        assert hashed.min() >= 0 and hashed.max() < 13
        np.testing.assert_array_equal(hashed[:, 4], seeded_hash(seeds[:, 0], 4, 13))

    @pytest.mark.parametrize("g", [2, 16, 101])
    @pytest.mark.parametrize("pair", [(0, 1), (3, 17), (1000, 1001)])
    def test_collision_rate(self, g, pair):
        trials = 100_000
        seeds = RandomSource(g).uint64(trials)
        collisions = np.mean(seeded_hash(seeds, pair[0], g) == seeded_hash(seeds, pair[1], g))
        standard_error = np.sqrt((1 / g) * (1 - 1 / g) / trials)
        assert collisions <= 1 / g + 3 * standard_error

    def test_uniform_buckets(self):
        seeds = RandomSource(4).uint64(160_000)
        counts = np.bincount(seeded_hash(seeds, 42, 16), minlength=16)
        np.testing.assert_allclose(counts / 160_000, 1 / 16, atol=0.004)
