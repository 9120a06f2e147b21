import numpy as np
import pytest

from aldp_toolkit.models.core import PrivacyBudget
from aldp_toolkit.services.randomness import RandomSource


@pytest.fixture
def rng():
    return RandomSource(20240601)


@pytest.fixture
def budget():
    return PrivacyBudget(1.0, 1e-6)


@pytest.fixture
def zipf_values():
    source = RandomSource(7)
    pmf = np.power(np.arange(1, 9, dtype=float), -1.3)
    pmf /= pmf.sum()
    return source.generator.choice(8, size=200_000, p=pmf), pmf
