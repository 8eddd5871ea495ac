import numpy as np
import pytest

from csaloha.cli import PRESETS
from csaloha.model import SystemConfig


@pytest.fixture
def scenario1():
    return PRESETS["scenario1"]


@pytest.fixture
def scenario2():
    return PRESETS["scenario2"]


@pytest.fixture
def scenario3():
    return PRESETS["scenario3"]


def random_config(rng: np.random.Generator, max_l: int = 3, max_j: int = 2) -> SystemConfig:
    """Random valid config; roughly a third of the alpha entries are zero."""
    L = int(rng.integers(1, max_l + 1))
    J = int(rng.integers(1, max_j + 1))
    a = rng.dirichlet(np.ones(L))
    a = np.maximum(a, 0.05)
    a /= a.sum()
    b = rng.dirichlet(np.ones(J))
    b = np.maximum(b, 0.05)
    b /= b.sum()
    alpha = rng.uniform(0, 6, size=(L, J)) * (rng.random((L, J)) > 0.3)
    e = rng.uniform(0, 1, size=L)
    eps = float(rng.uniform(-0.7, 1.5))
    return SystemConfig.build(a, e, alpha, eps, slot_fractions=b)
