"""Shared fixtures: a small enumerable instance and logs drawn from it."""

from pathlib import Path

import numpy as np
import pytest

from dreval.datagen import DGPSpec, make_discrete_dgp
from dreval.dgp import DiscreteDGP, sample_log

REPO_ROOT = Path(__file__).parent.parent


@pytest.fixture
def repo_root() -> Path:
    return REPO_ROOT


@pytest.fixture
def small_dgp() -> DiscreteDGP:
    """Three contexts, three actions, two-point reward laws."""
    return make_discrete_dgp(DGPSpec(n_contexts=3, n_actions=3, support_size=2, seed=3))


@pytest.fixture
def tiny_dgp() -> DiscreteDGP:
    """Two contexts and two actions with hand-written tables."""
    return DiscreteDGP(
        context_probs=np.array([0.6, 0.4]),
        mu=np.array([[0.7, 0.3], [0.2, 0.8]]),
        reward_values=np.array([[[0.0, 1.0], [0.0, 1.0]], [[0.0, 1.0], [0.0, 1.0]]]),
        reward_probs=np.array([[[0.5, 0.5], [0.1, 0.9]], [[0.8, 0.2], [0.3, 0.7]]]),
    )


@pytest.fixture
def small_log(small_dgp):
    return sample_log(small_dgp, 500, seed=11)
