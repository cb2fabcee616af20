"""Progressive validation policy built from a completed DR-ns trajectory."""

import math
from typing import Any

import numpy as np

from ..bounds import freedman_half_width
from ..errors import DomainError
from ..policies import NonstationaryPolicy, StationaryPolicy
from ..types import Features
from .drns import DrnsState


class FrozenHistoryPolicy(StationaryPolicy):
    """π(·|·, h) with the history held fixed."""

    def __init__(self, target: NonstationaryPolicy, state: Any):
        super().__init__(target.n_actions)
        self.target = target
        self.state = state

    def distribution(self, features: Features) -> np.ndarray:
        return self.target.distribution(features, self.state)


class ProgressiveValidationPolicy(StationaryPolicy):
    """Σ_t (c_t|B(t)|/C)·π(·|·, h_{t−1}) over the blocks of one trajectory.

    Sampling first picks a block t with its weight, then acts with π at the
    snapshot h_{t−1}.
    """

    def __init__(
        self,
        target: NonstationaryPolicy,
        snapshots: list[Any],
        multipliers: list[float],
        block_sizes: list[int],
    ):
        super().__init__(target.n_actions)
        if not snapshots or not len(snapshots) == len(multipliers) == len(block_sizes):
            raise DomainError("one snapshot, multiplier and block size per block")
        masses = [c * size for c, size in zip(multipliers, block_sizes, strict=True)]
        total = math.fsum(masses)
        if total <= 0:
            raise DomainError("blocks carry no mass")
        self.components = [FrozenHistoryPolicy(target, s) for s in snapshots]
        self.weights = np.array([m / total for m in masses])
        self.total_mass = total

    @property
    def n_blocks(self) -> int:
        return len(self.components)

    def distribution(self, features: Features) -> np.ndarray:
        dist = np.zeros(self.n_actions)
        for weight, component in zip(self.weights, self.components, strict=True):
            dist += weight * component.distribution(features)
        return dist

    def sample(self, features: Features, rng: np.random.Generator) -> int:
        block = int(rng.choice(self.n_blocks, p=self.weights / self.weights.sum()))
        return self.components[block].sample(features, rng)


def progressive_validation_policy(
    state: DrnsState, target: NonstationaryPolicy
) -> ProgressiveValidationPolicy:
    """Stationary mixture of the snapshots h_0..h_{T−1} of a successful run."""
    if not state.success:
        raise DomainError("progressive validation needs a successful DR-ns run")
    return ProgressiveValidationPolicy(
        target, state.snapshots, state.block_multipliers, state.block_sizes
    )


def progressive_validation_bound(
    N: int,
    C: float,
    c_max: float,
    M: float,
    v_r: float,
    e_rhat: float,
    delta: float,
) -> float:
    """Deviation of V_avg from the value of the progressive validation policy.

    With probability ≥ 1 − δ the gap is at most
    (N·c_max/C)·2·max{(1+M)ln(2/δ)/N, sqrt((v_r + M·e_r̂)ln(2/δ)/N)}.
    """
    if C <= 0:
        raise DomainError("C must be positive")
    if not 0 < c_max <= 1:
        raise DomainError(f"c_max must be in (0, 1], got {c_max}")
    if M < 0 or v_r < 0 or e_rhat < 0:
        raise DomainError("M, v_r and e_rhat must be non-negative")
    return N * c_max / C * freedman_half_width(N, 1.0 + M, v_r + M * e_rhat, delta)
