"""Reward and propensity model contracts (the r̂ and μ̂ plug-ins)."""

import math
from abc import ABC, abstractmethod
from collections.abc import Mapping, Sequence

import numpy as np

from .errors import DomainError
from .types import Context, Features, LogEvent


class RewardModel(ABC):
    """r̂(x, a): outcome predictions, clamped to [0, 1]."""

    def __init__(self, n_actions: int):
        self.n_actions = n_actions

    @abstractmethod
    def _predict(self, features: Features) -> np.ndarray:
        """Unclamped predictions for every action."""
        pass

    def predict_all(self, features: Features) -> np.ndarray:
        return np.clip(self._predict(features), 0.0, 1.0)

    def predict(self, features: Features, action: int) -> float:
        return float(self.predict_all(features)[action])

    def policy_value(self, features: Features, dist: np.ndarray) -> float:
        """r̂(x, ν) = Σ_a ν(a|x) r̂(x, a)."""
        return policy_weighted(dist, self.predict_all(features))


def policy_weighted(dist: np.ndarray, predictions: np.ndarray) -> float:
    """Compensated Σ_a dist[a]·predictions[a]."""
    return math.fsum((dist * predictions).tolist())


class ConstantRewardModel(RewardModel):
    def __init__(self, n_actions: int, value: float = 0.0):
        super().__init__(n_actions)
        self.value = value

    def _predict(self, features: Features) -> np.ndarray:
        return np.full(self.n_actions, self.value)


class TableRewardModel(RewardModel):
    """Predictions from a (contexts x actions) table over a finite context set."""

    def __init__(self, table: np.ndarray, context_index: Mapping[Features, int]):
        table = np.asarray(table, dtype=float)
        super().__init__(table.shape[1])
        self.table = table
        self.context_index = dict(context_index)

    def _predict(self, features: Features) -> np.ndarray:
        try:
            return self.table[self.context_index[features]]
        except KeyError:
            raise DomainError(f"context {features.to_mapping()} is not in the table") from None


class OracleRewardModel(RewardModel):
    """Per-context lookup of the true expected outcomes, with a fallback vector."""

    def __init__(
        self,
        n_actions: int,
        truth: Mapping[Features, Sequence[float]],
        fallback: float = 0.5,
    ):
        super().__init__(n_actions)
        self.truth = {k: np.asarray(v, dtype=float) for k, v in truth.items()}
        self.fallback = fallback

    def _predict(self, features: Features) -> np.ndarray:
        found = self.truth.get(features)
        return found if found is not None else np.full(self.n_actions, self.fallback)


class PropensityModel(ABC):
    """μ̂_k(a|x) in (0, +∞]; +∞ switches the importance correction off."""

    @abstractmethod
    def estimate(self, context: Context, action: int, event_index: int) -> float:
        pass


class LoggedPropensityModel(PropensityModel):
    """Returns the propensity recorded in the log (perfect logging)."""

    def __init__(self, events: Sequence[LogEvent]):
        self.events = events

    def estimate(self, context: Context, action: int, event_index: int) -> float:
        event = self.events[event_index]
        if event.action != action:
            raise DomainError(
                f"event {event_index} logged action {event.action}, asked about {action}"
            )
        return event.propensity


class ConstantPropensityModel(PropensityModel):
    def __init__(self, value: float):
        if not value > 0:
            raise DomainError("propensity estimates must be positive")
        self.value = value

    def estimate(self, context: Context, action: int, event_index: int) -> float:
        return self.value


class InfinitePropensityModel(ConstantPropensityModel):
    """μ̂ ≡ +∞, which turns DR into DM."""

    def __init__(self) -> None:
        super().__init__(math.inf)


class TablePropensityModel(PropensityModel):
    """μ̂ from a (contexts x actions) table, optionally inflated by ``scale``."""

    def __init__(
        self,
        table: np.ndarray,
        context_index: Mapping[Features, int],
        scale: float = 1.0,
    ):
        self.table = np.asarray(table, dtype=float) * scale
        if np.any(self.table <= 0):
            raise DomainError("propensity table must be strictly positive")
        self.context_index = dict(context_index)

    def estimate(self, context: Context, action: int, event_index: int) -> float:
        return float(self.table[self.context_index[context.features], action])


class ClippedPropensityModel(PropensityModel):
    """Raises another model's estimates to at least 1/M, capping ν/μ̂ at M."""

    def __init__(self, base: PropensityModel, M: float):
        if not M > 0:
            raise DomainError("weight cap M must be positive")
        self.base = base
        self.M = M

    def estimate(self, context: Context, action: int, event_index: int) -> float:
        return max(self.base.estimate(context, action, event_index), 1.0 / self.M)
