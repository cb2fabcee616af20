"""Target policy contracts and the stock implementations.

Policies only ever see a context's ``Features``; the hidden payload of a
``Context`` never crosses this interface.
"""

from abc import ABC, abstractmethod
from collections.abc import Callable, Mapping, Sequence
from typing import Any

import numpy as np

from .errors import DomainError
from .types import Features

DISTRIBUTION_TOLERANCE = 1e-9

History = tuple[tuple[Features, int, float], ...]


def validate_distribution(dist: np.ndarray, n_actions: int) -> np.ndarray:
    """Check that ``dist`` is a probability vector over ``n_actions`` actions."""
    if dist.shape != (n_actions,):
        raise DomainError(f"expected {n_actions} probabilities, got shape {dist.shape}")
    if np.any(dist < 0) or abs(float(dist.sum()) - 1.0) > DISTRIBUTION_TOLERANCE:
        raise DomainError(f"not a probability vector: {dist.tolist()}")
    return dist


class StationaryPolicy(ABC):
    """ν(a|x): a fixed conditional distribution over actions."""

    def __init__(self, n_actions: int):
        if n_actions < 1:
            raise DomainError("a policy needs at least one action")
        self.n_actions = n_actions

    @abstractmethod
    def distribution(self, features: Features) -> np.ndarray:
        """Return the probability vector over actions for ``features``."""
        pass

    def sample(self, features: Features, rng: np.random.Generator) -> int:
        return int(rng.choice(self.n_actions, p=self.distribution(features)))

    @property
    def is_deterministic(self) -> bool:
        return False


class DeterministicPolicy(StationaryPolicy):
    """A classifier: all mass on one action per context."""

    @abstractmethod
    def action(self, features: Features) -> int:
        pass

    def distribution(self, features: Features) -> np.ndarray:
        dist = np.zeros(self.n_actions)
        dist[self.action(features)] = 1.0
        return dist

    def sample(self, features: Features, rng: np.random.Generator) -> int:
        return self.action(features)

    @property
    def is_deterministic(self) -> bool:
        return True


class UniformPolicy(StationaryPolicy):
    def distribution(self, features: Features) -> np.ndarray:
        return np.full(self.n_actions, 1.0 / self.n_actions)


class ConstantActionPolicy(DeterministicPolicy):
    """Always plays the same action."""

    def __init__(self, n_actions: int, action: int):
        super().__init__(n_actions)
        if not 0 <= action < n_actions:
            raise DomainError(f"action {action} out of range for K={n_actions}")
        self._action = action

    def action(self, features: Features) -> int:
        return self._action


class TablePolicy(StationaryPolicy):
    """Policy over a finite context set given as a (contexts x actions) table."""

    def __init__(self, table: np.ndarray, context_index: Mapping[Features, int]):
        table = np.asarray(table, dtype=float)
        super().__init__(table.shape[1])
        for row in table:
            validate_distribution(row, self.n_actions)
        self.table = table
        self.context_index = dict(context_index)

    def distribution(self, features: Features) -> np.ndarray:
        try:
            return self.table[self.context_index[features]].copy()
        except KeyError:
            raise DomainError(f"context {features.to_mapping()} is not in the table") from None

    @property
    def is_deterministic(self) -> bool:
        return bool(np.all(np.isin(self.table, (0.0, 1.0))))


class MixturePolicy(StationaryPolicy):
    """Finite mixture Σ_i w_i ν_i; sampling first draws a component."""

    def __init__(self, components: Sequence[StationaryPolicy], weights: Sequence[float]):
        if not components or len(components) != len(weights):
            raise DomainError("mixture needs one weight per component")
        super().__init__(components[0].n_actions)
        if any(c.n_actions != self.n_actions for c in components):
            raise DomainError("mixture components disagree on K")
        weights_array = np.asarray(weights, dtype=float)
        if np.any(weights_array < 0) or abs(weights_array.sum() - 1.0) > 1e-12:
            raise DomainError("mixture weights must be non-negative and sum to 1")
        self.components = list(components)
        self.weights = weights_array

    def distribution(self, features: Features) -> np.ndarray:
        dist = np.zeros(self.n_actions)
        for weight, component in zip(self.weights, self.components, strict=True):
            if weight > 0:
                dist += weight * component.distribution(features)
        return dist

    def sample(self, features: Features, rng: np.random.Generator) -> int:
        index = int(rng.choice(len(self.components), p=self.weights))
        return self.components[index].sample(features, rng)


class NonstationaryPolicy(ABC):
    """π(a|x, h): a policy whose distribution depends on a simulated history.

    The history state is an opaque, immutable value. ``observe`` returns a new
    state and never mutates its argument, so earlier states can be kept as
    frozen snapshots.
    """

    def __init__(self, n_actions: int):
        if n_actions < 1:
            raise DomainError("a policy needs at least one action")
        self.n_actions = n_actions

    @abstractmethod
    def initial_state(self) -> Any:
        """Return h_0, the empty-history state."""
        pass

    @abstractmethod
    def distribution(self, features: Features, state: Any) -> np.ndarray:
        pass

    @abstractmethod
    def observe(self, state: Any, features: Features, action: int, outcome: float) -> Any:
        """Return the state after appending (features, action, outcome)."""
        pass


class StationaryAsNonstationary(NonstationaryPolicy):
    """Wraps a stationary policy; the history is ignored."""

    def __init__(self, policy: StationaryPolicy):
        super().__init__(policy.n_actions)
        self.policy = policy

    def initial_state(self) -> None:
        return None

    def distribution(self, features: Features, state: Any) -> np.ndarray:
        return self.policy.distribution(features)

    def observe(self, state: Any, features: Features, action: int, outcome: float) -> None:
        return None


class HistoryCallablePolicy(NonstationaryPolicy):
    """Nonstationary policy defined by ``fn(features, history)``.

    The state is the tuple of observed (features, action, outcome) triples,
    which makes small instances exactly enumerable.
    """

    def __init__(self, n_actions: int, fn: Callable[[Features, History], Sequence[float]]):
        super().__init__(n_actions)
        self.fn = fn

    def initial_state(self) -> History:
        return ()

    def distribution(self, features: Features, state: History) -> np.ndarray:
        return validate_distribution(np.asarray(self.fn(features, state), dtype=float), self.n_actions)

    def observe(
        self, state: History, features: Features, action: int, outcome: float
    ) -> History:
        return state + ((features, action, outcome),)
