"""Fully enumerable data-generating processes with exact ground truth."""

from collections.abc import Iterator

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .errors import DomainError
from .policies import StationaryPolicy, TablePolicy, validate_distribution
from .types import Context, Features, LogEvent

TABLE_TOLERANCE = 1e-12


class DiscreteDGP(BaseModel):
    """Finite contexts, finite-support reward laws and a stationary logger μ.

    Context ``i`` is observed through ``context_features[i]``; by default
    that is the one-hot vector ``{i: 1.0}``, which makes any r* linear.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    context_probs: np.ndarray
    mu: np.ndarray
    reward_values: np.ndarray
    reward_probs: np.ndarray
    context_features: list[Features] = Field(default_factory=list)

    @model_validator(mode="after")
    def _check_tables(self) -> "DiscreteDGP":
        n_contexts = self.context_probs.shape[0]
        n_actions = self.mu.shape[1]
        if self.mu.shape != (n_contexts, n_actions):
            raise ValueError("mu must be (contexts x actions)")
        if self.reward_values.shape != self.reward_probs.shape:
            raise ValueError("reward_values and reward_probs must match")
        if self.reward_values.shape[:2] != (n_contexts, n_actions):
            raise ValueError("reward tables must be (contexts x actions x support)")
        if abs(self.context_probs.sum() - 1.0) > TABLE_TOLERANCE or np.any(
            self.context_probs < 0
        ):
            raise ValueError("context distribution must be normalized")
        if np.any(np.abs(self.mu.sum(axis=1) - 1.0) > TABLE_TOLERANCE) or np.any(
            self.mu < 0
        ):
            raise ValueError("every row of mu must be normalized")
        if np.any(np.abs(self.reward_probs.sum(axis=2) - 1.0) > TABLE_TOLERANCE) or np.any(
            self.reward_probs < 0
        ):
            raise ValueError("every reward law must be normalized")
        if np.any(self.reward_values < 0) or np.any(self.reward_values > 1):
            raise ValueError("reward support must lie in [0, 1]")
        if not self.context_features:
            object.__setattr__(
                self,
                "context_features",
                [Features(indices=(i,), values=(1.0,)) for i in range(n_contexts)],
            )
        if len(self.context_features) != n_contexts or len(
            set(self.context_features)
        ) != n_contexts:
            raise ValueError("need one distinct feature vector per context")
        return self

    @property
    def n_contexts(self) -> int:
        return self.context_probs.shape[0]

    @property
    def n_actions(self) -> int:
        return self.mu.shape[1]

    @property
    def r_star(self) -> np.ndarray:
        """r*(x, a) = E[r | x, a]."""
        return (self.reward_values * self.reward_probs).sum(axis=2)

    @property
    def reward_variance(self) -> np.ndarray:
        """Var(r | x, a)."""
        second = (self.reward_values**2 * self.reward_probs).sum(axis=2)
        return np.maximum(second - self.r_star**2, 0.0)

    @property
    def context_index(self) -> dict[Features, int]:
        return {f: i for i, f in enumerate(self.context_features)}

    def context(self, index: int) -> Context:
        return Context(features=self.context_features[index])

    def policy_table(self, policy: StationaryPolicy) -> np.ndarray:
        """ν as a (contexts x actions) table."""
        table = np.vstack([policy.distribution(f) for f in self.context_features])
        for row in table:
            validate_distribution(row, self.n_actions)
        return table

    def as_policy(self, table: np.ndarray) -> TablePolicy:
        return TablePolicy(table, self.context_index)

    def logging_policy(self) -> TablePolicy:
        return self.as_policy(self.mu)

    def enumerate_joint(self) -> Iterator[tuple[int, int, float, float]]:
        """Yield (x, a, r, probability) over the logging joint law with positive mass."""
        for x in range(self.n_contexts):
            for a in range(self.n_actions):
                for value, prob in zip(
                    self.reward_values[x, a], self.reward_probs[x, a], strict=True
                ):
                    mass = self.context_probs[x] * self.mu[x, a] * prob
                    if mass > 0:
                        yield x, a, float(value), float(mass)

    def sample(
        self, n: int, rng: np.random.Generator
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Draw n IID (x, a, r, p) tuples as arrays."""
        xs = rng.choice(self.n_contexts, size=n, p=self.context_probs)
        cum_mu = np.cumsum(self.mu[xs], axis=1)
        actions = np.minimum(
            (rng.random(n)[:, None] > cum_mu).sum(axis=1), self.n_actions - 1
        )
        cum_r = np.cumsum(self.reward_probs[xs, actions], axis=1)
        slots = np.minimum(
            (rng.random(n)[:, None] > cum_r).sum(axis=1), self.reward_values.shape[2] - 1
        )
        rewards = self.reward_values[xs, actions, slots]
        return xs, actions, rewards, self.mu[xs, actions]


def policy_value_exact(dgp: DiscreteDGP, policy: StationaryPolicy | np.ndarray) -> float:
    """V(ν) = Σ_x D(x) Σ_a ν(a|x) Σ_r D(r|x,a)·r."""
    table = policy if isinstance(policy, np.ndarray) else dgp.policy_table(policy)
    expected = (dgp.reward_values * dgp.reward_probs).sum(axis=2)
    return float(np.sum(dgp.context_probs[:, None] * table * expected))


def sample_log(dgp: DiscreteDGP, n: int, seed: int) -> list[LogEvent]:
    """IID exploration log with exact recorded propensities."""
    if n < 1:
        raise DomainError("sample size must be positive")
    rng = np.random.default_rng(seed)
    xs, actions, rewards, props = dgp.sample(n, rng)
    contexts = [dgp.context(i) for i in range(dgp.n_contexts)]
    return [
        LogEvent(
            context=contexts[x], action=int(a), outcome=float(r), propensity=float(p)
        )
        for x, a, r, p in zip(xs, actions, rewards, props, strict=True)
    ]
