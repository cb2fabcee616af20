"""ε-greedy online learner used as the nonstationary target policy."""

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from ..datagen import MultilabelDataset
from ..errors import DomainError
from ..policies import NonstationaryPolicy
from ..types import Features, feature_matrix
from .linear import LinearModel, fit_logistic_heads

Observation = tuple[Features, int, float]


@dataclass(frozen=True)
class EpsilonGreedyState:
    """Current heads, every observation so far and the observe count."""
    heads: LinearModel
    buffer: tuple[Observation, ...] = ()

    @property
    def observed(self) -> int:
        return len(self.buffer)


class EpsilonGreedyPolicy(NonstationaryPolicy):
    """(1 − ε)·argmax_a{w_a·x̃} + ε·uniform, retrained every few observations.

    Head a is a logistic model of "a is a correct label", fitted on the
    warm-start set plus the buffered events where a was chosen (label 1 − loss).
    """

    def __init__(
        self,
        warm_start: MultilabelDataset,
        epsilon: float = 0.1,
        retrain_period: int = 15,
        l2: float = 1e-3,
        epochs: int = 200,
    ):
        if not 0.0 <= epsilon <= 1.0:
            raise DomainError(f"epsilon must be in [0, 1], got {epsilon}")
        if retrain_period < 1:
            raise DomainError("retrain period must be positive")
        super().__init__(warm_start.n_actions)
        self.epsilon = epsilon
        self.retrain_period = retrain_period
        self.l2 = l2
        self.epochs = epochs
        self.dimension = warm_start.dimension
        self._warm_matrix = feature_matrix(warm_start.features, self.dimension)
        self._warm_labels = np.zeros((len(warm_start), self.n_actions))
        for i, labels in enumerate(warm_start.label_sets):
            self._warm_labels[i, list(labels)] = 1.0
        self._initial = EpsilonGreedyState(heads=self._fit(()))

    def _fit(self, buffer: Sequence[Observation]) -> LinearModel:
        K = self.n_actions
        n_warm = self._warm_labels.shape[0]
        if not buffer:
            return fit_logistic_heads(
                self._warm_matrix, self._warm_labels, l2=self.l2, epochs=self.epochs
            )
        extra = feature_matrix([f for f, _, _ in buffer], self.dimension)
        matrix = sp.vstack([self._warm_matrix, extra], format="csr")
        labels = np.zeros((n_warm + len(buffer), K))
        labels[:n_warm] = self._warm_labels
        include = np.zeros_like(labels, dtype=bool)
        include[:n_warm] = True
        for i, (_, action, loss) in enumerate(buffer, start=n_warm):
            labels[i, action] = 1.0 - loss
            include[i, action] = True
        return fit_logistic_heads(matrix, labels, include, l2=self.l2, epochs=self.epochs)

    def initial_state(self) -> EpsilonGreedyState:
        return self._initial

    def greedy_action(self, features: Features, state: EpsilonGreedyState) -> int:
        return state.heads.predict(features)

    def distribution(self, features: Features, state: EpsilonGreedyState) -> np.ndarray:
        dist = np.full(self.n_actions, self.epsilon / self.n_actions)
        dist[self.greedy_action(features, state)] += 1.0 - self.epsilon
        return dist

    def observe(
        self, state: EpsilonGreedyState, features: Features, action: int, outcome: float
    ) -> EpsilonGreedyState:
        buffer = state.buffer + ((features, action, outcome),)
        if len(buffer) % self.retrain_period == 0:
            return EpsilonGreedyState(heads=self._fit(buffer), buffer=buffer)
        return EpsilonGreedyState(heads=state.heads, buffer=buffer)


def epsilon_greedy_policy(
    warm_start: MultilabelDataset,
    epsilon: float = 0.1,
    retrain_period: int = 15,
    l2: float = 1e-3,
    epochs: int = 200,
) -> EpsilonGreedyPolicy:
    if len(warm_start) == 0:
        raise DomainError("the warm-start set is empty")
    return EpsilonGreedyPolicy(warm_start, epsilon, retrain_period, l2, epochs)
