"""Filter Tree reduction from cost-sensitive multiclass to weighted binary classification."""

from collections.abc import Sequence
from dataclasses import dataclass
from typing import Protocol

import numpy as np

from ..errors import DomainError
from ..logging import RunLogger
from ..policies import DeterministicPolicy
from ..types import Features, feature_matrix
from .imputation import CostMatrixExample, cost_arrays


class BinaryClassifier(Protocol):
    def predict(self, matrix: np.ndarray) -> np.ndarray:
        """0/1 label per row of a dense (examples x dimension) matrix."""
        ...


class BinaryLearner(Protocol):
    def fit(self, matrix: np.ndarray, labels: np.ndarray, weights: np.ndarray) -> BinaryClassifier:
        ...


@dataclass(frozen=True)
class ConstantClassifier:
    label: int

    def predict(self, matrix: np.ndarray) -> np.ndarray:
        return np.full(matrix.shape[0], self.label, dtype=np.int64)


@dataclass(frozen=True)
class DecisionStump:
    """Predicts ``above`` when x[feature] > threshold, else ``1 − above``."""
    feature: int
    threshold: float
    above: int
    weighted_error: float

    def predict(self, matrix: np.ndarray) -> np.ndarray:
        if self.feature < 0:
            return np.full(matrix.shape[0], self.above, dtype=np.int64)
        hit = matrix[:, self.feature] > self.threshold
        return np.where(hit, self.above, 1 - self.above).astype(np.int64)


class DecisionStumpLearner:
    """Best single-feature threshold split by weighted 0/1 error."""

    def fit(self, matrix: np.ndarray, labels: np.ndarray, weights: np.ndarray) -> DecisionStump:
        if matrix.shape[0] == 0:
            raise DomainError("a stump needs at least one example")
        labels = np.asarray(labels, dtype=np.int64)
        weights = np.asarray(weights, dtype=float)
        positive = float(weights[labels == 1].sum())
        negative = float(weights.sum()) - positive
        # constant stump: feature -1
        best = DecisionStump(-1, 0.0, int(positive > negative), min(positive, negative))

        for feature in range(matrix.shape[1]):
            order = np.argsort(matrix[:, feature], kind="stable")
            values = matrix[order, feature]
            w_pos = np.cumsum(np.where(labels[order] == 1, weights[order], 0.0))
            w_neg = np.cumsum(np.where(labels[order] == 0, weights[order], 0.0))
            # split after position i: rows 0..i go below the threshold
            boundaries = np.flatnonzero(values[:-1] < values[1:])
            if boundaries.size == 0:
                continue
            # below→0, above→1: errors are positives below plus negatives above
            error_up = w_pos[boundaries] + (negative - w_neg[boundaries])
            error_down = float(weights.sum()) - error_up
            for errors, above in ((error_up, 1), (error_down, 0)):
                i = int(np.argmin(errors))
                if errors[i] < best.weighted_error - 1e-15:
                    split = boundaries[i]
                    threshold = 0.5 * (values[split] + values[split + 1])
                    best = DecisionStump(feature, float(threshold), above, float(errors[i]))
        return best


@dataclass
class _Node:
    low: int
    high: int
    left: "_Node | None" = None
    right: "_Node | None" = None
    classifier: BinaryClassifier | None = None

    @property
    def is_leaf(self) -> bool:
        return self.high - self.low == 1


def _build(low: int, high: int) -> _Node:
    node = _Node(low, high)
    if high - low > 1:
        middle = low + (high - low + 1) // 2
        node.left = _build(low, middle)
        node.right = _build(middle, high)
    return node


class FilterTree(DeterministicPolicy):
    """Balanced single-elimination tournament over K actions.

    Each internal node's classifier says whether the winner of its right
    subtree beats the winner of its left subtree (label 1 = go right).
    """

    def __init__(self, n_actions: int, dimension: int):
        if n_actions < 2:
            raise DomainError("a filter tree needs at least two actions")
        super().__init__(n_actions)
        self.dimension = dimension
        self.root = _build(0, n_actions)

    @property
    def n_internal_nodes(self) -> int:
        def count(node: _Node) -> int:
            return 0 if node.is_leaf else 1 + count(node.left) + count(node.right)

        return count(self.root)

    def _winners(self, node: _Node, matrix: np.ndarray) -> np.ndarray:
        if node.is_leaf:
            return np.full(matrix.shape[0], node.low, dtype=np.int64)
        go_right = node.classifier.predict(matrix).astype(bool)
        left = self._winners(node.left, matrix)
        right = self._winners(node.right, matrix)
        return np.where(go_right, right, left)

    def predict_matrix(self, matrix: np.ndarray) -> np.ndarray:
        return self._winners(self.root, matrix)

    def decision_path(self, features: Features) -> list[tuple[int, int]]:
        """Action ranges of the internal nodes queried, root first."""
        row = features.to_dense(self.dimension)[None, :]
        node, path = self.root, []
        while not node.is_leaf:
            path.append((node.low, node.high))
            node = node.right if node.classifier.predict(row)[0] else node.left
        return path

    def action(self, features: Features) -> int:
        row = features.to_dense(self.dimension)[None, :]
        node = self.root
        while not node.is_leaf:
            node = node.right if node.classifier.predict(row)[0] else node.left
        return node.low

    def train(self, matrix: np.ndarray, costs: np.ndarray, learner: BinaryLearner) -> None:
        self._train(self.root, matrix, costs, learner)

    def _train(
        self, node: _Node, matrix: np.ndarray, costs: np.ndarray, learner: BinaryLearner
    ) -> None:
        if node.is_leaf:
            return
        self._train(node.left, matrix, costs, learner)
        self._train(node.right, matrix, costs, learner)
        rows = np.arange(matrix.shape[0])
        left_cost = costs[rows, self._winners(node.left, matrix)]
        right_cost = costs[rows, self._winners(node.right, matrix)]
        weights = np.abs(left_cost - right_cost)
        keep = weights > 0
        if not keep.any():
            node.classifier = ConstantClassifier(0)
            return
        labels = (right_cost < left_cost).astype(np.int64)
        node.classifier = learner.fit(matrix[keep], labels[keep], weights[keep])


def filter_tree_train(
    examples: Sequence[CostMatrixExample],
    base_learner: BinaryLearner | None = None,
    dimension: int | None = None,
    logger: RunLogger | None = None,
) -> FilterTree:
    """Train every node bottom-up on the examples its subtrees' winners disagree on."""
    features, costs = cost_arrays(examples)
    matrix = feature_matrix(features, dimension).toarray()
    tree = FilterTree(costs.shape[1], matrix.shape[1])
    tree.train(matrix, costs, base_learner or DecisionStumpLearner())
    if logger:
        chosen = tree.predict_matrix(matrix)
        logger.model_trained(
            "filter_tree", len(examples), float(costs[np.arange(len(costs)), chosen].mean())
        )
    return tree
