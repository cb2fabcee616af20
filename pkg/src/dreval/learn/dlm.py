"""Direct loss minimization for linear cost-sensitive classifiers ("toward-better").

Per batch: a_1 = argmax_a{θ_a·x − ε·l_a}, a_2 = argmax_a{θ_a·x};
θ_{a_1} += η·x and θ_{a_2} −= η·x averaged over the batch, η = t^{−0.3}/2.
"""

from collections.abc import Sequence

import numpy as np
import scipy.sparse as sp

from ..errors import DomainError
from ..logging import RunLogger
from ..types import feature_matrix
from .imputation import CostMatrixExample, cost_arrays
from .linear import LinearModel, _augment

INIT_SCALE = 0.01


def _training_cost(design, theta: np.ndarray, costs: np.ndarray) -> float:
    chosen = np.argmax(np.asarray(design @ theta.T), axis=1)
    return float(costs[np.arange(costs.shape[0]), chosen].mean())


def _descend(
    design: sp.csr_matrix,
    costs: np.ndarray,
    theta: np.ndarray,
    epsilon: float,
    max_batches: int,
    tolerance: float,
) -> np.ndarray:
    n, K = costs.shape
    rows = np.arange(n)
    for t in range(1, max_batches + 1):
        scores = np.asarray(design @ theta.T)
        better = np.argmax(scores - epsilon * costs, axis=1)
        current = np.argmax(scores, axis=1)
        moves = np.zeros((n, K))
        np.add.at(moves, (rows, better), 1.0)
        np.add.at(moves, (rows, current), -1.0)
        step = (t**-0.3 / 2.0) / n * np.asarray(design.T @ moves).T
        theta = theta + step
        if np.max(np.abs(step)) < tolerance:
            break
    return theta


def dlm_restarts(
    examples: Sequence[CostMatrixExample],
    epsilon: float = 0.1,
    restarts: int = 20,
    seed: int = 0,
    max_batches: int = 500,
    tolerance: float = 1e-6,
    dimension: int | None = None,
) -> list[LinearModel]:
    """Every restart's final model, each tagged with its training cost."""
    features, costs = cost_arrays(examples)
    if costs.shape[1] < 2:
        raise DomainError("DLM needs at least two actions")
    if restarts < 1:
        raise DomainError("need at least one restart")
    design = _augment(feature_matrix(features, dimension))
    rng = np.random.default_rng(seed)
    models = []
    for _ in range(restarts):
        theta = INIT_SCALE * rng.standard_normal((costs.shape[1], design.shape[1]))
        theta = _descend(design, costs, theta, epsilon, max_batches, tolerance)
        models.append(
            LinearModel(
                weights=theta[:, :-1],
                intercepts=theta[:, -1],
                kind="dlm",
                epsilon=epsilon,
                training_cost=_training_cost(design, theta, costs),
            )
        )
    return models


def dlm_train(
    examples: Sequence[CostMatrixExample],
    epsilon: float = 0.1,
    restarts: int = 20,
    seed: int = 0,
    max_batches: int = 500,
    tolerance: float = 1e-6,
    dimension: int | None = None,
    logger: RunLogger | None = None,
) -> LinearModel:
    """Best of ``restarts`` perturbed starts by training cost (first wins ties)."""
    models = dlm_restarts(
        examples, epsilon, restarts, seed, max_batches, tolerance, dimension
    )
    best = min(models, key=lambda m: m.training_cost)
    if logger:
        logger.model_trained("dlm", len(examples), best.training_cost)
    return best
