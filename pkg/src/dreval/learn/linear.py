"""Linear models: ridge regression, logistic regression and their policy wrappers."""

import json
from collections.abc import Sequence

import numpy as np
import scipy.sparse as sp
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.optimize import minimize
from scipy.sparse.linalg import LinearOperator, cg

from ..errors import DomainError
from ..models import RewardModel
from ..policies import DeterministicPolicy
from ..types import Features, LogEvent, feature_matrix

NORMAL_EQUATIONS_MAX_DIM = 512
CG_TOLERANCE = 1e-8
LOGISTIC_TOLERANCE = 1e-6
MAX_LBFGS_ITERATIONS = 5000


class LinearModel(BaseModel):
    """Per-action weight vectors w_a with intercepts b_a; scores are w_a·x + b_a."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    weights: np.ndarray
    intercepts: np.ndarray
    kind: str = "linear"
    epsilon: float | None = None
    training_cost: float | None = None

    @model_validator(mode="after")
    def _check(self) -> "LinearModel":
        if self.weights.ndim != 2 or self.intercepts.shape != (self.weights.shape[0],):
            raise ValueError("weights must be (heads x dimension) with one intercept per head")
        if not (np.all(np.isfinite(self.weights)) and np.all(np.isfinite(self.intercepts))):
            raise ValueError("weights must be finite")
        return self

    @property
    def n_heads(self) -> int:
        return self.weights.shape[0]

    @property
    def dimension(self) -> int:
        return self.weights.shape[1]

    def scores(self, features: Features) -> np.ndarray:
        return features.project(self.weights) + self.intercepts

    def score_matrix(self, matrix) -> np.ndarray:
        """Scores for every row of a (examples x dimension) matrix."""
        return np.asarray(matrix @ self.weights.T) + self.intercepts

    def predict(self, features: Features) -> int:
        """Argmax head; ties go to the lowest id."""
        return int(np.argmax(self.scores(features)))

    def to_json(self) -> str:
        payload = {
            "type": self.kind,
            "K": self.n_heads,
            "weights": self.weights.tolist(),
            "intercepts": self.intercepts.tolist(),
        }
        if self.epsilon is not None:
            payload["epsilon"] = self.epsilon
        return json.dumps(payload, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "LinearModel":
        payload = json.loads(text)
        weights = np.asarray(payload["weights"], dtype=float)
        if weights.shape[0] != payload["K"]:
            raise DomainError("weight rows disagree with K")
        return cls(
            weights=weights,
            intercepts=np.asarray(payload["intercepts"], dtype=float),
            kind=payload["type"],
            epsilon=payload.get("epsilon"),
        )


def _augment(matrix) -> sp.csr_matrix:
    """Append a constant column for the intercept."""
    ones = sp.csr_matrix(np.ones((matrix.shape[0], 1)))
    return sp.hstack([sp.csr_matrix(matrix), ones], format="csr")


def ridge_fit_matrix(matrix, targets: np.ndarray, lam: float = 1.0) -> LinearModel:
    """Minimize Σ(w·x + b − t)² + λ‖w‖² with the intercept b unpenalized."""
    if lam <= 0:
        raise DomainError(f"ridge penalty must be positive, got {lam}")
    n, d = matrix.shape
    if n == 0:
        raise DomainError("ridge regression needs at least one example")
    design = _augment(matrix)
    penalty = np.full(d + 1, lam)
    penalty[-1] = 0.0
    rhs = design.T @ targets

    if d + 1 <= NORMAL_EQUATIONS_MAX_DIM:
        gram = (design.T @ design).toarray() + np.diag(penalty)
        solution = np.linalg.solve(gram, rhs)
    else:
        operator = LinearOperator(
            (d + 1, d + 1), matvec=lambda v: design.T @ (design @ v) + penalty * v
        )
        solution, info = cg(operator, rhs, rtol=CG_TOLERANCE, maxiter=10 * (d + 1))
        if info < 0:
            raise DomainError("conjugate gradients broke down")
    return LinearModel(
        weights=solution[None, :d], intercepts=solution[-1:], kind="ridge"
    )


def ridge_fit(
    features: Sequence[Features],
    targets: Sequence[float] | np.ndarray,
    lam: float = 1.0,
    dimension: int | None = None,
) -> LinearModel:
    """Single-head ridge regression over sparse features."""
    if not features:
        raise DomainError("ridge regression needs at least one example")
    return ridge_fit_matrix(
        feature_matrix(features, dimension), np.asarray(targets, dtype=float), lam
    )


class PerActionRewardModel(RewardModel):
    """One linear head per action; actions never logged predict the global mean."""

    def __init__(self, heads: LinearModel, fitted: np.ndarray, global_mean: float):
        super().__init__(heads.n_heads)
        self.heads = heads
        self.fitted = fitted
        self.global_mean = global_mean

    def _predict(self, features: Features) -> np.ndarray:
        return np.where(self.fitted, self.heads.scores(features), self.global_mean)

    def predict_matrix(self, matrix) -> np.ndarray:
        raw = np.where(self.fitted, self.heads.score_matrix(matrix), self.global_mean)
        return np.clip(raw, 0.0, 1.0)


def fit_reward_model_per_action(
    events: Sequence[LogEvent],
    lam: float = 1.0,
    n_actions: int | None = None,
    dimension: int | None = None,
) -> PerActionRewardModel:
    """Ridge head per action, each trained only on events that logged it."""
    if not events:
        raise DomainError("cannot fit a reward model on an empty log")
    K = n_actions or max(e.action for e in events) + 1
    matrix = feature_matrix([e.context.features for e in events], dimension)
    actions = np.array([e.action for e in events])
    outcomes = np.array([e.outcome for e in events])
    weights = np.zeros((K, matrix.shape[1]))
    intercepts = np.zeros(K)
    fitted = np.zeros(K, dtype=bool)
    for a in range(K):
        rows = np.flatnonzero(actions == a)
        if rows.size == 0:
            continue
        head = ridge_fit_matrix(matrix[rows], outcomes[rows], lam)
        weights[a], intercepts[a] = head.weights[0], head.intercepts[0]
        fitted[a] = True
    heads = LinearModel(weights=weights, intercepts=intercepts, kind="ridge")
    return PerActionRewardModel(heads, fitted, float(outcomes.mean()))


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def logistic_loss(model: LinearModel, matrix, labels: np.ndarray, l2: float = 0.0) -> float:
    """Mean log-loss of head 0 plus (l2/2)·‖w‖²."""
    z = model.score_matrix(matrix)[:, 0]
    labels = np.asarray(labels, dtype=float)
    return float(
        np.mean(np.logaddexp(0.0, z) - labels * z) + 0.5 * l2 * np.sum(model.weights[0] ** 2)
    )


def logistic_gradient(design, labels: np.ndarray, theta: np.ndarray, l2: float) -> np.ndarray:
    """Gradient of the mean log-loss plus (l2/2)·‖w‖² for one head; the intercept is last."""
    residual = _sigmoid(np.asarray(design @ theta).ravel()) - labels
    gradient = np.asarray(design.T @ residual).ravel() / max(design.shape[0], 1)
    gradient[:-1] += l2 * theta[:-1]
    return gradient


def _refine_head(
    design, labels: np.ndarray, theta: np.ndarray, l2: float, tolerance: float
) -> np.ndarray:
    def objective(point: np.ndarray) -> tuple[float, np.ndarray]:
        z = np.asarray(design @ point).ravel()
        loss = np.mean(np.logaddexp(0.0, z) - labels * z) + 0.5 * l2 * point[:-1] @ point[:-1]
        return float(loss), logistic_gradient(design, labels, point, l2)

    if np.linalg.norm(objective(theta)[1]) < tolerance:
        return theta
    result = minimize(
        objective,
        theta,
        jac=True,
        method="L-BFGS-B",
        options={"gtol": tolerance / np.sqrt(theta.size), "ftol": 0.0, "maxiter": MAX_LBFGS_ITERATIONS},
    )
    return result.x


def fit_logistic_heads(
    matrix,
    labels: np.ndarray,
    include: np.ndarray | None = None,
    l2: float = 0.0,
    epochs: int = 200,
    tolerance: float = LOGISTIC_TOLERANCE,
) -> LinearModel:
    """Regularized logistic regression on K heads at once.

    ``labels`` and ``include`` are (examples x heads); head a is trained on the
    rows where ``include[:, a]`` holds. Weights start at zero and take
    ``epochs`` full-batch gradient steps of size 0.5/(1 + e); each head is then
    finished with L-BFGS until its gradient norm is below ``tolerance``. Both
    stages are deterministic.
    """
    if l2 < 0:
        raise DomainError("l2 penalty must be non-negative")
    labels = np.asarray(labels, dtype=float)
    if labels.ndim == 1:
        labels = labels[:, None]
    n, K = labels.shape
    include = np.ones((n, K), dtype=bool) if include is None else np.asarray(include, dtype=bool)
    counts = np.maximum(include.sum(axis=0), 1)
    design = _augment(matrix)
    theta = np.zeros((K, design.shape[1]))
    for epoch in range(epochs):
        residual = (_sigmoid(np.asarray(design @ theta.T)) - labels) * include / counts
        gradient = np.asarray(design.T @ residual).T
        gradient[:, :-1] += l2 * theta[:, :-1]
        theta -= 0.5 / (1.0 + epoch) * gradient
    for a in range(K):
        rows = np.flatnonzero(include[:, a])
        if rows.size:
            theta[a] = _refine_head(design[rows], labels[rows, a], theta[a], l2, tolerance)
    return LinearModel(weights=theta[:, :-1], intercepts=theta[:, -1], kind="logistic")


def logistic_fit(
    features: Sequence[Features],
    labels: Sequence[int] | np.ndarray,
    l2: float = 0.0,
    epochs: int = 200,
    seed: int | None = None,
    dimension: int | None = None,
) -> LinearModel:
    """Regularized logistic regression for one binary problem.

    ``seed`` is accepted for interface symmetry with the other learners; the
    fit starts from zero weights and draws nothing, so it does not change the result.
    """
    if not features:
        raise DomainError("logistic regression needs at least one example")
    return fit_logistic_heads(
        feature_matrix(features, dimension), np.asarray(labels, dtype=float), l2=l2, epochs=epochs
    )


class LogisticOutcomeModel(RewardModel):
    """Loss estimate 1 − σ(w_a·x + b_a) from per-action "a is correct" heads."""

    def __init__(self, heads: LinearModel):
        super().__init__(heads.n_heads)
        self.heads = heads

    def _predict(self, features: Features) -> np.ndarray:
        return 1.0 - _sigmoid(self.heads.scores(features))


class LinearArgmaxPolicy(DeterministicPolicy):
    """Classifier policy: the action with the highest linear score."""

    def __init__(self, model: LinearModel):
        super().__init__(model.n_heads)
        self.model = model

    def action(self, features: Features) -> int:
        return self.model.predict(features)

    def actions(self, matrix) -> np.ndarray:
        return np.argmax(self.model.score_matrix(matrix), axis=1)


def fit_full_information_model(
    features: Sequence[Features],
    outcomes: np.ndarray,
    lam: float = 1.0,
    dimension: int | None = None,
) -> PerActionRewardModel:
    """Ridge head per action on fully observed (examples x actions) outcomes."""
    if not features:
        raise DomainError("cannot fit a reward model without examples")
    matrix = feature_matrix(features, dimension)
    heads = [ridge_fit_matrix(matrix, outcomes[:, a], lam) for a in range(outcomes.shape[1])]
    model = LinearModel(
        weights=np.vstack([h.weights for h in heads]),
        intercepts=np.concatenate([h.intercepts for h in heads]),
        kind="ridge",
    )
    return PerActionRewardModel(
        model, np.ones(outcomes.shape[1], dtype=bool), float(outcomes.mean())
    )
