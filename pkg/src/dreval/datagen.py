"""Data construction: partial-feedback transforms, biased loggers, synthetic sets."""

import math
from collections.abc import Sequence
from pathlib import Path

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.stats import norm

from .dgp import DiscreteDGP
from .errors import (
    DegeneratePrincipalComponentError,
    DomainError,
    InsufficientDataError,
    LogParseError,
)
from .types import Context, Features, HiddenPayload, LogEvent, feature_matrix

MAX_CONTEXTS = 16
MAX_ACTIONS = 8
MAX_SUPPORT = 4

BIASED_LOGGER_SCORE_WEIGHT = 0.3
BIASED_LOGGER_SCORE_RANGE = (0.1, 1.0)

POWER_ITERATIONS = 200
POWER_TOLERANCE = 1e-10
MIN_REVEAL_PROBABILITY = 1e-12


class MulticlassDataset(BaseModel):
    """Full-information multiclass examples (x, y)."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    features: list[Features]
    labels: np.ndarray
    n_actions: int = Field(ge=1)
    label_probs: np.ndarray | None = None

    @model_validator(mode="after")
    def _check(self) -> "MulticlassDataset":
        if not self.features:
            raise ValueError("dataset is empty")
        if self.labels.shape != (len(self.features),):
            raise ValueError("one label per example")
        if np.any(self.labels < 0) or np.any(self.labels >= self.n_actions):
            raise ValueError(f"labels must lie in 0..{self.n_actions - 1}")
        if self.label_probs is not None and self.label_probs.shape != (
            len(self.features),
            self.n_actions,
        ):
            raise ValueError("label_probs must be (examples x actions)")
        return self

    def __len__(self) -> int:
        return len(self.features)

    @property
    def dimension(self) -> int:
        return max(f.dimension for f in self.features)

    def subset(self, indices: Sequence[int] | np.ndarray) -> "MulticlassDataset":
        idx = np.asarray(indices, dtype=np.int64)
        return MulticlassDataset(
            features=[self.features[i] for i in idx],
            labels=self.labels[idx],
            n_actions=self.n_actions,
            label_probs=None if self.label_probs is None else self.label_probs[idx],
        )

    def split(
        self, fraction: float, rng: np.random.Generator
    ) -> tuple["MulticlassDataset", "MulticlassDataset"]:
        """Random split; the first part holds round(fraction·n) examples."""
        return _split(self, fraction, rng)

    def loss_matrix(self) -> np.ndarray:
        """Full-information 0/1 losses, shape (examples x actions)."""
        losses = np.ones((len(self), self.n_actions))
        losses[np.arange(len(self)), self.labels] = 0.0
        return losses


class MultilabelDataset(BaseModel):
    """Examples (x, Y) with a nonempty set of correct labels."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    features: list[Features]
    label_sets: list[tuple[int, ...]]
    n_actions: int = Field(ge=1)

    @model_validator(mode="after")
    def _check(self) -> "MultilabelDataset":
        if not self.features:
            raise ValueError("dataset is empty")
        if len(self.label_sets) != len(self.features):
            raise ValueError("one label set per example")
        for labels in self.label_sets:
            if not labels:
                raise ValueError("label sets must be nonempty")
            if min(labels) < 0 or max(labels) >= self.n_actions:
                raise ValueError(f"labels must lie in 0..{self.n_actions - 1}")
        return self

    def __len__(self) -> int:
        return len(self.features)

    @property
    def dimension(self) -> int:
        return max(f.dimension for f in self.features)

    def subset(self, indices: Sequence[int] | np.ndarray) -> "MultilabelDataset":
        return MultilabelDataset(
            features=[self.features[i] for i in indices],
            label_sets=[self.label_sets[i] for i in indices],
            n_actions=self.n_actions,
        )

    def split(
        self, fraction: float, rng: np.random.Generator
    ) -> tuple["MultilabelDataset", "MultilabelDataset"]:
        return _split(self, fraction, rng)

    def loss(self, index: int, action: int) -> float:
        return 0.0 if action in self.label_sets[index] else 1.0


class RegressionDataset(BaseModel):
    """Examples (x, v) with a non-negative response."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    features: list[Features]
    responses: np.ndarray

    @model_validator(mode="after")
    def _check(self) -> "RegressionDataset":
        if self.responses.shape != (len(self.features),):
            raise ValueError("one response per example")
        if np.any(self.responses < 0) or not np.all(np.isfinite(self.responses)):
            raise ValueError("responses must be finite and non-negative")
        return self

    def __len__(self) -> int:
        return len(self.features)

    def subset(self, indices: Sequence[int] | np.ndarray) -> "RegressionDataset":
        idx = np.asarray(indices, dtype=np.int64)
        return RegressionDataset(
            features=[self.features[i] for i in idx], responses=self.responses[idx]
        )


def _split(dataset, fraction: float, rng: np.random.Generator):
    if not 0.0 < fraction < 1.0:
        raise DomainError(f"split fraction must be in (0, 1), got {fraction}")
    order = rng.permutation(len(dataset))
    cut = int(round(fraction * len(dataset)))
    if cut == 0 or cut == len(dataset):
        raise InsufficientDataError(
            f"split of {len(dataset)} examples at {fraction} leaves a part empty"
        )
    return dataset.subset(order[:cut]), dataset.subset(order[cut:])


# Partial-feedback transforms


def multiclass_to_bandit(dataset: MulticlassDataset, seed: int) -> list[LogEvent]:
    """Uniform exploration over K actions; the outcome is the loss 1[a ≠ y]."""
    rng = np.random.default_rng(seed)
    K = dataset.n_actions
    actions = rng.integers(K, size=len(dataset))
    propensity = 1.0 / K
    return [
        LogEvent(
            context=Context(features=features),
            action=int(a),
            outcome=0.0 if a == y else 1.0,
            propensity=propensity,
        )
        for features, a, y in zip(dataset.features, actions, dataset.labels, strict=True)
    ]


def biased_logger_distribution(
    label_set: Sequence[int], scores: np.ndarray, n_actions: int
) -> np.ndarray:
    """μ(a) = 0.3·s(a)/Σs + 0.7·1[a ∈ Y]/|Y|."""
    correct = np.zeros(n_actions)
    correct[list(label_set)] = 1.0 / len(label_set)
    w = BIASED_LOGGER_SCORE_WEIGHT
    return w * scores / scores.sum() + (1.0 - w) * correct


def multilabel_biased_logger(dataset: MultilabelDataset, seed: int) -> list[LogEvent]:
    """Exploration biased toward correct labels; hidden payload (Y, s) is attached."""
    if dataset.n_actions < 2:
        raise DomainError("the biased logger needs at least two actions")
    rng = np.random.default_rng(seed)
    low, high = BIASED_LOGGER_SCORE_RANGE
    events = []
    for features, labels in zip(dataset.features, dataset.label_sets, strict=True):
        scores = rng.uniform(low, high, size=dataset.n_actions)
        mu = biased_logger_distribution(labels, scores, dataset.n_actions)
        action = int(rng.choice(dataset.n_actions, p=mu))
        events.append(
            LogEvent(
                context=Context(
                    features=features,
                    hidden=HiddenPayload(
                        label_set=tuple(labels), scores=tuple(float(s) for s in scores)
                    ),
                ),
                action=action,
                outcome=0.0 if action in labels else 1.0,
                propensity=float(mu[action]),
            )
        )
    return events


def min_biased_logger_propensity(n_actions: int) -> float:
    """Smallest probability the biased logger can put on any action.

    Scores in [0.1, 1] give s(a)/Σs ≥ 0.1/(0.1 + (K−1)·1).
    """
    low, high = BIASED_LOGGER_SCORE_RANGE
    return BIASED_LOGGER_SCORE_WEIGHT * low / (low + (n_actions - 1) * high)


# Covariate shift


def principal_direction(
    matrix, seed: int = 0, iterations: int = POWER_ITERATIONS, tolerance: float = POWER_TOLERANCE
) -> np.ndarray:
    """Top principal direction of the rows of ``matrix`` by power iteration.

    The centered covariance operator is applied implicitly so sparse input
    stays sparse. The sign is fixed so the largest-magnitude entry is positive.
    """
    n, d = matrix.shape
    if n < 2 or d == 0:
        raise DegeneratePrincipalComponentError("need at least two examples and one feature")
    mean = np.asarray(matrix.mean(axis=0)).ravel()

    def apply(v: np.ndarray) -> np.ndarray:
        projected = matrix @ v - mean @ v
        return matrix.T @ projected - mean * projected.sum()

    v = np.random.default_rng(seed).standard_normal(d)
    v /= np.linalg.norm(v)
    for _ in range(iterations):
        w = np.asarray(apply(v)).ravel()
        norm_w = np.linalg.norm(w)
        if norm_w <= 1e-300:
            raise DegeneratePrincipalComponentError("features have zero variance")
        w /= norm_w
        change = min(np.linalg.norm(w - v), np.linalg.norm(w + v))
        v = w
        if change < tolerance:
            break
    if v[np.argmax(np.abs(v))] < 0:
        v = -v
    return v


class CovariateShiftSampler(BaseModel):
    """Reveal-or-conceal logger biased toward small projections on the top PC.

    Action 1 reveals the rescaled response, action 0 conceals it (outcome 0).
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    direction: np.ndarray
    density_mean: float
    density_std: float
    response_scale: float = Field(gt=0.0)
    constant_reveal: float | None = Field(default=None, gt=0.0, le=1.0)

    @classmethod
    def fit(
        cls,
        dataset: RegressionDataset,
        seed: int = 0,
        constant_reveal: float | None = None,
    ) -> "CovariateShiftSampler":
        """Derive the direction, density and response scale from the full data."""
        if len(dataset) < 2:
            raise DomainError("covariate shift needs at least two examples")
        matrix = feature_matrix(dataset.features)
        direction = principal_direction(matrix, seed=seed)
        projections = np.asarray(matrix @ direction).ravel()
        low, mean = float(projections.min()), float(projections.mean())
        spread = mean - low
        if spread <= 1e-12 * max(1.0, abs(mean)):
            raise DegeneratePrincipalComponentError(
                "all projections coincide; the reveal density is undefined"
            )
        scale = float(dataset.responses.max())
        if scale <= 0:
            raise DomainError("responses are all zero")
        return cls(
            direction=direction,
            density_mean=low + spread / 3.0,
            density_std=spread / 4.0,
            response_scale=scale,
            constant_reveal=constant_reveal,
        )

    def reveal_probability(self, features: Features) -> float:
        """μ(a=1|x) = min{φ(x·x̄), 1}, floored at 1e-12 so it stays positive."""
        if self.constant_reveal is not None:
            return self.constant_reveal
        density = norm.pdf(features.dot(self.direction), self.density_mean, self.density_std)
        return float(min(max(density, MIN_REVEAL_PROBABILITY), 1.0))

    def rescale(self, responses: np.ndarray) -> np.ndarray:
        return np.minimum(responses / self.response_scale, 1.0)

    def ground_truth(self, dataset: RegressionDataset) -> float:
        """Value of the always-reveal policy: the mean rescaled response."""
        return math.fsum(self.rescale(dataset.responses).tolist()) / len(dataset)

    def log(self, dataset: RegressionDataset, rng: np.random.Generator) -> list[LogEvent]:
        values = self.rescale(dataset.responses)
        events = []
        for features, value in zip(dataset.features, values, strict=True):
            p_reveal = self.reveal_probability(features)
            action = 1 if rng.random() < p_reveal else 0
            events.append(
                LogEvent(
                    context=Context(features=features),
                    action=action,
                    outcome=float(value) if action == 1 else 0.0,
                    propensity=p_reveal if action == 1 else 1.0 - p_reveal,
                )
            )
        return events


def covariate_shift_transform(
    dataset: RegressionDataset, seed: int, constant_reveal: float | None = None
) -> tuple[list[LogEvent], CovariateShiftSampler]:
    """Fit a shift sampler on ``dataset`` and log it once."""
    sampler = CovariateShiftSampler.fit(dataset, seed=seed, constant_reveal=constant_reveal)
    return sampler.log(dataset, np.random.default_rng(seed)), sampler


# Enumerable instances


class DGPSpec(BaseModel):
    """Sizes and seed of a random enumerable instance."""
    n_contexts: int = Field(default=3, ge=1)
    n_actions: int = Field(default=3, ge=1)
    support_size: int = Field(default=2, ge=1)
    deterministic_rewards: bool = False
    logging_floor: float = Field(default=0.1, gt=0.0, le=1.0)
    seed: int = 0


def make_discrete_dgp(spec: DGPSpec) -> DiscreteDGP:
    """Random normalized tables; μ mixes a Dirichlet draw with a uniform floor."""
    if spec.n_contexts > MAX_CONTEXTS or spec.n_actions > MAX_ACTIONS:
        raise DomainError(
            f"at most {MAX_CONTEXTS} contexts and {MAX_ACTIONS} actions are enumerable"
        )
    if spec.support_size > MAX_SUPPORT:
        raise DomainError(f"reward support is limited to {MAX_SUPPORT} points")
    rng = np.random.default_rng(spec.seed)
    X, K = spec.n_contexts, spec.n_actions
    support = 1 if spec.deterministic_rewards else spec.support_size

    context_probs = rng.dirichlet(np.ones(X))
    floor = spec.logging_floor
    mu = floor / K + (1.0 - floor) * rng.dirichlet(np.ones(K), size=X)
    reward_values = np.sort(rng.uniform(0.0, 1.0, size=(X, K, support)), axis=2)
    reward_probs = rng.dirichlet(np.ones(support), size=(X, K))
    return DiscreteDGP(
        context_probs=context_probs,
        mu=mu,
        reward_values=reward_values,
        reward_probs=reward_probs,
    )


# Synthetic full-information data


def _gaussian_rows(rng: np.random.Generator, n: int, dimension: int) -> np.ndarray:
    return rng.standard_normal((n, dimension))


def synthetic_multiclass(
    n: int, dimension: int = 5, n_actions: int = 4, seed: int = 0, curvature: float = 2.0
) -> MulticlassDataset:
    """Labels from a softmax over scores with a quadratic term.

    The quadratic term makes the expected losses 1 − P(y=a|x) nonlinear in x,
    so linear loss models are misspecified. True label probabilities are kept.
    """
    if n < 1:
        raise DomainError("n must be positive")
    rng = np.random.default_rng(seed)
    x = _gaussian_rows(rng, n, dimension)
    weights = rng.standard_normal((n_actions, dimension))
    bends = rng.standard_normal((n_actions, dimension)) / math.sqrt(dimension)
    scores = x @ weights.T + curvature * (x @ bends.T) ** 2
    scores -= scores.max(axis=1, keepdims=True)
    probs = np.exp(scores)
    probs /= probs.sum(axis=1, keepdims=True)
    cumulative = np.cumsum(probs, axis=1)
    labels = np.minimum((rng.random(n)[:, None] > cumulative).sum(axis=1), n_actions - 1)
    return MulticlassDataset(
        features=[Features.from_dense(row) for row in x],
        labels=labels.astype(np.int64),
        n_actions=n_actions,
        label_probs=probs,
    )


def synthetic_multilabel(
    n: int, dimension: int = 10, n_actions: int = 4, seed: int = 0
) -> MultilabelDataset:
    """Each label is correct independently with probability σ(w_a·x − 1).

    An example with no correct label gets the top-scoring one.
    """
    if n < 1:
        raise DomainError("n must be positive")
    rng = np.random.default_rng(seed)
    x = _gaussian_rows(rng, n, dimension)
    weights = 2.0 * rng.standard_normal((n_actions, dimension)) / math.sqrt(dimension)
    logits = x @ weights.T - 1.0
    correct = rng.random((n, n_actions)) < 1.0 / (1.0 + np.exp(-logits))
    label_sets = []
    for row, logit in zip(correct, logits, strict=True):
        labels = tuple(int(a) for a in np.flatnonzero(row))
        label_sets.append(labels or (int(np.argmax(logit)),))
    return MultilabelDataset(
        features=[Features.from_dense(row) for row in x],
        label_sets=label_sets,
        n_actions=n_actions,
    )


def synthetic_regression(
    n: int, dimension: int = 6, seed: int = 0, noise: float = 0.1
) -> RegressionDataset:
    """Non-negative responses softplus(w·x)·(1 + noise) with one dominant direction."""
    if n < 2:
        raise DomainError("n must be at least 2")
    rng = np.random.default_rng(seed)
    x = _gaussian_rows(rng, n, dimension)
    x[:, 0] *= 3.0
    weights = rng.standard_normal(dimension) / math.sqrt(dimension)
    weights[0] = 0.5
    mean = np.logaddexp(0.0, x @ weights)
    responses = np.maximum(mean * (1.0 + noise * rng.standard_normal(n)), 0.0)
    return RegressionDataset(
        features=[Features.from_dense(row) for row in x], responses=responses
    )


# Loaders


def load_multiclass_csv(path: Path, has_header: bool = False) -> MulticlassDataset:
    """Numeric feature columns followed by an integer label column.

    Distinct labels are mapped to 0..K−1 in sorted order.
    """
    try:
        frame = pd.read_csv(path, header=0 if has_header else None)
    except OSError as e:
        raise type(e)(f"{path}: {e}") from e
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise LogParseError(str(e), path=str(path)) from e
    if frame.shape[1] < 2:
        raise LogParseError("need at least one feature column and a label column", path=str(path))
    raw_labels = frame.iloc[:, -1].to_numpy()
    if not np.issubdtype(raw_labels.dtype, np.integer):
        raise LogParseError("label column must hold integers", path=str(path))
    values = frame.iloc[:, :-1].to_numpy(dtype=float)
    classes, labels = np.unique(raw_labels, return_inverse=True)
    return MulticlassDataset(
        features=[Features.from_dense(row) for row in values],
        labels=labels.astype(np.int64),
        n_actions=len(classes),
    )


def load_multilabel_svmlight(path: Path, n_actions: int | None = None) -> MultilabelDataset:
    """Lines of the form ``l1,l2 index:value index:value``."""
    features: list[Features] = []
    label_sets: list[tuple[int, ...]] = []
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as e:
        raise type(e)(f"{path}: {e}") from e
    for line_number, line in enumerate(lines, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        head, *pairs = line.split()
        try:
            labels = tuple(sorted({int(label) for label in head.split(",")}))
            mapping = {}
            for pair in pairs:
                index, value = pair.split(":", 1)
                mapping[int(index)] = float(value)
        except ValueError as e:
            raise LogParseError(f"malformed line: {e}", line_number, str(path)) from e
        features.append(Features.from_mapping(mapping))
        label_sets.append(labels)
    if not features:
        raise LogParseError("no examples", path=str(path))
    K = n_actions or max(max(labels) for labels in label_sets) + 1
    return MultilabelDataset(features=features, label_sets=label_sets, n_actions=K)


def load_regression_csv(path: Path, has_header: bool = False) -> RegressionDataset:
    """Numeric feature columns followed by a non-negative response column."""
    try:
        frame = pd.read_csv(path, header=0 if has_header else None)
    except OSError as e:
        raise type(e)(f"{path}: {e}") from e
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise LogParseError(str(e), path=str(path)) from e
    if frame.shape[1] < 2:
        raise LogParseError("need at least one feature column and a response column", path=str(path))
    values = frame.to_numpy(dtype=float)
    return RegressionDataset(
        features=[Features.from_dense(row) for row in values[:, :-1]],
        responses=values[:, -1],
    )
