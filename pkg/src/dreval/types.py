"""Core types and enums for dreval."""

import math
from collections.abc import Mapping, Sequence
from datetime import datetime
from enum import Enum
from typing import Any
from uuid import UUID

import numpy as np
import scipy.sparse as sp
from pydantic import BaseModel, ConfigDict, Field, model_validator


class OutcomeMode(Enum):
    """Whether a logged outcome is a reward or a loss."""
    REWARD = "reward"
    LOSS = "loss"


class Method(Enum):
    """Estimator family tag."""
    DM = "DM"
    IPS = "IPS"
    DR = "DR"


class Features(BaseModel):
    """Sparse covariate vector stored as sorted (index, value) pairs."""

    model_config = ConfigDict(frozen=True)

    indices: tuple[int, ...] = ()
    values: tuple[float, ...] = ()

    @model_validator(mode="after")
    def _check_layout(self) -> "Features":
        if len(self.indices) != len(self.values):
            raise ValueError("indices and values must have equal length")
        previous = -1
        for index in self.indices:
            if index < 0:
                raise ValueError(f"feature index {index} is negative")
            if index <= previous:
                raise ValueError("feature indices must be strictly increasing")
            previous = index
        if not all(math.isfinite(v) for v in self.values):
            raise ValueError("feature values must be finite")
        return self

    @classmethod
    def from_mapping(cls, mapping: Mapping[Any, float]) -> "Features":
        """Build from a {index: value} mapping; keys may be decimal strings."""
        pairs = sorted((int(k), float(v)) for k, v in mapping.items())
        return cls(
            indices=tuple(i for i, _ in pairs), values=tuple(v for _, v in pairs)
        )

    @classmethod
    def from_dense(cls, row: Sequence[float] | np.ndarray) -> "Features":
        """Build from a dense row, dropping exact zeros."""
        array = np.asarray(row, dtype=float)
        nonzero = np.flatnonzero(array)
        return cls(
            indices=tuple(int(i) for i in nonzero),
            values=tuple(float(array[i]) for i in nonzero),
        )

    def to_mapping(self) -> dict[str, float]:
        """Serialize to the on-disk {"index": value} form."""
        return {str(i): v for i, v in zip(self.indices, self.values, strict=True)}

    @property
    def index_array(self) -> np.ndarray:
        return np.asarray(self.indices, dtype=np.int64)

    @property
    def value_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)

    @property
    def dimension(self) -> int:
        """Smallest dense width that holds every index."""
        return self.indices[-1] + 1 if self.indices else 0

    def dot(self, weights: np.ndarray) -> float:
        """Inner product with a dense vector; indices past its end count as zero."""
        if not self.indices:
            return 0.0
        mask = self.index_array < weights.shape[-1]
        return float(weights[self.index_array[mask]] @ self.value_array[mask])

    def project(self, matrix: np.ndarray) -> np.ndarray:
        """Row-wise inner products with a dense (rows x dim) matrix."""
        if not self.indices:
            return np.zeros(matrix.shape[0])
        mask = self.index_array < matrix.shape[1]
        return matrix[:, self.index_array[mask]] @ self.value_array[mask]

    def to_dense(self, dimension: int) -> np.ndarray:
        dense = np.zeros(dimension)
        mask = self.index_array < dimension
        dense[self.index_array[mask]] = self.value_array[mask]
        return dense


def feature_matrix(rows: Sequence[Features], dimension: int | None = None) -> sp.csr_matrix:
    """Stack sparse feature vectors into a CSR matrix of width ``dimension``.

    Indices at or beyond ``dimension`` are dropped.
    """
    if dimension is None:
        dimension = max((row.dimension for row in rows), default=0)
    indptr = [0]
    indices: list[int] = []
    values: list[float] = []
    for row in rows:
        for index, value in zip(row.indices, row.values, strict=True):
            if index < dimension:
                indices.append(index)
                values.append(value)
        indptr.append(len(indices))
    return sp.csr_matrix(
        (np.asarray(values, dtype=float), np.asarray(indices, dtype=np.int64), indptr),
        shape=(len(rows), dimension),
    )


class HiddenPayload(BaseModel):
    """Generator-side context extension (label set and per-action scores)."""

    model_config = ConfigDict(frozen=True)

    label_set: tuple[int, ...]
    scores: tuple[float, ...] = ()


class Context(BaseModel):
    """Observed covariates plus an optional payload only loggers may read."""

    model_config = ConfigDict(frozen=True)

    features: Features = Field(default_factory=Features)
    hidden: HiddenPayload | None = None


class LogEvent(BaseModel):
    """One exploration record (x_k, a_k, r_k, p_k)."""

    model_config = ConfigDict(frozen=True)

    context: Context
    action: int = Field(ge=0)
    outcome: float = Field(ge=0.0, le=1.0)
    propensity: float = Field(gt=0.0, le=1.0)


class LogHeader(BaseModel):
    """Optional first line of a log file declaring K and the outcome mode."""
    k: int = Field(ge=1)
    mode: OutcomeMode = OutcomeMode.REWARD


class EventLog(BaseModel):
    """A log file's header and events."""
    header: LogHeader | None = None
    events: list[LogEvent] = Field(default_factory=list)


class TermValue(BaseModel):
    """One doubly robust term split into its baseline and correction."""

    model_config = ConfigDict(frozen=True)

    value: float
    importance_weight: float = Field(ge=0.0)
    baseline: float
    correction: float


class EstimateReport(BaseModel):
    """Result of running one estimator over a log."""
    method: Method
    estimate: float
    n: int = Field(ge=1)
    term_values: list[float] | None = None
    ci_half_width: float | None = None

    def to_json(self) -> str:
        """Serialize the public fields (term values are not exported)."""
        return self.model_dump_json(
            include={"method", "estimate", "n", "ci_half_width"}, exclude_none=True
        )


class DrnsConfig(BaseModel):
    """Rejection sampling parameters of the DR-ns evaluator."""

    model_config = ConfigDict(frozen=True)

    rho: float = Field(default=0.05, ge=0.0, le=1.0)
    c_max: float = Field(default=1.0, gt=0.0, le=1.0)
    T: int = Field(default=300, ge=1)
    quantile_method: str = Field(default="nearest-rank", pattern="^nearest-rank$")


class BlockRecord(BaseModel):
    """Multiplier in force and event count of one completed block."""
    c_t: float
    size: int = Field(ge=1)


class DrnsResult(BaseModel):
    """Outcome of one rejection-sampling trajectory."""
    success: bool
    V_drns: float
    V_avg: float
    C: float
    events_consumed: int
    blocks: list[BlockRecord] = Field(default_factory=list)

    @property
    def acceptances(self) -> int:
        return len(self.blocks)

    def to_json(self) -> str:
        return self.model_dump_json(
            include={"success", "V_drns", "V_avg", "events_consumed", "blocks"}
        )


class BiasMass(BaseModel):
    """Per-step bias masses of a rejection sampler on an enumerable instance."""
    per_step: list[float] = Field(default_factory=list)

    @model_validator(mode="after")
    def _check_range(self) -> "BiasMass":
        for value in self.per_step:
            if not 0.0 <= value < 1.0:
                raise ValueError(f"bias mass {value} outside [0, 1)")
        return self

    @property
    def eps(self) -> float:
        """Global cap: the largest per-step mass (0 when there are no steps)."""
        return max(self.per_step, default=0.0)


class ReplicateSummary(BaseModel):
    """Bias, rmse and spread of one method over a replicate sweep."""

    model_config = ConfigDict(ser_json_inf_nan="constants")

    method: str
    truth: float
    mean_estimate: float
    bias: float
    rmse: float
    std: float
    rmse_ci: float
    n_replicates: int = Field(ge=0)
    n_failed: int = 0


class RunEvent(BaseModel):
    """Audit trail event."""
    event_type: str
    timestamp: datetime = Field(default_factory=datetime.utcnow)
    run_id: UUID
    stage: str = "unknown"
    event: str = ""
    note: str
    duration_ms: int | None = None
    level: str = "info"
    details: dict[str, Any] = Field(default_factory=dict)
