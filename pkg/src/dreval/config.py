"""Experiment configuration: pydantic models, YAML loading and --set overrides."""

from enum import Enum
from pathlib import Path
from typing import Any

import yaml
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .errors import ConfigError
from .types import Method


class Mode(str, Enum):
    EVAL = "eval-stationary"
    OPTIMIZE = "optimize"
    SHIFT = "covariate-shift"
    DRNS = "drns"


DEFAULT_REPLICATES = {Mode.EVAL: 500, Mode.OPTIMIZE: 30, Mode.SHIFT: 100, Mode.DRNS: 50}


class DatasetKind(str, Enum):
    SYNTHETIC_MULTICLASS = "synthetic-multiclass"
    SYNTHETIC_MULTILABEL = "synthetic-multilabel"
    SYNTHETIC_REGRESSION = "synthetic-regression"
    CSV = "csv"
    SVMLIGHT = "svmlight"
    REGRESSION_CSV = "regression-csv"


class DatasetConfig(BaseModel):
    """Where examples come from. Synthetic sets are drawn from the master seed."""

    model_config = ConfigDict(extra="forbid")

    kind: DatasetKind = DatasetKind.SYNTHETIC_MULTICLASS
    path: Path | None = None
    has_header: bool = False
    n: int = Field(default=2000, ge=2)
    dimension: int = Field(default=5, ge=1)
    n_actions: int = Field(default=4, ge=1)

    @model_validator(mode="after")
    def _check_path(self) -> "DatasetConfig":
        file_kinds = {DatasetKind.CSV, DatasetKind.SVMLIGHT, DatasetKind.REGRESSION_CSV}
        if self.kind in file_kinds and self.path is None:
            raise ValueError(f"dataset kind {self.kind.value} needs a path")
        return self


class DLMConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    epsilon: float = Field(default=0.1, gt=0.0)
    restarts: int = Field(default=20, ge=1)
    max_batches: int = Field(default=500, ge=1)
    tolerance: float = Field(default=1e-6, gt=0.0)


class OptimizeConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    split_fraction: float = Field(default=0.7, gt=0.0, lt=1.0)
    learners: list[str] = Field(default_factory=lambda: ["dlm", "filter_tree"])
    full_feedback_baseline: bool = True

    @model_validator(mode="after")
    def _check_learners(self) -> "OptimizeConfig":
        unknown = set(self.learners) - {"dlm", "filter_tree"}
        if unknown or not self.learners:
            raise ValueError(f"learners must be drawn from dlm, filter_tree; got {self.learners}")
        return self


class ShiftConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    fractions: list[float] = Field(
        default_factory=lambda: [0.0001, 0.0005, 0.001, 0.005, 0.01, 0.05]
    )
    reward_model_fraction: float = Field(default=0.2, gt=0.0, lt=1.0)
    reveal_probability: float | None = Field(default=None, gt=0.0, le=1.0)

    @model_validator(mode="after")
    def _check_fractions(self) -> "ShiftConfig":
        if not self.fractions or any(not 0.0 < f <= 1.0 for f in self.fractions):
            raise ValueError("subsample fractions must lie in (0, 1]")
        return self


class DrnsGridConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    rhos: list[float] = Field(default_factory=lambda: [0.0, 0.01, 0.05, 0.1])
    c_max: float = Field(default=1.0, gt=0.0, le=1.0)
    T: int = Field(default=300, ge=1)
    init_fraction: float = Field(default=0.01, gt=0.0, lt=1.0)
    valid_fraction: float = Field(default=0.19, gt=0.0, lt=1.0)
    truth_simulations: int = Field(default=2000, ge=1)
    epsilon: float = Field(default=0.1, ge=0.0, le=1.0)
    retrain_period: int = Field(default=15, ge=1)
    l2: float = Field(default=1e-3, ge=0.0)
    epochs: int = Field(default=200, ge=1)

    @model_validator(mode="after")
    def _check(self) -> "DrnsGridConfig":
        if any(not 0.0 <= rho <= 1.0 for rho in self.rhos):
            raise ValueError("every rho must lie in [0, 1]")
        if self.init_fraction + self.valid_fraction >= 1.0:
            raise ValueError("init and valid fractions leave no evaluation data")
        return self


class ExperimentConfig(BaseModel):
    """One experiment protocol run."""

    model_config = ConfigDict(extra="forbid")

    mode: Mode
    seed: int = Field(default=0, ge=0)
    replicates: int | None = Field(default=None, ge=1)
    workers: int = Field(default=1, ge=1)
    out: Path = Path("out")
    dataset: DatasetConfig = Field(default_factory=DatasetConfig)
    estimators: list[Method] = Field(default_factory=lambda: [Method.DM, Method.IPS, Method.DR])
    split_fraction: float = Field(default=0.5, gt=0.0, lt=1.0)
    ridge_lambda: float = Field(default=1.0, gt=0.0)
    oracle_loss_model: bool = False
    dlm: DLMConfig = Field(default_factory=DLMConfig)
    optimize: OptimizeConfig = Field(default_factory=OptimizeConfig)
    shift: ShiftConfig = Field(default_factory=ShiftConfig)
    drns: DrnsGridConfig = Field(default_factory=DrnsGridConfig)

    @model_validator(mode="after")
    def _check_oracle(self) -> "ExperimentConfig":
        if self.oracle_loss_model and self.dataset.kind is not DatasetKind.SYNTHETIC_MULTICLASS:
            raise ValueError("oracle_loss_model needs a synthetic-multiclass dataset")
        return self

    @property
    def n_replicates(self) -> int:
        return self.replicates or DEFAULT_REPLICATES[self.mode]

    def hashable(self) -> dict[str, Any]:
        """JSON-ready form used for the config hash; output location excluded."""
        return self.model_dump(mode="json", exclude={"out", "workers"})


def apply_overrides(data: dict[str, Any], overrides: list[str]) -> dict[str, Any]:
    """Apply ``key.sub=value`` overrides; values are parsed as YAML scalars."""
    for override in overrides:
        key, sep, raw = override.partition("=")
        if not sep or not key:
            raise ConfigError(f"override must look like key=value, got {override!r}")
        try:
            value = yaml.safe_load(raw)
        except yaml.YAMLError as e:
            raise ConfigError(f"cannot parse override value {raw!r}: {e}") from e
        target = data
        parts = key.split(".")
        for part in parts[:-1]:
            node = target.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override {key} descends into a non-mapping")
            target = node
        target[parts[-1]] = value
    return data


def read_config_data(path: Path | None, overrides: list[str] | None = None) -> dict[str, Any]:
    """Raw mapping from a YAML/JSON file (or empty) with overrides applied."""
    data: dict[str, Any] = {}
    if path is not None:
        try:
            with open(path) as f:
                loaded = yaml.safe_load(f)
        except OSError as e:
            raise ConfigError(f"{path}: {e}") from e
        except yaml.YAMLError as e:
            raise ConfigError(f"{path}: invalid YAML: {e}") from e
        if loaded is not None and not isinstance(loaded, dict):
            raise ConfigError(f"{path}: top level must be a mapping")
        data = loaded or {}
    return apply_overrides(data, overrides or [])


def load_config(
    path: Path | None, overrides: list[str] | None = None, mode: Mode | None = None
) -> ExperimentConfig:
    """Read, override and validate a config; ``mode`` fills in a missing mode key."""
    from .validation import SchemaValidator

    data = read_config_data(path, overrides)
    if mode is not None:
        declared = data.setdefault("mode", mode.value)
        if declared != mode.value:
            raise ConfigError(f"config declares mode {declared!r}, command runs {mode.value!r}")
    result = SchemaValidator().validate(data)
    if not result.ok:
        details = "; ".join(f"{e.json_pointer}: {e.message}" for e in result.errors)
        raise ConfigError(f"invalid configuration: {details}")
    return ExperimentConfig.model_validate(data)
