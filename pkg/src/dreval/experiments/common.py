"""Shared pieces of the experiment protocols: datasets, replicate fan-out, summaries."""

import math
from collections.abc import Callable, Sequence
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from typing import Any, TypeVar

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from ..config import DatasetConfig, DatasetKind, ExperimentConfig
from ..datagen import (
    MulticlassDataset,
    MultilabelDataset,
    RegressionDataset,
    load_multiclass_csv,
    load_multilabel_svmlight,
    load_regression_csv,
    synthetic_multiclass,
    synthetic_multilabel,
    synthetic_regression,
)
from ..determinism import DeterminismUtils, SeedStream, derive_seed
from ..errors import ConfigError
from ..types import ReplicateSummary

T = TypeVar("T")
R = TypeVar("R")

Z_95 = 1.96


class RunOutputs(BaseModel):
    """Everything a protocol produced; persisted as run.json for ``report``."""

    model_config = ConfigDict(ser_json_inf_nan="constants")

    mode: str
    config: dict[str, Any]
    config_hash: str
    seed: int
    tables: dict[str, list[dict[str, Any]]] = Field(default_factory=dict)
    summaries: list[ReplicateSummary] = Field(default_factory=list)
    notes: dict[str, Any] = Field(default_factory=dict)


def summarize(
    method: str, truth: float, estimates: Sequence[float], n_failed: int = 0
) -> ReplicateSummary:
    """Signed bias, rmse, sample std and a normal-approximation 95% rmse half-width.

    The half-width propagates the standard error of the mean squared error
    through the square root (delta method).
    """
    values = np.asarray([e for e in estimates if math.isfinite(e)], dtype=float)
    if values.size == 0:
        nan = math.nan
        return ReplicateSummary(
            method=method, truth=truth, mean_estimate=nan, bias=nan, rmse=nan,
            std=nan, rmse_ci=nan, n_replicates=0, n_failed=n_failed,
        )
    errors = values - truth
    squared = errors**2
    rmse = math.sqrt(math.fsum(squared.tolist()) / values.size)
    std = float(values.std(ddof=1)) if values.size > 1 else 0.0
    rmse_ci = 0.0
    if values.size > 1 and rmse > 0:
        rmse_ci = Z_95 * float(squared.std(ddof=1)) / math.sqrt(values.size) / (2.0 * rmse)
    mean = math.fsum(values.tolist()) / values.size
    return ReplicateSummary(
        method=method,
        truth=truth,
        mean_estimate=mean,
        bias=mean - truth,
        rmse=rmse,
        std=std,
        rmse_ci=rmse_ci,
        n_replicates=int(values.size),
        n_failed=n_failed,
    )


def run_replicates(
    fn: Callable[[T, int], R], context: T, indices: Sequence[int], workers: int = 1
) -> list[R]:
    """Map ``fn(context, index)`` over indices; results come back in index order."""
    if workers <= 1:
        return [fn(context, i) for i in indices]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(partial(fn, context), indices))
    return [r for _, r in sorted(zip(indices, results, strict=True), key=lambda pair: pair[0])]


def _dataset_seed(config: ExperimentConfig) -> int:
    return derive_seed(config.seed, SeedStream.DATASET, 0)


def load_multiclass(config: ExperimentConfig) -> MulticlassDataset:
    source: DatasetConfig = config.dataset
    if source.kind is DatasetKind.SYNTHETIC_MULTICLASS:
        return synthetic_multiclass(
            source.n, source.dimension, source.n_actions, seed=_dataset_seed(config)
        )
    if source.kind is DatasetKind.CSV:
        return load_multiclass_csv(source.path, source.has_header)
    raise ConfigError(f"mode {config.mode.value} needs a multiclass dataset, got {source.kind.value}")


def load_multilabel(config: ExperimentConfig) -> MultilabelDataset:
    source = config.dataset
    if source.kind is DatasetKind.SYNTHETIC_MULTILABEL:
        return synthetic_multilabel(
            source.n, source.dimension, source.n_actions, seed=_dataset_seed(config)
        )
    if source.kind is DatasetKind.SVMLIGHT:
        return load_multilabel_svmlight(source.path, source.n_actions)
    raise ConfigError(f"mode {config.mode.value} needs a multilabel dataset, got {source.kind.value}")


def load_regression(config: ExperimentConfig) -> RegressionDataset:
    source = config.dataset
    if source.kind is DatasetKind.SYNTHETIC_REGRESSION:
        return synthetic_regression(source.n, source.dimension, seed=_dataset_seed(config))
    if source.kind is DatasetKind.REGRESSION_CSV:
        return load_regression_csv(source.path, source.has_header)
    raise ConfigError(f"mode {config.mode.value} needs a regression dataset, got {source.kind.value}")


def summary_rows(summaries: Sequence[ReplicateSummary], **extra: Any) -> list[dict[str, Any]]:
    return [{**extra, **s.model_dump()} for s in summaries]


def new_outputs(config: ExperimentConfig) -> RunOutputs:
    config_data = config.hashable()
    return RunOutputs(
        mode=config.mode.value,
        config=config_data,
        config_hash=DeterminismUtils.config_hash(config_data),
        seed=config.seed,
    )


def frozen_dimension(*datasets: Any) -> int:
    """One dense width shared by every part of a split."""
    return max(d.dimension for d in datasets)
