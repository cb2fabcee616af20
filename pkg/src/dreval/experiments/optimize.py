"""Policy optimization protocol: learn from imputed costs, measure test error."""

import math
import time
from dataclasses import dataclass

import numpy as np
import pandas as pd

from ..config import DLMConfig, ExperimentConfig
from ..datagen import MulticlassDataset, multiclass_to_bandit
from ..determinism import SeedStream, derive_seed, replicate_rng
from ..learn import (
    CostMatrixExample,
    FilterTree,
    LinearArgmaxPolicy,
    dlm_train,
    filter_tree_train,
    fit_reward_model_per_action,
    full_feedback_examples,
    impute_log,
)
from ..logging import RunLogger
from ..models import LoggedPropensityModel
from ..types import Method, feature_matrix
from .common import RunOutputs, frozen_dimension, load_multiclass, new_outputs, run_replicates

FULL_FEEDBACK = "full"


@dataclass(frozen=True)
class OptimizeContext:
    dataset: MulticlassDataset
    split_fraction: float
    learners: tuple[str, ...]
    full_feedback_baseline: bool
    ridge_lambda: float
    dlm: DLMConfig
    dimension: int
    seed: int


def holdout_error(
    policy: LinearArgmaxPolicy | FilterTree, dataset: MulticlassDataset, dimension: int
) -> float:
    matrix = feature_matrix(dataset.features, dimension)
    if isinstance(policy, FilterTree):
        chosen = policy.predict_matrix(matrix.toarray())
    else:
        chosen = policy.actions(matrix)
    losses = dataset.loss_matrix()[np.arange(len(dataset)), chosen]
    return math.fsum(losses.tolist()) / len(dataset)


def _train(
    learner: str,
    examples: list[CostMatrixExample],
    context: OptimizeContext,
    seed: int,
) -> LinearArgmaxPolicy | FilterTree:
    if learner == "dlm":
        model = dlm_train(
            examples,
            epsilon=context.dlm.epsilon,
            restarts=context.dlm.restarts,
            seed=seed,
            max_batches=context.dlm.max_batches,
            tolerance=context.dlm.tolerance,
            dimension=context.dimension,
        )
        return LinearArgmaxPolicy(model)
    return filter_tree_train(examples, dimension=context.dimension)


def optimize_replicate(context: OptimizeContext, index: int) -> list[dict]:
    started = time.perf_counter()
    train, test = context.dataset.split(
        context.split_fraction, replicate_rng(context.seed, SeedStream.SPLIT, index)
    )
    seed = derive_seed(context.seed, SeedStream.LOGGING, index)
    learner_seed = derive_seed(context.seed, SeedStream.LEARNER, index)
    K = context.dataset.n_actions
    events = multiclass_to_bandit(train, seed)
    propensities = LoggedPropensityModel(events)
    loss_model = fit_reward_model_per_action(events, context.ridge_lambda, K, context.dimension)

    feedback: dict[str, list[CostMatrixExample]] = {
        Method.IPS.value: impute_log(events, None, propensities, K, Method.IPS),
        Method.DR.value: impute_log(events, loss_model, propensities, K, Method.DR),
    }
    if context.full_feedback_baseline:
        feedback[FULL_FEEDBACK] = full_feedback_examples(train)

    rows = []
    for learner in context.learners:
        for kind, examples in feedback.items():
            policy = _train(learner, examples, context, learner_seed)
            rows.append(
                {
                    "replicate": index,
                    "seed": seed,
                    "learner": learner,
                    "feedback": kind,
                    "test_error": holdout_error(policy, test, context.dimension),
                    "duration_ms": int((time.perf_counter() - started) * 1000),
                }
            )
    return rows


def error_table(rows: list[dict]) -> list[dict]:
    """Mean and sample std of test error per (learner, feedback)."""
    frame = pd.DataFrame(rows)
    grouped = frame.groupby(["learner", "feedback"], sort=True)["test_error"]
    table = grouped.agg(mean="mean", std="std", n_replicates="count").reset_index()
    table["std"] = table["std"].fillna(0.0)
    return table.to_dict(orient="records")


def run_optimize(config: ExperimentConfig, logger: RunLogger | None = None) -> RunOutputs:
    """Test error of each learner trained on IPS-, DR- and fully observed costs."""
    dataset = load_multiclass(config)
    if logger:
        logger.dataset_loaded(config.dataset.kind.value, len(dataset), dataset.n_actions)
    context = OptimizeContext(
        dataset=dataset,
        split_fraction=config.optimize.split_fraction,
        learners=tuple(config.optimize.learners),
        full_feedback_baseline=config.optimize.full_feedback_baseline,
        ridge_lambda=config.ridge_lambda,
        dlm=config.dlm,
        dimension=frozen_dimension(dataset),
        seed=config.seed,
    )
    replicate_rows = run_replicates(
        optimize_replicate, context, range(config.n_replicates), config.workers
    )

    rows = []
    for index, replicate in enumerate(replicate_rows):
        if logger:
            logger.replicate_completed(index, replicate[0]["seed"], replicate[-1]["duration_ms"])
        rows.extend({k: v for k, v in row.items() if k != "duration_ms"} for row in replicate)

    outputs = new_outputs(config)
    outputs.tables["replicates"] = rows
    outputs.tables["test_error"] = [
        {"seed": config.seed, **row} for row in error_table(rows)
    ]
    outputs.notes.update(
        train_examples=int(round(config.optimize.split_fraction * len(dataset))),
        test_examples=len(dataset) - int(round(config.optimize.split_fraction * len(dataset))),
    )
    return outputs
