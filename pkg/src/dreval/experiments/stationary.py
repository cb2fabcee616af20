"""Stationary evaluation protocol on a multiclass dataset.

Split, train a classifier target on the first part, take its full-information
loss on the evaluation part as ground truth, then repeatedly turn the
evaluation part into uniform-exploration bandit feedback and score DM, IPS
and DR against that truth.
"""

import math
import time
from dataclasses import dataclass

import numpy as np

from ..config import ExperimentConfig
from ..datagen import MulticlassDataset, multiclass_to_bandit
from ..determinism import SeedStream, derive_seed, replicate_rng
from ..errors import DomainError
from ..estimators import run_estimator
from ..learn import (
    LinearArgmaxPolicy,
    dlm_train,
    fit_full_information_model,
    full_feedback_examples,
)
from ..logging import RunLogger
from ..models import LoggedPropensityModel, OracleRewardModel, RewardModel
from ..types import Method, feature_matrix
from .common import (
    RunOutputs,
    frozen_dimension,
    load_multiclass,
    new_outputs,
    run_replicates,
    summarize,
    summary_rows,
)


@dataclass(frozen=True)
class EvalContext:
    evaluation: MulticlassDataset
    target: LinearArgmaxPolicy
    loss_model: RewardModel
    methods: tuple[Method, ...]
    seed: int


def oracle_loss_model(dataset: MulticlassDataset) -> OracleRewardModel:
    """Exact expected losses 1 − P(y = a | x) from the generator's label probabilities."""
    if dataset.label_probs is None:
        raise DomainError("oracle loss model needs a synthetic dataset with label probabilities")
    truth = {f: 1.0 - p for f, p in zip(dataset.features, dataset.label_probs, strict=True)}
    return OracleRewardModel(dataset.n_actions, truth)


def target_loss(policy: LinearArgmaxPolicy, dataset: MulticlassDataset, dimension: int) -> float:
    """Full-information mean 0/1 loss of a classifier policy."""
    chosen = policy.actions(feature_matrix(dataset.features, dimension))
    losses = dataset.loss_matrix()[np.arange(len(dataset)), chosen]
    return math.fsum(losses.tolist()) / len(dataset)


def expected_target_loss(
    policy: LinearArgmaxPolicy, dataset: MulticlassDataset, dimension: int
) -> float:
    """Mean of 1 − P(y = π(x) | x); needs label probabilities."""
    if dataset.label_probs is None:
        raise DomainError("expected loss needs label probabilities")
    chosen = policy.actions(feature_matrix(dataset.features, dimension))
    losses = 1.0 - dataset.label_probs[np.arange(len(dataset)), chosen]
    return math.fsum(losses.tolist()) / len(dataset)


def eval_replicate(context: EvalContext, index: int) -> list[dict]:
    started = time.perf_counter()
    seed = derive_seed(context.seed, SeedStream.LOGGING, index)
    events = multiclass_to_bandit(context.evaluation, seed)
    propensities = LoggedPropensityModel(events)
    rows = []
    for method in context.methods:
        report = run_estimator(method, events, context.target, context.loss_model, propensities)
        rows.append(
            {
                "replicate": index,
                "seed": seed,
                "method": method.value,
                "estimate": report.estimate,
                "duration_ms": int((time.perf_counter() - started) * 1000),
            }
        )
    return rows


def run_eval_stationary(config: ExperimentConfig, logger: RunLogger | None = None) -> RunOutputs:
    """Bias, rmse and std of each configured estimator over the replicates.

    With ``oracle_loss_model`` set the loss model is the generator's exact expected loss and
    the truth is the target's expected (not realized) loss.
    """
    dataset = load_multiclass(config)
    if logger:
        logger.dataset_loaded(config.dataset.kind.value, len(dataset), dataset.n_actions)
    train, evaluation = dataset.split(
        config.split_fraction, replicate_rng(config.seed, SeedStream.SPLIT, 0)
    )
    dimension = frozen_dimension(train, evaluation)

    model = dlm_train(
        full_feedback_examples(train),
        epsilon=config.dlm.epsilon,
        restarts=config.dlm.restarts,
        seed=derive_seed(config.seed, SeedStream.LEARNER, 0),
        max_batches=config.dlm.max_batches,
        tolerance=config.dlm.tolerance,
        dimension=dimension,
        logger=logger,
    )
    target = LinearArgmaxPolicy(model)

    oracle = config.oracle_loss_model
    if oracle:
        loss_model: RewardModel = oracle_loss_model(evaluation)
        truth = expected_target_loss(target, evaluation, dimension)
    else:
        loss_model = fit_full_information_model(
            train.features, train.loss_matrix(), config.ridge_lambda, dimension
        )
        if logger:
            logger.model_trained("ridge", len(train))
        truth = target_loss(target, evaluation, dimension)

    context = EvalContext(
        evaluation=evaluation,
        target=target,
        loss_model=loss_model,
        methods=tuple(config.estimators),
        seed=config.seed,
    )
    replicate_rows = run_replicates(
        eval_replicate, context, range(config.n_replicates), config.workers
    )

    outputs = new_outputs(config)
    rows = []
    for index, replicate in enumerate(replicate_rows):
        if logger:
            logger.replicate_completed(index, replicate[0]["seed"], replicate[-1]["duration_ms"])
        for row in replicate:
            rows.append({k: v for k, v in row.items() if k != "duration_ms"})

    for method in config.estimators:
        estimates = [r["estimate"] for r in rows if r["method"] == method.value]
        summary = summarize(method.value, truth, estimates)
        outputs.summaries.append(summary)
        if logger:
            logger.estimate_computed(method.value, summary.mean_estimate, len(evaluation))

    outputs.tables["replicates"] = rows
    outputs.tables["summary"] = summary_rows(outputs.summaries, seed=config.seed)
    outputs.notes.update(
        truth=truth,
        train_examples=len(train),
        evaluation_examples=len(evaluation),
        target_training_cost=model.training_cost,
        oracle=oracle,
    )
    return outputs
