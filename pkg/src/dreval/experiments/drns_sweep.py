"""Nonstationary evaluation protocol: an ε-greedy learner on a multilabel task.

Ground truth is the learner's average per-step loss over T steps, averaged
over many simulations on shuffles of a held-out set. Each replicate permutes
the evaluation set, logs it with the label-biased logger and scores DM, RS,
WC and DR-ns (one row per quantile level) against that truth.
"""

import math
import time
from dataclasses import dataclass

import numpy as np

from ..config import DrnsGridConfig, ExperimentConfig
from ..datagen import MultilabelDataset, min_biased_logger_propensity, multilabel_biased_logger
from ..determinism import SeedStream, derive_seed, replicate_rng
from ..learn import (
    EpsilonGreedyPolicy,
    LogisticOutcomeModel,
    epsilon_greedy_policy,
    fit_logistic_heads,
)
from ..logging import RunLogger
from ..models import RewardModel
from ..nonstat.drns import ReplicatedRun, drns_replicates, rs_sampler, wc_sampler
from ..types import DrnsConfig, LogEvent, feature_matrix
from .common import (
    RunOutputs,
    load_multilabel,
    new_outputs,
    run_replicates,
    summarize,
    summary_rows,
)

DM, RS, WC = "DM", "RS", "WC"


def drns_label(rho: float) -> str:
    return f"DR-ns(rho={rho:g})"


def split_three_ways(
    dataset: MultilabelDataset, grid: DrnsGridConfig, rng: np.random.Generator
) -> tuple[MultilabelDataset, MultilabelDataset, MultilabelDataset]:
    """Warm-start, validation (for ground truth) and evaluation parts."""
    init, rest = dataset.split(grid.init_fraction, rng)
    valid, evaluation = rest.split(grid.valid_fraction / (1.0 - grid.init_fraction), rng)
    return init, valid, evaluation


def fit_outcome_model(
    dataset: MultilabelDataset, l2: float, epochs: int, dimension: int
) -> LogisticOutcomeModel:
    """l̂(x, a) = 1 − σ(w_a·x̃) from "a is a correct label" heads."""
    labels = np.zeros((len(dataset), dataset.n_actions))
    for i, label_set in enumerate(dataset.label_sets):
        labels[i, list(label_set)] = 1.0
    matrix = feature_matrix(dataset.features, dimension)
    return LogisticOutcomeModel(fit_logistic_heads(matrix, labels, l2=l2, epochs=epochs))


@dataclass(frozen=True)
class TruthContext:
    valid: MultilabelDataset
    target: EpsilonGreedyPolicy
    T: int
    seed: int


def simulate_truth(context: TruthContext, index: int) -> float:
    """Average expected per-step loss of one T-step run on a shuffle of the held-out set.

    Contexts are reused cyclically when the held-out set is shorter than T.
    """
    rng = replicate_rng(context.seed, SeedStream.SIMULATION, index)
    order = rng.permutation(len(context.valid))
    target = context.target
    state = target.initial_state()
    expected: list[float] = []
    for t in range(context.T):
        i = int(order[t % len(order)])
        features = context.valid.features[i]
        dist = target.distribution(features, state)
        losses = np.array([context.valid.loss(i, a) for a in range(target.n_actions)])
        expected.append(math.fsum((dist * losses).tolist()))
        action = int(rng.choice(target.n_actions, p=dist))
        state = target.observe(state, features, action, float(losses[action]))
    return math.fsum(expected) / context.T


def direct_method_simulation(
    events: list[LogEvent],
    target: EpsilonGreedyPolicy,
    loss_model: RewardModel,
    T: int,
    rng: np.random.Generator,
) -> list[float]:
    """Run π on consecutive T-long segments of the logged contexts, feeding it l̂.

    Returns the average predicted per-step loss of every complete segment.
    """
    values = []
    for start in range(0, len(events) - T + 1, T):
        state = target.initial_state()
        predicted: list[float] = []
        for event in events[start : start + T]:
            features = event.context.features
            dist = target.distribution(features, state)
            losses = loss_model.predict_all(features)
            predicted.append(math.fsum((dist * losses).tolist()))
            action = int(rng.choice(target.n_actions, p=dist))
            state = target.observe(state, features, action, float(losses[action]))
        values.append(math.fsum(predicted) / T)
    return values


@dataclass(frozen=True)
class SweepContext:
    evaluation: MultilabelDataset
    target: EpsilonGreedyPolicy
    loss_model: LogisticOutcomeModel
    grid: DrnsGridConfig
    seed: int


def _row(index: int, seed: int, method: str, run: ReplicatedRun | list[float]) -> dict:
    if isinstance(run, ReplicatedRun):
        trajectories = len(run.results)
        estimate = run.estimate_avg
    else:
        trajectories = len(run)
        estimate = math.fsum(run) / len(run) if run else math.nan
    return {
        "replicate": index,
        "seed": seed,
        "method": method,
        "estimate": estimate,
        "trajectories": trajectories,
        "failed": trajectories == 0,
    }


def sweep_replicate(context: SweepContext, index: int) -> list[dict]:
    started = time.perf_counter()
    grid = context.grid
    seed = derive_seed(context.seed, SeedStream.REJECTION, index)
    order = replicate_rng(context.seed, SeedStream.SUBSAMPLE, index).permutation(
        len(context.evaluation)
    )
    events = multilabel_biased_logger(
        context.evaluation.subset(order), derive_seed(context.seed, SeedStream.LOGGING, index)
    )
    K = context.evaluation.n_actions

    rows = [
        _row(
            index,
            seed,
            DM,
            direct_method_simulation(
                events,
                context.target,
                context.loss_model,
                grid.T,
                replicate_rng(seed, SeedStream.SIMULATION, 0),
            ),
        ),
        _row(
            index,
            seed,
            RS,
            rs_sampler(context.target, min_biased_logger_propensity(K), grid.T).run_replicates(
                events, derive_seed(seed, SeedStream.REJECTION, 0)
            ),
        ),
        _row(
            index,
            seed,
            WC,
            wc_sampler(
                context.target, context.loss_model, min_biased_logger_propensity(K), grid.T
            ).run_replicates(events, derive_seed(seed, SeedStream.REJECTION, 1)),
        ),
    ]
    for j, rho in enumerate(grid.rhos):
        config = DrnsConfig(rho=rho, c_max=grid.c_max, T=grid.T)
        run = drns_replicates(
            events,
            context.target,
            context.loss_model,
            config,
            derive_seed(seed, SeedStream.REJECTION, 2 + j),
        )
        rows.append(_row(index, seed, drns_label(rho), run))
    duration_ms = int((time.perf_counter() - started) * 1000)
    return [{**row, "duration_ms": duration_ms} for row in rows]


def run_drns_sweep(config: ExperimentConfig, logger: RunLogger | None = None) -> RunOutputs:
    """Rmse (with 95% half-width), bias and std of DM, RS, WC and DR-ns per ρ."""
    grid = config.drns
    dataset = load_multilabel(config)
    if logger:
        logger.dataset_loaded(config.dataset.kind.value, len(dataset), dataset.n_actions)
    init, valid, evaluation = split_three_ways(
        dataset, grid, replicate_rng(config.seed, SeedStream.SPLIT, 0)
    )
    dimension = dataset.dimension
    loss_model = fit_outcome_model(init, grid.l2, grid.epochs, dimension)
    if logger:
        logger.model_trained("logistic", len(init))
    target = epsilon_greedy_policy(init, grid.epsilon, grid.retrain_period, grid.l2, grid.epochs)

    truth_runs = run_replicates(
        simulate_truth,
        TruthContext(valid=valid, target=target, T=grid.T, seed=config.seed),
        range(grid.truth_simulations),
        config.workers,
    )
    truth = math.fsum(truth_runs) / len(truth_runs)
    if logger:
        logger.info(
            "Ground truth simulated", operation="simulate", simulations=len(truth_runs), truth=truth
        )

    context = SweepContext(
        evaluation=evaluation, target=target, loss_model=loss_model, grid=grid, seed=config.seed
    )
    results = run_replicates(sweep_replicate, context, range(config.n_replicates), config.workers)

    rows = []
    for index, replicate in enumerate(results):
        if logger:
            logger.replicate_completed(index, replicate[0]["seed"], replicate[0]["duration_ms"])
        rows.extend({k: v for k, v in row.items() if k != "duration_ms"} for row in replicate)

    outputs = new_outputs(config)
    methods = [DM, RS, WC] + [drns_label(rho) for rho in grid.rhos]
    for method in methods:
        mine = [r for r in rows if r["method"] == method]
        failed = sum(1 for r in mine if r["failed"])
        if logger and failed:
            logger.warning(
                "Replicates without a completed trajectory", method=method, failed=failed
            )
        outputs.summaries.append(
            summarize(method, truth, [r["estimate"] for r in mine if not r["failed"]], failed)
        )
    outputs.tables["replicates"] = rows
    outputs.tables["summary"] = summary_rows(outputs.summaries, seed=config.seed)
    outputs.notes.update(
        truth=truth,
        truth_simulations=len(truth_runs),
        init_examples=len(init),
        valid_examples=len(valid),
        evaluation_examples=len(evaluation),
        min_logging_propensity=min_biased_logger_propensity(dataset.n_actions),
    )
    return outputs
