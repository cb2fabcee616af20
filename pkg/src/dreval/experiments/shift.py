"""Covariate-shift protocol: estimate a population mean from a biased subsample.

The logger reveals a response with a probability that falls off along the
top principal direction; the target always reveals. Truth is the mean of the
rescaled responses over the evaluation pool.
"""

import math
import time
from dataclasses import dataclass

import numpy as np

from ..config import ExperimentConfig
from ..datagen import CovariateShiftSampler, RegressionDataset
from ..determinism import SeedStream, derive_seed, replicate_rng
from ..estimators import run_estimator
from ..learn import LinearModel, ridge_fit
from ..logging import RunLogger
from ..models import LoggedPropensityModel, RewardModel
from ..policies import ConstantActionPolicy
from ..types import Features, Method
from .common import RunOutputs, load_regression, new_outputs, run_replicates, summarize

REVEAL = 1
SHIFT_METHODS = (Method.IPS, Method.DR)


class RevealRewardModel(RewardModel):
    """r̂(x, conceal) = 0 and r̂(x, reveal) = clip(w·x + b, 0, 1)."""

    def __init__(self, model: LinearModel):
        super().__init__(2)
        self.model = model

    def _predict(self, features: Features) -> np.ndarray:
        return np.array([0.0, float(self.model.scores(features)[0])])


@dataclass(frozen=True)
class ShiftContext:
    pool: RegressionDataset
    sampler: CovariateShiftSampler
    reward_model: RevealRewardModel
    fractions: tuple[float, ...]
    n_replicates: int
    seed: int


def subsample_size(fraction: float, pool_size: int) -> int:
    """⌈f·n⌉, so every positive fraction keeps at least one example."""
    return min(pool_size, max(1, math.ceil(fraction * pool_size - 1e-9)))


def shift_replicate(context: ShiftContext, index: int) -> list[dict]:
    """Replicate ``index`` enumerates (fraction, replicate) pairs fraction-major."""
    started = time.perf_counter()
    position, replicate = divmod(index, context.n_replicates)
    fraction = context.fractions[position]
    fraction_seed = derive_seed(context.seed, SeedStream.SUBSAMPLE, position)
    seed = derive_seed(fraction_seed, SeedStream.LOGGING, replicate)
    rng = np.random.default_rng(seed)
    size = subsample_size(fraction, len(context.pool))
    chosen = np.sort(rng.choice(len(context.pool), size=size, replace=False))
    events = context.sampler.log(context.pool.subset(chosen), rng)
    base = {"fraction": fraction, "replicate": replicate, "seed": seed, "examples": size}
    revealed = sum(1 for e in events if e.action == REVEAL)
    if revealed == 0:
        return [{**base, "method": None, "estimate": math.nan, "skipped": True}]

    target = ConstantActionPolicy(2, REVEAL)
    propensities = LoggedPropensityModel(events)
    duration_ms = int((time.perf_counter() - started) * 1000)
    return [
        {
            **base,
            "method": method.value,
            "estimate": run_estimator(
                method, events, target, context.reward_model, propensities
            ).estimate,
            "skipped": False,
            "duration_ms": duration_ms,
        }
        for method in SHIFT_METHODS
    ]


def run_covariate_shift(config: ExperimentConfig, logger: RunLogger | None = None) -> RunOutputs:
    """IPS and DR rmse and bias for every subsample fraction."""
    dataset = load_regression(config)
    if logger:
        logger.dataset_loaded(config.dataset.kind.value, len(dataset))
    sampler = CovariateShiftSampler.fit(
        dataset,
        seed=derive_seed(config.seed, SeedStream.DATASET, 1),
        constant_reveal=config.shift.reveal_probability,
    )
    model_part, pool = dataset.split(
        config.shift.reward_model_fraction, replicate_rng(config.seed, SeedStream.SPLIT, 0)
    )
    dimension = max(f.dimension for f in dataset.features)
    reward_model = RevealRewardModel(
        ridge_fit(
            model_part.features,
            sampler.rescale(model_part.responses),
            config.ridge_lambda,
            dimension,
        )
    )
    if logger:
        logger.model_trained("ridge", len(model_part))
    truth = sampler.ground_truth(pool)

    fractions = tuple(config.shift.fractions)
    R = config.n_replicates
    context = ShiftContext(
        pool=pool,
        sampler=sampler,
        reward_model=reward_model,
        fractions=fractions,
        n_replicates=R,
        seed=config.seed,
    )
    results = run_replicates(shift_replicate, context, range(len(fractions) * R), config.workers)

    rows = []
    skipped: dict[float, int] = {f: 0 for f in fractions}
    for replicate in results:
        head = replicate[0]
        if head["skipped"]:
            skipped[head["fraction"]] += 1
            if logger:
                logger.replicate_skipped(head["replicate"], head["seed"], "no revealed responses")
            continue
        if logger:
            logger.replicate_completed(head["replicate"], head["seed"], head["duration_ms"])
        rows.extend(
            {k: v for k, v in row.items() if k not in ("duration_ms", "skipped")}
            for row in replicate
        )

    outputs = new_outputs(config)
    for fraction in fractions:
        for method in SHIFT_METHODS:
            estimates = [
                r["estimate"]
                for r in rows
                if r["fraction"] == fraction and r["method"] == method.value
            ]
            outputs.summaries.append(summarize(method.value, truth, estimates, skipped[fraction]))
    outputs.tables["replicates"] = rows
    outputs.tables["by_fraction"] = [
        {"seed": config.seed, "fraction": fraction, **summary.model_dump()}
        for fraction, summary in zip(
            [f for f in fractions for _ in SHIFT_METHODS], outputs.summaries, strict=True
        )
    ]
    outputs.notes.update(
        truth=truth,
        pool_examples=len(pool),
        reward_model_examples=len(model_part),
        skipped={str(f): n for f, n in skipped.items()},
    )
    return outputs
