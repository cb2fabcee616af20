"""DR-ns and the rejection-sampling baselines (RS, WC).

Each processed event contributes c_t·V̂_k to the running estimate whether or
not it is accepted; an event is accepted with probability min(1, c_t·π/p),
and each acceptance closes a block and advances the simulated history.
"""

import math
from bisect import insort
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Any, Protocol

import numpy as np

from ..errors import DomainError
from ..estimators import dr_term
from ..logging import RunLogger
from ..models import RewardModel
from ..policies import NonstationaryPolicy
from ..types import BlockRecord, DrnsConfig, DrnsResult, LogEvent


def nearest_rank_quantile(sorted_values: Sequence[float], rho: float) -> float:
    """The ⌈ρ·n⌉-th smallest value (the minimum when ρ = 0)."""
    if not sorted_values:
        raise DomainError("quantile of an empty multiset")
    if not 0.0 <= rho <= 1.0:
        raise DomainError(f"quantile level must be in [0, 1], got {rho}")
    rank = max(1, math.ceil(rho * len(sorted_values) - 1e-12))
    return sorted_values[rank - 1]


@dataclass
class DrnsState:
    """Mutable state of one trajectory."""
    c_t: float
    history_state: Any
    rng: np.random.Generator
    t: int = 1
    V_hat: float = 0.0
    C: float = 0.0
    Q: list[float] = field(default_factory=list)
    block_sizes: list[int] = field(default_factory=list)
    block_multipliers: list[float] = field(default_factory=list)
    snapshots: list[Any] = field(default_factory=list)
    events_consumed: int = 0
    success: bool = False


class MultiplierRule(Protocol):
    def initial(self) -> float: ...

    def update(self, state: DrnsState) -> float: ...


@dataclass(frozen=True)
class QuantileMultiplier:
    """c_t = min{c_max, ρ-quantile of Q}, starting from c_max."""
    rho: float
    c_max: float

    def initial(self) -> float:
        return self.c_max

    def update(self, state: DrnsState) -> float:
        return min(self.c_max, nearest_rank_quantile(state.Q, self.rho))


@dataclass(frozen=True)
class FixedMultiplier:
    c: float

    def initial(self) -> float:
        return self.c

    def update(self, state: DrnsState) -> float:
        return self.c


@dataclass
class ReplicatedRun:
    """Consecutive trajectories over one stream, each from an empty history."""
    results: list[DrnsResult]
    trailing_failure: bool

    @property
    def success(self) -> bool:
        return bool(self.results)

    @property
    def estimate(self) -> float:
        """Mean cumulative estimate over completed trajectories."""
        if not self.results:
            return math.nan
        return math.fsum(r.V_drns for r in self.results) / len(self.results)

    @property
    def estimate_avg(self) -> float:
        if not self.results:
            return math.nan
        return math.fsum(r.V_avg for r in self.results) / len(self.results)


class RejectionSampler:
    """Runs rejection-sampling trajectories of a nonstationary target."""

    def __init__(
        self,
        target: NonstationaryPolicy,
        rule: MultiplierRule,
        T: int,
        reward_model: RewardModel | None = None,
        doubly_robust: bool = True,
        label: str = "DR-ns",
        logger: RunLogger | None = None,
    ):
        if T < 1:
            raise DomainError("horizon T must be at least 1")
        if doubly_robust and reward_model is None:
            raise DomainError("the doubly robust sampler needs a reward model")
        self.target = target
        self.rule = rule
        self.T = T
        self.reward_model = reward_model
        self.doubly_robust = doubly_robust
        self.label = label
        self.logger = logger

    def run(
        self, events: Sequence[LogEvent], rng: np.random.Generator, start: int = 0
    ) -> tuple[DrnsResult, DrnsState]:
        """Process events from ``start`` until T acceptances or exhaustion."""
        h0 = self.target.initial_state()
        state = DrnsState(c_t=self.rule.initial(), history_state=h0, rng=rng, snapshots=[h0])
        block_start = start

        for k in range(start, len(events)):
            event = events[k]
            features = event.context.features
            dist = self.target.distribution(features, state.history_state)
            target_prob = float(dist[event.action])
            p = event.propensity

            if self.doubly_robust:
                term = dr_term(event, dist, self.reward_model, p)
                state.V_hat += state.c_t * term.value
                state.C += state.c_t
            insort(state.Q, p / target_prob if target_prob > 0 else math.inf)
            state.events_consumed += 1

            u = rng.random()
            if target_prob > 0 and u <= state.c_t * target_prob / p:
                if not self.doubly_robust:
                    state.V_hat += event.outcome
                    state.C += 1.0
                state.block_sizes.append(k - block_start + 1)
                state.block_multipliers.append(state.c_t)
                block_start = k + 1
                state.history_state = self.target.observe(
                    state.history_state, features, event.action, event.outcome
                )
                state.t += 1
                if state.t == self.T + 1:
                    state.success = True
                    break
                state.snapshots.append(state.history_state)
                state.c_t = self.rule.update(state)

        result = self._result(state)
        if self.logger:
            if state.success:
                self.logger.trajectory_completed(self.label, result.acceptances, state.events_consumed)
            else:
                self.logger.trajectory_failed(
                    self.label, result.acceptances, self.T, state.events_consumed
                )
        return result, state

    def run_replicates(
        self,
        events: Sequence[LogEvent],
        seed: int,
        max_replicates: int | None = None,
    ) -> ReplicatedRun:
        """Restart with a fresh state after every success until the stream ends."""
        rng = np.random.default_rng(seed)
        results: list[DrnsResult] = []
        start = 0
        while start < len(events):
            if max_replicates is not None and len(results) >= max_replicates:
                return ReplicatedRun(results=results, trailing_failure=False)
            result, state = self.run(events, rng, start)
            if not state.success:
                return ReplicatedRun(results=results, trailing_failure=True)
            results.append(result)
            start += state.events_consumed
        return ReplicatedRun(results=results, trailing_failure=False)

    def _result(self, state: DrnsState) -> DrnsResult:
        return DrnsResult(
            success=state.success,
            V_drns=state.V_hat,
            V_avg=state.V_hat / state.C if state.C > 0 else 0.0,
            C=state.C,
            events_consumed=state.events_consumed,
            blocks=[
                BlockRecord(c_t=c, size=size)
                for c, size in zip(state.block_multipliers, state.block_sizes, strict=True)
            ],
        )


def drns_sampler(
    target: NonstationaryPolicy,
    reward_model: RewardModel,
    config: DrnsConfig,
    logger: RunLogger | None = None,
) -> RejectionSampler:
    return RejectionSampler(
        target,
        QuantileMultiplier(rho=config.rho, c_max=config.c_max),
        config.T,
        reward_model=reward_model,
        label=f"DR-ns(rho={config.rho})",
        logger=logger,
    )


def drns_run_with_state(
    events: Sequence[LogEvent],
    target: NonstationaryPolicy,
    reward_model: RewardModel,
    config: DrnsConfig,
    seed: int,
    logger: RunLogger | None = None,
) -> tuple[DrnsResult, DrnsState]:
    """DR-ns over the whole stream, also returning the final state."""
    if not events:
        raise DomainError("DR-ns needs a nonempty event stream")
    sampler = drns_sampler(target, reward_model, config, logger)
    return sampler.run(events, np.random.default_rng(seed))


def drns_run(
    events: Sequence[LogEvent],
    target: NonstationaryPolicy,
    reward_model: RewardModel,
    config: DrnsConfig,
    seed: int,
    logger: RunLogger | None = None,
) -> DrnsResult:
    """One DR-ns trajectory over ``events``."""
    return drns_run_with_state(events, target, reward_model, config, seed, logger)[0]


def drns_replicates(
    events: Sequence[LogEvent],
    target: NonstationaryPolicy,
    reward_model: RewardModel,
    config: DrnsConfig,
    seed: int,
    max_replicates: int | None = None,
    logger: RunLogger | None = None,
) -> ReplicatedRun:
    """Multiple-replicate DR-ns; the estimate is the mean over trajectories."""
    sampler = drns_sampler(target, reward_model, config, logger)
    return sampler.run_replicates(events, seed, max_replicates)


def rs_sampler(
    target: NonstationaryPolicy, c: float, T: int, logger: RunLogger | None = None
) -> RejectionSampler:
    if not 0 < c <= 1:
        raise DomainError(f"RS multiplier must be in (0, 1], got {c}")
    return RejectionSampler(
        target, FixedMultiplier(c), T, doubly_robust=False, label="RS", logger=logger
    )


def rs_run(
    events: Sequence[LogEvent],
    target: NonstationaryPolicy,
    c: float,
    T: int,
    seed: int,
    logger: RunLogger | None = None,
) -> DrnsResult:
    """Replay by rejection sampling with a fixed multiplier; sums accepted outcomes.

    Unbiased when c·π_t(a|x) ≤ p_k for every event, which the caller ensures.
    """
    if not events:
        raise DomainError("RS needs a nonempty event stream")
    sampler = rs_sampler(target, c, T, logger)
    return sampler.run(events, np.random.default_rng(seed))[0]


def wc_sampler(
    target: NonstationaryPolicy,
    reward_model: RewardModel,
    min_propensity: float,
    T: int,
    logger: RunLogger | None = None,
) -> RejectionSampler:
    if not 0 < min_propensity <= 1:
        raise DomainError(f"minimum propensity must be in (0, 1], got {min_propensity}")
    return RejectionSampler(
        target,
        FixedMultiplier(min_propensity),
        T,
        reward_model=reward_model,
        label="WC",
        logger=logger,
    )


def wc_run(
    events: Sequence[LogEvent],
    target: NonstationaryPolicy,
    reward_model: RewardModel,
    min_propensity: float,
    T: int,
    seed: int,
    logger: RunLogger | None = None,
) -> DrnsResult:
    """DR-ns with the multiplier frozen at the dataset-wide minimum propensity."""
    if not events:
        raise DomainError("WC needs a nonempty event stream")
    sampler = wc_sampler(target, reward_model, min_propensity, T, logger)
    return sampler.run(events, np.random.default_rng(seed))[0]
