"""Stationary off-policy estimators: direct method, IPS and doubly robust.

Per-event terms are summed in event order with compensated summation, so
DR with a zero reward model reproduces IPS bit for bit and DR with infinite
propensity estimates reproduces DM bit for bit.
"""

import math
from collections.abc import Callable, Sequence

import numpy as np

from .bounds import AssumptionBounds, finite_sample_bound
from .errors import DomainError
from .models import PropensityModel, RewardModel, policy_weighted
from .policies import StationaryPolicy
from .types import EstimateReport, LogEvent, Method, TermValue


def importance_weight(
    target_prob: float, propensity_estimate: float, clip: float | None = None
) -> float:
    """ν(a|x)/μ̂(a|x), exactly 0 when μ̂ = +∞, optionally capped at ``clip``."""
    if math.isnan(propensity_estimate) or propensity_estimate <= 0:
        raise DomainError(f"propensity estimate must be positive, got {propensity_estimate}")
    if math.isinf(propensity_estimate):
        return 0.0
    weight = target_prob / propensity_estimate
    if clip is not None:
        weight = min(weight, clip)
    return weight


def dr_term(
    event: LogEvent,
    policy_dist: np.ndarray,
    reward_model: RewardModel,
    propensity_estimate: float,
    clip: float | None = None,
) -> TermValue:
    """V̂_k = r̂(x_k, ν) + ν(a_k|x_k)/μ̂_k · (r_k − r̂(x_k, a_k))."""
    predictions = reward_model.predict_all(event.context.features)
    baseline = policy_weighted(policy_dist, predictions)
    weight = importance_weight(
        float(policy_dist[event.action]), propensity_estimate, clip
    )
    correction = weight * (event.outcome - float(predictions[event.action]))
    return TermValue(
        value=baseline + correction,
        importance_weight=weight,
        baseline=baseline,
        correction=correction,
    )


def _report(method: Method, values: list[float], retain_terms: bool) -> EstimateReport:
    return EstimateReport(
        method=method,
        estimate=math.fsum(values) / len(values),
        n=len(values),
        term_values=values if retain_terms else None,
    )


def _require_events(events: Sequence[LogEvent]) -> None:
    if len(events) == 0:
        raise DomainError("cannot estimate a policy value from an empty log")


def dm_estimate(
    events: Sequence[LogEvent],
    policy: StationaryPolicy,
    reward_model: RewardModel,
    retain_terms: bool = False,
) -> EstimateReport:
    """(1/n) Σ_k Σ_a ν(a|x_k) r̂(x_k, a)."""
    _require_events(events)
    values = [
        reward_model.policy_value(
            event.context.features, policy.distribution(event.context.features)
        )
        for event in events
    ]
    return _report(Method.DM, values, retain_terms)


def ips_estimate(
    events: Sequence[LogEvent],
    policy: StationaryPolicy,
    propensity_model: PropensityModel,
    clip: float | None = None,
    retain_terms: bool = False,
) -> EstimateReport:
    """(1/n) Σ_k ν(a_k|x_k)/μ̂_k(a_k|x_k) · r_k."""
    _require_events(events)
    values = []
    for k, event in enumerate(events):
        estimate = propensity_model.estimate(event.context, event.action, k)
        if math.isinf(estimate):
            raise DomainError(f"IPS needs finite propensity estimates (event {k})")
        dist = policy.distribution(event.context.features)
        weight = importance_weight(float(dist[event.action]), estimate, clip)
        values.append(weight * event.outcome)
    return _report(Method.IPS, values, retain_terms)


def dr_estimate(
    events: Sequence[LogEvent],
    policy: StationaryPolicy,
    reward_model: RewardModel,
    propensity_model: PropensityModel,
    clip: float | None = None,
    retain_terms: bool = False,
    bounds: AssumptionBounds | None = None,
    delta: float = 0.05,
) -> EstimateReport:
    """Mean of ``dr_term`` over the log.

    When ``bounds`` is given the report carries the finite-sample confidence
    half-width at level ``1 - delta``.
    """
    _require_events(events)
    values = []
    for k, event in enumerate(events):
        dist = policy.distribution(event.context.features)
        estimate = propensity_model.estimate(event.context, event.action, k)
        values.append(dr_term(event, dist, reward_model, estimate, clip).value)
    report = _report(Method.DR, values, retain_terms)
    if bounds is not None:
        report.ci_half_width = finite_sample_bound(bounds, report.n, delta)
    return report


def term_range_bound(M: float) -> float:
    """|V̂_k| ≤ 1 + M whenever the importance weight is at most M."""
    if M < 0:
        raise DomainError("weight bound M must be non-negative")
    return 1.0 + M


def run_estimator(
    method: Method,
    events: Sequence[LogEvent],
    policy: StationaryPolicy,
    reward_model: RewardModel,
    propensity_model: PropensityModel,
    clip: float | None = None,
) -> EstimateReport:
    """Dispatch on the estimator tag with a shared argument list."""
    dispatch: dict[Method, Callable[[], EstimateReport]] = {
        Method.DM: lambda: dm_estimate(events, policy, reward_model),
        Method.IPS: lambda: ips_estimate(events, policy, propensity_model, clip),
        Method.DR: lambda: dr_estimate(
            events, policy, reward_model, propensity_model, clip
        ),
    }
    return dispatch[method]()
