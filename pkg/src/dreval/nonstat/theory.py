"""Exact analysis of rejection sampling on tiny enumerable instances.

Within one block the events are IID and the value V̂_k of an event is
computed before its acceptance is decided, so by Wald's identity the
expected block contribution is c·E[V̂]/α with α the per-event acceptance
probability. Summing over the law of simulated histories gives the exact
expectation of the cumulative DR-ns estimate without path truncation.
"""

import math
from collections.abc import Callable
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict

from ..dgp import DiscreteDGP
from ..errors import CapacityError, DomainError
from ..models import ConstantRewardModel, RewardModel
from ..policies import NonstationaryPolicy
from ..types import BiasMass

MAX_HISTORIES = 1_000_000

HistoryKey = tuple[tuple[int, int, float], ...]
Multiplier = float | Callable[[int, HistoryKey], float]


def failure_sample_requirement(T: int, alpha: float, delta: float, m: int = 1) -> int:
    """⌈(m·T + ln(e/δ))/α⌉ events suffice for m trajectories w.p. ≥ 1 − δ."""
    if not 0 < alpha <= 1:
        raise DomainError(f"acceptance probability must be in (0, 1], got {alpha}")
    if not 0 < delta < 1:
        raise DomainError(f"delta must be in (0, 1), got {delta}")
    if T < 1 or m < 1:
        raise DomainError("T and m must be positive")
    return math.ceil((m * T + math.log(math.e / delta)) / alpha)


def theorem51_bound(eps: float, T: int) -> float:
    """T(T+1)/2 · ε/(1 − ε): bias bound of the cumulative DR-ns estimate."""
    if not 0 <= eps < 1:
        raise DomainError(f"bias mass must be in [0, 1), got {eps}")
    if T < 1:
        raise DomainError("T must be at least 1")
    return T * (T + 1) / 2 * eps / (1 - eps)


def _target_table(dgp: DiscreteDGP, target: NonstationaryPolicy, state: Any) -> np.ndarray:
    return np.vstack([target.distribution(f, state) for f in dgp.context_features])


def bias_mass_exact(
    dgp: DiscreteDGP,
    target: NonstationaryPolicy | np.ndarray,
    c_t: float,
    state: Any = None,
) -> float:
    """ε = P_π[E] − P_μ[E]/c_t with E = {(x, a): c_t·π(a|x) > μ(a|x)}.

    ``target`` is either a policy queried at history ``state`` or the
    (contexts x actions) table of π_t directly.
    """
    if c_t <= 0:
        raise DomainError("multiplier must be positive")
    pi = target if isinstance(target, np.ndarray) else _target_table(dgp, target, state)
    event = (c_t * pi > dgp.mu) & (dgp.context_probs[:, None] > 0)
    if not event.any():
        return 0.0
    weights = dgp.context_probs[:, None]
    over = float(np.sum((weights * pi)[event]))
    under = float(np.sum((weights * dgp.mu)[event])) / c_t
    return max(over - under, 0.0)


class ExactDrnsAnalysis(BaseModel):
    """Exact expectations for rejection sampling with a history-driven multiplier."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    expected_estimate: float
    true_value: float
    bias_mass: BiasMass
    algorithm_history_law: dict[HistoryKey, float]
    target_history_law: dict[HistoryKey, float]

    @property
    def bias(self) -> float:
        return abs(self.expected_estimate - self.true_value)

    @property
    def total_variation(self) -> float:
        """Σ_h |π̂(h_T) − π(h_T)| over length-T histories."""
        keys = self.algorithm_history_law.keys() | self.target_history_law.keys()
        return math.fsum(
            abs(self.algorithm_history_law.get(h, 0.0) - self.target_history_law.get(h, 0.0))
            for h in keys
        )


def _check_capacity(histories: int) -> None:
    if histories > MAX_HISTORIES:
        raise CapacityError(
            f"{histories} histories exceed the enumeration limit of {MAX_HISTORIES}"
        )


def drns_expectation_exact(
    dgp: DiscreteDGP,
    target: NonstationaryPolicy,
    multiplier: Multiplier,
    T: int,
    reward_model: RewardModel | None = None,
) -> ExactDrnsAnalysis:
    """Exact E[Σ_t c_t·V̂_{B(t)}], E_π[Σ_t r_t] and both history laws.

    Events are IID from the DGP with exact recorded propensities. The
    multiplier is a constant or a function of (t, history) where the history
    is the tuple of (context id, action, reward) triples simulated so far.
    """
    if T < 0:
        raise DomainError("T must be non-negative")
    reward_model = reward_model or ConstantRewardModel(dgp.n_actions, 0.0)
    r_hat = np.vstack([reward_model.predict_all(f) for f in dgp.context_features])
    _check_capacity((dgp.n_contexts * dgp.n_actions * dgp.reward_values.shape[2]) ** T)

    def c_of(t: int, history: HistoryKey) -> float:
        return multiplier(t, history) if callable(multiplier) else float(multiplier)

    algorithm: dict[HistoryKey, tuple[float, Any]] = {(): (1.0, target.initial_state())}
    reference: dict[HistoryKey, tuple[float, Any]] = {(): (1.0, target.initial_state())}
    expected, truth = [], []
    masses: list[float] = []
    D = dgp.context_probs

    for t in range(1, T + 1):
        next_algorithm: dict[HistoryKey, tuple[float, Any]] = {}
        for history, (prob, state) in algorithm.items():
            pi = _target_table(dgp, target, state)
            c = c_of(t, history)
            masses.append(bias_mass_exact(dgp, pi, c))
            accept = np.minimum(dgp.mu, c * pi)
            alpha = float(np.sum(D[:, None] * accept))
            if alpha <= 0:
                raise DomainError(f"no event can be accepted at step {t}")

            baseline = (pi * r_hat).sum(axis=1)
            term_mean = 0.0
            for x, a, r, mass in dgp.enumerate_joint():
                weight = pi[x, a] / dgp.mu[x, a]
                term_mean += mass * (baseline[x] + weight * (r - r_hat[x, a]))
            expected.append(prob * c * term_mean / alpha)

            for x, a, r, mass in dgp.enumerate_joint():
                move = mass * accept[x, a] / dgp.mu[x, a] / alpha
                if move <= 0:
                    continue
                key = history + ((x, a, r),)
                new_state = target.observe(state, dgp.context_features[x], a, r)
                previous = next_algorithm.get(key, (0.0, new_state))[0]
                next_algorithm[key] = (previous + prob * move, new_state)
        algorithm = next_algorithm

        next_reference: dict[HistoryKey, tuple[float, Any]] = {}
        for history, (prob, state) in reference.items():
            pi = _target_table(dgp, target, state)
            truth.append(prob * float(np.sum(D[:, None] * pi * dgp.r_star)))
            for x in range(dgp.n_contexts):
                for a in range(dgp.n_actions):
                    for r, rp in zip(dgp.reward_values[x, a], dgp.reward_probs[x, a], strict=True):
                        move = D[x] * pi[x, a] * rp
                        if move <= 0:
                            continue
                        key = history + ((x, a, float(r)),)
                        new_state = target.observe(state, dgp.context_features[x], a, float(r))
                        previous = next_reference.get(key, (0.0, new_state))[0]
                        next_reference[key] = (previous + prob * move, new_state)
        reference = next_reference

    return ExactDrnsAnalysis(
        expected_estimate=math.fsum(expected),
        true_value=math.fsum(truth),
        bias_mass=BiasMass(per_step=masses),
        algorithm_history_law={h: p for h, (p, _) in algorithm.items()},
        target_history_law={h: p for h, (p, _) in reference.items()},
    )


def tv_bound_check(
    dgp: DiscreteDGP,
    target: NonstationaryPolicy,
    eps: float | None,
    T: int,
    multiplier: Multiplier = 1.0,
) -> tuple[float, float]:
    """Total variation between π̂(h_T) and π(h_T), and the bound 2εT/(1 − ε).

    With ``eps=None`` the largest per-step bias mass of the instance is used.
    """
    if T == 0:
        return 0.0, 0.0
    analysis = drns_expectation_exact(dgp, target, multiplier, T)
    eps = analysis.bias_mass.eps if eps is None else eps
    if not 0 <= eps < 1:
        raise DomainError(f"bias mass must be in [0, 1), got {eps}")
    return analysis.total_variation, 2 * eps * T / (1 - eps)
