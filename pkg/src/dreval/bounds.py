"""Finite-sample confidence bounds for the DR estimator."""

import math
from typing import Annotated

import numpy as np
from pydantic import BaseModel, Field

from .diagnostics import (
    as_table,
    expect_under_policy,
    max_weight,
    variance_over_contexts,
)
from .errors import DomainError

NonNegative = Annotated[float, Field(ge=0.0, allow_inf_nan=False)]


class AssumptionBounds(BaseModel):
    """Constants bounding the error of r̂ and μ̂ (sup-norm form)."""
    M: NonNegative
    delta_Delta: NonNegative
    delta_rho: NonNegative
    rho_max: NonNegative
    e_rhat: NonNegative
    variance_term: NonNegative

    @classmethod
    def from_dgp(cls, dgp, policy, decomposition) -> "AssumptionBounds":
        """Tightest constants for a known DiscreteDGP and decomposition."""
        nu = as_table(dgp, policy)
        support = (dgp.context_probs[:, None] > 0) & (dgp.mu > 0)
        rho = decomposition.ratio
        delta = decomposition.additive_error
        return cls(
            M=max_weight(dgp, nu, decomposition),
            delta_Delta=expect_under_policy(dgp, nu, np.abs(delta)),
            delta_rho=float(np.abs(1.0 - rho)[support].max(initial=0.0)),
            rho_max=float(rho[support].max(initial=0.0)),
            e_rhat=expect_under_policy(dgp, nu, dgp.reward_variance + delta**2),
            variance_term=variance_over_contexts(dgp, (nu * dgp.r_star).sum(axis=1)),
        )


class MomentBounds(AssumptionBounds):
    """Constants measured in L_p(ν) / L_q(ν) norms with 1/p + 1/q = 1."""
    p: float = Field(ge=1.0)
    q: float = Field(ge=1.0)

    @classmethod
    def from_dgp(cls, dgp, policy, decomposition, p: float = 2.0, q: float = 2.0) -> "MomentBounds":
        check_conjugate(p, q)
        nu = as_table(dgp, policy)
        mass = dgp.context_probs[:, None] * nu
        rho = decomposition.ratio
        delta = decomposition.additive_error
        squared_error = dgp.reward_variance + delta**2
        return cls(
            p=p,
            q=q,
            M=max_weight(dgp, nu, decomposition),
            delta_Delta=_lp_norm(mass, np.abs(delta), q),
            delta_rho=_lp_norm(mass, np.abs(1.0 - rho), p),
            rho_max=_lp_norm(mass, rho, p),
            e_rhat=_lp_norm(mass, squared_error, q),
            variance_term=variance_over_contexts(dgp, (nu * dgp.r_star).sum(axis=1)),
        )


def _lp_norm(mass: np.ndarray, values: np.ndarray, p: float) -> float:
    """‖values‖_{p} under the measure ``mass`` (ess sup for p = ∞)."""
    if math.isinf(p):
        return float(values[mass > 0].max(initial=0.0))
    return float(np.sum(mass * values**p) ** (1.0 / p))


def check_conjugate(p: float, q: float) -> None:
    if p < 1 or q < 1:
        raise DomainError("exponents must be at least 1")
    inverse_sum = (0.0 if math.isinf(p) else 1.0 / p) + (0.0 if math.isinf(q) else 1.0 / q)
    if abs(inverse_sum - 1.0) > 1e-12:
        raise DomainError(f"1/p + 1/q must equal 1, got {inverse_sum}")


def _check_delta(delta: float) -> None:
    if not 0.0 < delta < 1.0:
        raise DomainError(f"confidence level delta must be in (0, 1), got {delta}")


def freedman_half_width(n: int, D: float, V: float, delta: float) -> float:
    """2·max{D·ln(2/δ)/n, sqrt(V·ln(2/δ)/n)} for a mean of n martingale terms.

    ``D`` bounds the range of each term and ``V`` its conditional variance.
    """
    _check_delta(delta)
    if n < 1:
        raise DomainError("n must be positive")
    if D <= 0 or V < 0:
        raise DomainError("range bound must be positive and variance bound non-negative")
    log_term = math.log(2.0 / delta)
    return 2.0 * max(D * log_term / n, math.sqrt(V * log_term / n))


def _bound(bounds: AssumptionBounds, n: int, delta: float) -> float:
    slack = bounds.delta_rho * bounds.delta_Delta
    variance = bounds.variance_term + 2.0 * slack + bounds.M * bounds.rho_max * bounds.e_rhat
    return slack + freedman_half_width(n, 1.0 + bounds.M, variance, delta)


def finite_sample_bound(bounds: AssumptionBounds, n: int, delta: float) -> float:
    """With probability ≥ 1 − δ, |V̂_DR − V| is at most this value."""
    return _bound(bounds, n, delta)


def finite_sample_bound_moments(
    p: float, q: float, bounds: AssumptionBounds, n: int, delta: float
) -> float:
    """Same bound shape with constants measured in conjugate L_p / L_q norms.

    ``bounds`` must have been measured with the same exponents; plain
    AssumptionBounds hold the sup-norm constants, i.e. p = ∞, q = 1.
    """
    check_conjugate(p, q)
    measured = (bounds.p, bounds.q) if isinstance(bounds, MomentBounds) else (math.inf, 1.0)
    if not all(_same_exponent(a, b) for a, b in zip((p, q), measured)):
        raise DomainError(
            f"bounds were measured with (p, q) = {measured}, asked for ({p}, {q})"
        )
    return _bound(bounds, n, delta)


def _same_exponent(a: float, b: float) -> bool:
    if math.isinf(a) or math.isinf(b):
        return a == b
    return abs(a - b) <= 1e-12 * max(1.0, abs(b))
