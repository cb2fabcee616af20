"""Exact single-term analysis of the DR estimator on a DiscreteDGP.

All evaluators take the target policy either as a ``StationaryPolicy`` or as
a (contexts x actions) table and an ``ErrorDecomposition`` describing how far
r̂ and μ̂ are from the truth. Expectations E_ν[f] are taken over
x ~ D, a ~ ν(·|x).
"""

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from .dgp import DiscreteDGP
from .errors import DomainError
from .models import PropensityModel, RewardModel
from .policies import StationaryPolicy
from .types import Method

PolicyLike = StationaryPolicy | np.ndarray


class ErrorDecomposition(BaseModel):
    """Δ = r̂ − r* and the propensity estimate μ̂ (possibly +∞) per (x, a)."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    additive_error: np.ndarray
    mu_hat: np.ndarray
    mu: np.ndarray

    @model_validator(mode="after")
    def _check(self) -> "ErrorDecomposition":
        if self.additive_error.shape != self.mu_hat.shape or self.mu.shape != self.mu_hat.shape:
            raise ValueError("Δ, μ and μ̂ tables must share a shape")
        if np.any(np.abs(self.additive_error) > 1.0 + 1e-12):
            raise ValueError("additive error must lie in [-1, 1]")
        if np.any(np.isnan(self.mu_hat)) or np.any(self.mu_hat <= 0):
            raise ValueError("propensity estimates must be positive or +inf")
        return self

    @classmethod
    def from_tables(
        cls, dgp: DiscreteDGP, r_hat: np.ndarray, mu_hat: np.ndarray
    ) -> "ErrorDecomposition":
        r_hat = np.clip(np.asarray(r_hat, dtype=float), 0.0, 1.0)
        return cls(
            additive_error=r_hat - dgp.r_star,
            mu_hat=np.asarray(mu_hat, dtype=float),
            mu=dgp.mu,
        )

    @classmethod
    def from_models(
        cls,
        dgp: DiscreteDGP,
        reward_model: RewardModel,
        propensity_model: PropensityModel,
    ) -> "ErrorDecomposition":
        r_hat = np.vstack([reward_model.predict_all(f) for f in dgp.context_features])
        mu_hat = np.array(
            [
                [
                    propensity_model.estimate(dgp.context(x), a, 0)
                    for a in range(dgp.n_actions)
                ]
                for x in range(dgp.n_contexts)
            ]
        )
        return cls.from_tables(dgp, r_hat, mu_hat)

    @property
    def inverse_mu_hat(self) -> np.ndarray:
        """1/μ̂, exactly 0 where μ̂ = +∞."""
        with np.errstate(divide="ignore"):
            return np.where(np.isinf(self.mu_hat), 0.0, 1.0 / self.mu_hat)

    @property
    def ratio(self) -> np.ndarray:
        """ρ = μ/μ̂ (0 where μ̂ = +∞)."""
        return self.mu * self.inverse_mu_hat

    def r_hat(self, dgp: DiscreteDGP) -> np.ndarray:
        return dgp.r_star + self.additive_error

    def without_reward_model(self, dgp: DiscreteDGP) -> "ErrorDecomposition":
        """Same μ̂ with r̂ ≡ 0, the decomposition under which DR is IPS."""
        return ErrorDecomposition(additive_error=-dgp.r_star, mu_hat=self.mu_hat, mu=self.mu)


def as_table(dgp: DiscreteDGP, policy: PolicyLike) -> np.ndarray:
    return policy if isinstance(policy, np.ndarray) else dgp.policy_table(policy)


def expect_under_policy(dgp: DiscreteDGP, nu: np.ndarray, values: np.ndarray) -> float:
    """E_{x~D, a~ν}[values(x, a)]."""
    return float(np.sum(dgp.context_probs[:, None] * nu * values))


def variance_over_contexts(dgp: DiscreteDGP, per_context: np.ndarray) -> float:
    mean = float(np.dot(dgp.context_probs, per_context))
    return float(np.dot(dgp.context_probs, (per_context - mean) ** 2))


def enumerate_term(
    dgp: DiscreteDGP, policy: PolicyLike, decomposition: ErrorDecomposition
) -> tuple[np.ndarray, np.ndarray]:
    """Values and probabilities of V̂_k over the logging law of (x, a, r)."""
    nu = as_table(dgp, policy)
    r_hat = decomposition.r_hat(dgp)
    baseline = (nu * r_hat).sum(axis=1)
    weight = nu * decomposition.inverse_mu_hat
    values, probs = [], []
    for x, a, r, mass in dgp.enumerate_joint():
        values.append(baseline[x] + weight[x, a] * (r - r_hat[x, a]))
        probs.append(mass)
    return np.asarray(values), np.asarray(probs)


def term_expectation_exact(
    dgp: DiscreteDGP, policy: PolicyLike, decomposition: ErrorDecomposition
) -> float:
    """E[V̂_k] = E_ν[r* + (1 − ρ)Δ]."""
    nu = as_table(dgp, policy)
    inner = dgp.r_star + (1.0 - decomposition.ratio) * decomposition.additive_error
    return expect_under_policy(dgp, nu, inner)


def term_variance_exact(
    dgp: DiscreteDGP, policy: PolicyLike, decomposition: ErrorDecomposition
) -> float:
    """Four-term decomposition of Var[V̂_k]."""
    nu = as_table(dgp, policy)
    delta = decomposition.additive_error
    rho = decomposition.ratio
    weight = nu * decomposition.inverse_mu_hat

    conditional_mean = (nu * (dgp.r_star + (1.0 - rho) * delta)).sum(axis=1)
    spread = variance_over_contexts(dgp, conditional_mean)
    shrink = float(np.dot(dgp.context_probs, (nu * rho * delta).sum(axis=1) ** 2))
    reward_noise = expect_under_policy(dgp, nu, weight * rho * dgp.reward_variance)
    model_noise = expect_under_policy(dgp, nu, weight * rho * delta**2)
    return spread - shrink + reward_noise + model_noise


def max_weight(
    dgp: DiscreteDGP, policy: PolicyLike, decomposition: ErrorDecomposition
) -> float:
    """Smallest M with ν/μ̂ ≤ M on every (x, a) the logger can produce."""
    nu = as_table(dgp, policy)
    support = (dgp.context_probs[:, None] > 0) & (dgp.mu > 0)
    weights = nu * decomposition.inverse_mu_hat
    return float(weights[support].max(initial=0.0))


def term_variance_upper_bound(
    dgp: DiscreteDGP,
    policy: PolicyLike,
    decomposition: ErrorDecomposition,
    M: float | None = None,
) -> float:
    """Var_x[r*(x,ν)] + 2E_ν|(1−ρ)Δ| + M·E_ν[ρ·E_r(r − r̂)²]."""
    nu = as_table(dgp, policy)
    if M is None:
        M = max_weight(dgp, policy, decomposition)
    delta = decomposition.additive_error
    rho = decomposition.ratio
    value_spread = variance_over_contexts(dgp, (nu * dgp.r_star).sum(axis=1))
    cross = 2.0 * expect_under_policy(dgp, nu, np.abs((1.0 - rho) * delta))
    squared_error = dgp.reward_variance + delta**2
    return value_spread + cross + M * expect_under_policy(dgp, nu, rho * squared_error)


def _require_stationary(stationary: bool) -> None:
    if not stationary:
        raise DomainError(
            "closed-form bias needs stationary exploration; use simulate_estimates"
        )


def dr_bias_exact(
    dgp: DiscreteDGP,
    policy: PolicyLike,
    decomposition: ErrorDecomposition,
    stationary: bool = True,
) -> float:
    """|E_ν[(1 − ρ)Δ]|."""
    _require_stationary(stationary)
    nu = as_table(dgp, policy)
    return abs(
        expect_under_policy(dgp, nu, (1.0 - decomposition.ratio) * decomposition.additive_error)
    )


def dm_bias_exact(
    dgp: DiscreteDGP, policy: PolicyLike, decomposition: ErrorDecomposition
) -> float:
    """|E_ν[Δ]|."""
    return abs(expect_under_policy(dgp, as_table(dgp, policy), decomposition.additive_error))


def ips_bias_exact(
    dgp: DiscreteDGP, policy: PolicyLike, decomposition: ErrorDecomposition
) -> float:
    """|E_ν[r*(1 − ρ)]|."""
    nu = as_table(dgp, policy)
    return abs(expect_under_policy(dgp, nu, dgp.r_star * (1.0 - decomposition.ratio)))


def _deterministic_table(dgp: DiscreteDGP, policy: PolicyLike) -> np.ndarray:
    nu = as_table(dgp, policy)
    reachable = dgp.context_probs > 0
    if not np.all(np.isin(nu[reachable], (0.0, 1.0))):
        raise DomainError("variance formula needs a deterministic target policy")
    return nu


def dr_variance_deterministic_target(
    dgp: DiscreteDGP, policy: PolicyLike, decomposition: ErrorDecomposition
) -> float:
    """Per-sample variance of DR for a deterministic target (n·Var[V̂_DR])."""
    nu = _deterministic_table(dgp, policy)
    delta = decomposition.additive_error
    rho = decomposition.ratio
    inverse = decomposition.inverse_mu_hat

    centre = dgp.r_star + (1.0 - rho) * delta
    mean = expect_under_policy(dgp, nu, centre)
    spread = expect_under_policy(dgp, nu, (centre - mean) ** 2)
    reward_noise = expect_under_policy(dgp, nu, inverse * rho * dgp.reward_variance)
    model_noise = expect_under_policy(dgp, nu, (1.0 - dgp.mu) * inverse * rho * delta**2)
    return spread + reward_noise + model_noise


def ips_variance_deterministic_target(
    dgp: DiscreteDGP, policy: PolicyLike, decomposition: ErrorDecomposition
) -> float:
    """IPS counterpart: the DR expression with r̂ ≡ 0."""
    return dr_variance_deterministic_target(
        dgp, policy, decomposition.without_reward_model(dgp)
    )


def dm_variance(
    dgp: DiscreteDGP, policy: PolicyLike, decomposition: ErrorDecomposition
) -> float:
    """Per-sample variance of DM: Var_x[r̂(x, ν)]."""
    nu = as_table(dgp, policy)
    return variance_over_contexts(dgp, (nu * decomposition.r_hat(dgp)).sum(axis=1))


def simulate_estimates(
    dgp: DiscreteDGP,
    policy: PolicyLike,
    decomposition: ErrorDecomposition,
    n: int,
    replicates: int,
    seed: int,
    mu_schedule: np.ndarray | None = None,
) -> dict[Method, np.ndarray]:
    """Monte Carlo replicates of DM, IPS and DR on logs of size ``n``.

    ``mu_schedule`` optionally gives a nonstationary logger as an
    (n x contexts x actions) array; μ̂ is then taken as ``decomposition.mu_hat``
    scaled by μ_k/μ_1 at each position so that ρ_k stays fixed.
    """
    if n < 1 or replicates < 1:
        raise DomainError("n and replicates must be positive")
    rng = np.random.default_rng(seed)
    nu = as_table(dgp, policy)
    r_hat = decomposition.r_hat(dgp)
    baseline = (nu * r_hat).sum(axis=1)
    total = n * replicates

    if mu_schedule is None:
        xs, actions, rewards, _ = dgp.sample(total, rng)
        inverse = decomposition.inverse_mu_hat[xs, actions]
    else:
        positions = np.tile(np.arange(n), replicates)
        xs = rng.choice(dgp.n_contexts, size=total, p=dgp.context_probs)
        step_mu = mu_schedule[positions, xs]
        cum = np.cumsum(step_mu, axis=1)
        actions = np.minimum((rng.random(total)[:, None] > cum).sum(axis=1), dgp.n_actions - 1)
        cum_r = np.cumsum(dgp.reward_probs[xs, actions], axis=1)
        slots = np.minimum(
            (rng.random(total)[:, None] > cum_r).sum(axis=1), dgp.reward_values.shape[2] - 1
        )
        rewards = dgp.reward_values[xs, actions, slots]
        scale = step_mu[np.arange(total), actions] / dgp.mu[xs, actions]
        inverse = decomposition.inverse_mu_hat[xs, actions] / scale

    weight = nu[xs, actions] * inverse
    dm_terms = baseline[xs]
    ips_terms = weight * rewards
    dr_terms = dm_terms + weight * (rewards - r_hat[xs, actions])
    return {
        Method.DM: dm_terms.reshape(replicates, n).mean(axis=1),
        Method.IPS: ips_terms.reshape(replicates, n).mean(axis=1),
        Method.DR: dr_terms.reshape(replicates, n).mean(axis=1),
    }
