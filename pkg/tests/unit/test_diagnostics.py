"""Unit tests for exact bias and variance diagnostics on enumerable instances."""

import numpy as np
import pytest
from pydantic import ValidationError

from dreval.diagnostics import (
    ErrorDecomposition,
    dm_bias_exact,
    dm_variance,
    dr_bias_exact,
    dr_variance_deterministic_target,
    enumerate_term,
    ips_bias_exact,
    ips_variance_deterministic_target,
    max_weight,
    simulate_estimates,
    term_expectation_exact,
    term_variance_exact,
    term_variance_upper_bound,
)
from dreval.dgp import policy_value_exact
from dreval.errors import DomainError
from dreval.models import TablePropensityModel, TableRewardModel
from dreval.types import Method


def _deterministic_target(dgp):
    table = np.zeros((dgp.n_contexts, dgp.n_actions))
    table[np.arange(dgp.n_contexts), np.arange(dgp.n_contexts) % dgp.n_actions] = 1.0
    return table


def _stochastic_target(dgp):
    table = np.full((dgp.n_contexts, dgp.n_actions), 0.5 / dgp.n_actions)
    table[:, 0] += 0.5
    return table


def _decomposition(dgp, shift=0.15, inflate=1.3):
    """r̂ off by a context-dependent amount and μ̂ inflated by a constant."""
    r_hat = dgp.r_star + shift * np.cos(np.arange(dgp.r_star.size)).reshape(dgp.r_star.shape)
    return ErrorDecomposition.from_tables(dgp, r_hat, dgp.mu * inflate)


class TestErrorDecomposition:
    def test_from_models_with_exact_models(self, small_dgp):
        decomposition = ErrorDecomposition.from_models(
            small_dgp,
            TableRewardModel(small_dgp.r_star, small_dgp.context_index),
            TablePropensityModel(small_dgp.mu, small_dgp.context_index),
        )
        assert np.allclose(decomposition.additive_error, 0.0)
        assert np.allclose(decomposition.ratio, 1.0)

    def test_infinite_estimates_zero_the_ratio(self, small_dgp):
        decomposition = ErrorDecomposition.from_tables(
            small_dgp, small_dgp.r_star, np.full_like(small_dgp.mu, np.inf)
        )
        assert np.all(decomposition.ratio == 0.0)
        assert np.all(decomposition.inverse_mu_hat == 0.0)

    def test_shape_mismatch_rejected(self, small_dgp):
        with pytest.raises(ValidationError):
            ErrorDecomposition(
                additive_error=np.zeros((2, 2)), mu_hat=small_dgp.mu, mu=small_dgp.mu
            )

    def test_non_positive_estimate_rejected(self, small_dgp):
        with pytest.raises(ValidationError):
            ErrorDecomposition.from_tables(small_dgp, small_dgp.r_star, np.zeros_like(small_dgp.mu))


class TestExactMoments:
    @pytest.mark.parametrize("target", [_deterministic_target, _stochastic_target])
    def test_expectation_matches_enumeration(self, small_dgp, target):
        nu = target(small_dgp)
        decomposition = _decomposition(small_dgp)
        values, probs = enumerate_term(small_dgp, nu, decomposition)
        assert probs.sum() == pytest.approx(1.0)
        assert term_expectation_exact(small_dgp, nu, decomposition) == pytest.approx(
            float(np.dot(values, probs)), abs=1e-12
        )

    @pytest.mark.parametrize("target", [_deterministic_target, _stochastic_target])
    def test_variance_matches_enumeration(self, small_dgp, target):
        nu = target(small_dgp)
        decomposition = _decomposition(small_dgp)
        values, probs = enumerate_term(small_dgp, nu, decomposition)
        mean = float(np.dot(values, probs))
        expected = float(np.dot(probs, (values - mean) ** 2))
        assert term_variance_exact(small_dgp, nu, decomposition) == pytest.approx(
            expected, abs=1e-12
        )

    def test_deterministic_variance_matches_general_formula(self, small_dgp):
        nu = _deterministic_target(small_dgp)
        decomposition = _decomposition(small_dgp)
        assert dr_variance_deterministic_target(small_dgp, nu, decomposition) == pytest.approx(
            term_variance_exact(small_dgp, nu, decomposition), abs=1e-12
        )

    def test_ips_variance_is_dr_without_model(self, small_dgp):
        nu = _deterministic_target(small_dgp)
        decomposition = _decomposition(small_dgp)
        assert ips_variance_deterministic_target(small_dgp, nu, decomposition) == pytest.approx(
            term_variance_exact(small_dgp, nu, decomposition.without_reward_model(small_dgp)),
            abs=1e-12,
        )

    def test_variance_formula_needs_deterministic_target(self, small_dgp):
        with pytest.raises(DomainError):
            dr_variance_deterministic_target(
                small_dgp, _stochastic_target(small_dgp), _decomposition(small_dgp)
            )

    def test_upper_bound_with_exact_propensities(self, small_dgp):
        nu = _stochastic_target(small_dgp)
        decomposition = _decomposition(small_dgp, inflate=1.0)
        assert term_variance_upper_bound(small_dgp, nu, decomposition) >= term_variance_exact(
            small_dgp, nu, decomposition
        ) - 1e-12

    def test_dm_variance_is_spread_of_model_value(self, small_dgp):
        nu = _deterministic_target(small_dgp)
        exact = ErrorDecomposition.from_tables(small_dgp, small_dgp.r_star, small_dgp.mu)
        per_context = (nu * small_dgp.r_star).sum(axis=1)
        mean = float(np.dot(small_dgp.context_probs, per_context))
        expected = float(np.dot(small_dgp.context_probs, (per_context - mean) ** 2))
        assert dm_variance(small_dgp, nu, exact) == pytest.approx(expected)


class TestExactBias:
    def test_exact_propensities_remove_dr_bias(self, small_dgp):
        nu = _stochastic_target(small_dgp)
        decomposition = _decomposition(small_dgp, inflate=1.0)
        assert dr_bias_exact(small_dgp, nu, decomposition) == pytest.approx(0.0, abs=1e-15)
        assert ips_bias_exact(small_dgp, nu, decomposition) == pytest.approx(0.0, abs=1e-15)
        assert dm_bias_exact(small_dgp, nu, decomposition) > 0

    def test_exact_reward_model_removes_dr_bias(self, small_dgp):
        nu = _stochastic_target(small_dgp)
        decomposition = ErrorDecomposition.from_tables(
            small_dgp, small_dgp.r_star, small_dgp.mu * 1.7
        )
        assert dr_bias_exact(small_dgp, nu, decomposition) == pytest.approx(0.0, abs=1e-15)
        assert ips_bias_exact(small_dgp, nu, decomposition) > 0

    def test_dr_bias_is_product_of_errors(self, small_dgp):
        """|E_ν[(1 − ρ)Δ]| is at most the largest |1 − ρ| times E_ν|Δ|."""
        nu = _stochastic_target(small_dgp)
        decomposition = _decomposition(small_dgp, inflate=1.3)
        gap = float(np.max(np.abs(1.0 - decomposition.ratio)))
        mass = small_dgp.context_probs[:, None] * nu
        delta = float(np.sum(mass * np.abs(decomposition.additive_error)))
        assert dr_bias_exact(small_dgp, nu, decomposition) <= gap * delta + 1e-15

    def test_bias_equals_expectation_gap(self, small_dgp):
        nu = _stochastic_target(small_dgp)
        decomposition = _decomposition(small_dgp)
        gap = abs(
            term_expectation_exact(small_dgp, nu, decomposition)
            - policy_value_exact(small_dgp, nu)
        )
        assert dr_bias_exact(small_dgp, nu, decomposition) == pytest.approx(gap, abs=1e-12)

    def test_nonstationary_exploration_has_no_closed_form(self, small_dgp):
        with pytest.raises(DomainError):
            dr_bias_exact(
                small_dgp, _stochastic_target(small_dgp), _decomposition(small_dgp), stationary=False
            )


def test_max_weight(tiny_dgp):
    nu = np.array([[0.0, 1.0], [1.0, 0.0]])
    decomposition = ErrorDecomposition.from_tables(tiny_dgp, tiny_dgp.r_star, tiny_dgp.mu)
    assert max_weight(tiny_dgp, nu, decomposition) == pytest.approx(1.0 / 0.2)


class TestSimulation:
    def test_same_seed_same_draws(self, small_dgp):
        nu = _stochastic_target(small_dgp)
        decomposition = _decomposition(small_dgp)
        first = simulate_estimates(small_dgp, nu, decomposition, n=20, replicates=10, seed=4)
        second = simulate_estimates(small_dgp, nu, decomposition, n=20, replicates=10, seed=4)
        for method in Method:
            assert np.array_equal(first[method], second[method])

    @pytest.mark.slow
    def test_mean_matches_exact_expectation(self, small_dgp):
        nu = _stochastic_target(small_dgp)
        decomposition = _decomposition(small_dgp)
        draws = simulate_estimates(small_dgp, nu, decomposition, n=10, replicates=4000, seed=8)
        expected = term_expectation_exact(small_dgp, nu, decomposition)
        assert abs(float(draws[Method.DR].mean()) - expected) < 0.05

    @pytest.mark.slow
    def test_variance_matches_exact_variance(self, small_dgp):
        nu = _deterministic_target(small_dgp)
        decomposition = _decomposition(small_dgp)
        draws = simulate_estimates(small_dgp, nu, decomposition, n=1, replicates=100000, seed=9)
        exact = term_variance_exact(small_dgp, nu, decomposition)
        assert float(draws[Method.DR].var()) == pytest.approx(exact, rel=0.15)

    @pytest.mark.slow
    def test_nonstationary_schedule_keeps_dr_unbiased_with_exact_ratio(self, small_dgp):
        """With ρ_k fixed at 1 the DR mean still matches the target value."""
        nu = _stochastic_target(small_dgp)
        decomposition = _decomposition(small_dgp, inflate=1.0)
        n = 6
        uniform = np.full_like(small_dgp.mu, 1.0 / small_dgp.n_actions)
        schedule = np.stack(
            [small_dgp.mu if k % 2 == 0 else uniform for k in range(n)]
        )
        draws = simulate_estimates(
            small_dgp, nu, decomposition, n=n, replicates=20000, seed=2, mu_schedule=schedule
        )
        assert abs(float(draws[Method.DR].mean()) - policy_value_exact(small_dgp, nu)) < 0.05

    def test_rejects_empty_runs(self, small_dgp):
        with pytest.raises(DomainError):
            simulate_estimates(
                small_dgp, _stochastic_target(small_dgp), _decomposition(small_dgp), 0, 5, 1
            )
