"""Unit tests for finite-sample confidence bounds."""

import math

import numpy as np
import pytest
from pydantic import ValidationError

from dreval.bounds import (
    AssumptionBounds,
    MomentBounds,
    check_conjugate,
    finite_sample_bound,
    finite_sample_bound_moments,
    freedman_half_width,
)
from dreval.dgp import policy_value_exact
from dreval.diagnostics import ErrorDecomposition, simulate_estimates
from dreval.errors import DomainError
from dreval.types import Method


def _uniform(dgp):
    return np.full((dgp.n_contexts, dgp.n_actions), 1.0 / dgp.n_actions)


def test_freedman_half_width_formula():
    log_term = math.log(2.0 / 0.05)
    expected = 2.0 * max(2.0 * log_term / 100, math.sqrt(0.5 * log_term / 100))
    assert freedman_half_width(100, 2.0, 0.5, 0.05) == pytest.approx(expected)


def test_freedman_half_width_shrinks_with_n():
    widths = [freedman_half_width(n, 2.0, 0.5, 0.05) for n in (10, 100, 1000, 10000)]
    assert widths == sorted(widths, reverse=True)


@pytest.mark.parametrize(
    ("n", "D", "V", "delta"),
    [(0, 1.0, 1.0, 0.05), (10, 0.0, 1.0, 0.05), (10, 1.0, -1.0, 0.05), (10, 1.0, 1.0, 0.0), (10, 1.0, 1.0, 1.0)],
)
def test_freedman_half_width_domain(n, D, V, delta):
    with pytest.raises(DomainError):
        freedman_half_width(n, D, V, delta)


class TestAssumptionBounds:
    def test_exact_models_have_no_slack(self, small_dgp):
        nu = _uniform(small_dgp)
        decomposition = ErrorDecomposition.from_tables(small_dgp, small_dgp.r_star, small_dgp.mu)
        bounds = AssumptionBounds.from_dgp(small_dgp, nu, decomposition)
        assert bounds.delta_Delta == 0.0
        assert bounds.delta_rho == pytest.approx(0.0, abs=1e-15)
        assert bounds.rho_max == pytest.approx(1.0)
        assert bounds.M == pytest.approx(float(np.max(nu / small_dgp.mu)))

    def test_negative_constants_rejected(self):
        with pytest.raises(ValidationError):
            AssumptionBounds(
                M=-1.0, delta_Delta=0.0, delta_rho=0.0, rho_max=1.0, e_rhat=0.0, variance_term=0.0
            )

    def test_slack_enters_the_bound(self):
        tight = AssumptionBounds(
            M=2.0, delta_Delta=0.0, delta_rho=0.0, rho_max=1.0, e_rhat=0.1, variance_term=0.1
        )
        loose = tight.model_copy(update={"delta_Delta": 0.2, "delta_rho": 0.5})
        assert finite_sample_bound(loose, 1000, 0.05) > finite_sample_bound(tight, 1000, 0.05) + 0.1 - 1e-12

    @pytest.mark.slow
    def test_bound_covers_dr_error(self, small_dgp):
        """The half-width holds in at least a 1 − δ share of 1000 replicates."""
        nu = _uniform(small_dgp)
        r_hat = np.clip(small_dgp.r_star + 0.1, 0.0, 1.0)
        decomposition = ErrorDecomposition.from_tables(small_dgp, r_hat, small_dgp.mu * 1.2)
        bounds = AssumptionBounds.from_dgp(small_dgp, nu, decomposition)
        n, delta = 200, 0.05
        width = finite_sample_bound(bounds, n, delta)
        draws = simulate_estimates(small_dgp, nu, decomposition, n=n, replicates=1000, seed=6)
        truth = policy_value_exact(small_dgp, nu)
        covered = np.mean(np.abs(draws[Method.DR] - truth) <= width)
        assert covered >= 1 - delta


class TestMomentBounds:
    def test_conjugate_exponents(self):
        check_conjugate(2.0, 2.0)
        check_conjugate(1.0, math.inf)
        with pytest.raises(DomainError):
            check_conjugate(2.0, 3.0)
        with pytest.raises(DomainError):
            check_conjugate(0.5, 2.0)

    def test_sup_norm_limit_matches_assumption_bounds(self, small_dgp):
        """With p = ∞ the ρ constants are the sup-norm ones."""
        nu = _uniform(small_dgp)
        decomposition = ErrorDecomposition.from_tables(
            small_dgp, np.clip(small_dgp.r_star + 0.05, 0, 1), small_dgp.mu * 1.5
        )
        sup = AssumptionBounds.from_dgp(small_dgp, nu, decomposition)
        moments = MomentBounds.from_dgp(small_dgp, nu, decomposition, p=math.inf, q=1.0)
        assert moments.delta_rho == pytest.approx(sup.delta_rho)
        assert moments.rho_max == pytest.approx(sup.rho_max)
        assert moments.delta_Delta == pytest.approx(sup.delta_Delta)

    def test_moment_bound_checks_exponents(self, small_dgp):
        nu = _uniform(small_dgp)
        decomposition = ErrorDecomposition.from_tables(small_dgp, small_dgp.r_star, small_dgp.mu)
        bounds = MomentBounds.from_dgp(small_dgp, nu, decomposition)
        assert finite_sample_bound_moments(2.0, 2.0, bounds, 500, 0.05) > 0
        with pytest.raises(DomainError):
            finite_sample_bound_moments(3.0, 2.0, bounds, 500, 0.05)

    def test_exponents_must_match_the_measured_bounds(self, small_dgp):
        nu = _uniform(small_dgp)
        decomposition = ErrorDecomposition.from_tables(small_dgp, small_dgp.r_star, small_dgp.mu * 1.5)
        squared = MomentBounds.from_dgp(small_dgp, nu, decomposition, p=2.0, q=2.0)
        with pytest.raises(DomainError, match="measured"):
            finite_sample_bound_moments(math.inf, 1.0, squared, 500, 0.05)

        sup = AssumptionBounds.from_dgp(small_dgp, nu, decomposition)
        assert finite_sample_bound_moments(math.inf, 1.0, sup, 500, 0.05) == finite_sample_bound(sup, 500, 0.05)
        with pytest.raises(DomainError, match="measured"):
            finite_sample_bound_moments(2.0, 2.0, sup, 500, 0.05)
