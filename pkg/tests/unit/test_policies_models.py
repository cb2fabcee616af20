"""Unit tests for target policies and the r̂ / μ̂ models."""

import math

import numpy as np
import pytest

from dreval.errors import DomainError
from dreval.models import (
    ClippedPropensityModel,
    ConstantPropensityModel,
    ConstantRewardModel,
    InfinitePropensityModel,
    LoggedPropensityModel,
    OracleRewardModel,
    TablePropensityModel,
    TableRewardModel,
)
from dreval.policies import (
    ConstantActionPolicy,
    HistoryCallablePolicy,
    MixturePolicy,
    StationaryAsNonstationary,
    TablePolicy,
    UniformPolicy,
    validate_distribution,
)
from dreval.types import Context, Features, LogEvent

X0 = Features.from_mapping({0: 1.0})
X1 = Features.from_mapping({1: 1.0})
INDEX = {X0: 0, X1: 1}


class TestStationaryPolicies:
    def test_uniform(self):
        assert UniformPolicy(4).distribution(X0).tolist() == [0.25] * 4

    def test_constant_action(self):
        policy = ConstantActionPolicy(3, 1)
        assert policy.distribution(X0).tolist() == [0.0, 1.0, 0.0]
        assert policy.is_deterministic
        assert policy.sample(X0, np.random.default_rng(0)) == 1

    def test_constant_action_out_of_range(self):
        with pytest.raises(DomainError):
            ConstantActionPolicy(3, 3)

    def test_table_policy_lookup(self):
        policy = TablePolicy(np.array([[0.5, 0.5], [1.0, 0.0]]), INDEX)
        assert policy.distribution(X1).tolist() == [1.0, 0.0]
        assert not policy.is_deterministic

    def test_table_policy_rejects_unnormalized_rows(self):
        with pytest.raises(DomainError):
            TablePolicy(np.array([[0.5, 0.6], [1.0, 0.0]]), INDEX)

    def test_table_policy_unknown_context(self):
        policy = TablePolicy(np.eye(2), INDEX)
        with pytest.raises(DomainError):
            policy.distribution(Features.from_mapping({5: 1.0}))

    def test_mixture_distribution(self):
        mixture = MixturePolicy([ConstantActionPolicy(2, 0), UniformPolicy(2)], [0.5, 0.5])
        assert mixture.distribution(X0).tolist() == [0.75, 0.25]

    def test_mixture_weights_must_normalize(self):
        with pytest.raises(DomainError):
            MixturePolicy([UniformPolicy(2), UniformPolicy(2)], [0.5, 0.6])

    def test_mixture_components_share_k(self):
        with pytest.raises(DomainError):
            MixturePolicy([UniformPolicy(2), UniformPolicy(3)], [0.5, 0.5])


def test_validate_distribution():
    assert validate_distribution(np.array([0.2, 0.8]), 2).tolist() == [0.2, 0.8]
    with pytest.raises(DomainError):
        validate_distribution(np.array([0.2, 0.8]), 3)
    with pytest.raises(DomainError):
        validate_distribution(np.array([-0.2, 1.2]), 2)


class TestNonstationaryPolicies:
    def test_observe_returns_new_state(self):
        policy = HistoryCallablePolicy(2, lambda x, h: [1.0, 0.0] if not h else [0.0, 1.0])
        h0 = policy.initial_state()
        h1 = policy.observe(h0, X0, 0, 1.0)
        assert h0 == ()
        assert h1 == ((X0, 0, 1.0),)
        assert policy.distribution(X0, h0).tolist() == [1.0, 0.0]
        assert policy.distribution(X0, h1).tolist() == [0.0, 1.0]

    @pytest.mark.parametrize("output", [[0.7, 0.7], [1.2, -0.2], [1.0]])
    def test_callable_output_must_be_a_distribution(self, output):
        policy = HistoryCallablePolicy(2, lambda x, h: output)
        with pytest.raises(DomainError):
            policy.distribution(X0, policy.initial_state())

    def test_stationary_wrapper_ignores_history(self):
        wrapped = StationaryAsNonstationary(ConstantActionPolicy(2, 1))
        state = wrapped.observe(wrapped.initial_state(), X0, 0, 0.0)
        assert state is None
        assert wrapped.distribution(X1, state).tolist() == [0.0, 1.0]


class TestRewardModels:
    def test_predictions_are_clamped(self):
        assert ConstantRewardModel(2, 1.5).predict_all(X0).tolist() == [1.0, 1.0]
        assert ConstantRewardModel(2, -0.5).predict(X0, 1) == 0.0

    def test_policy_value(self):
        model = TableRewardModel(np.array([[0.2, 0.6], [0.0, 1.0]]), INDEX)
        assert model.policy_value(X0, np.array([0.5, 0.5])) == pytest.approx(0.4)

    def test_table_model_unknown_context(self):
        model = TableRewardModel(np.zeros((2, 2)), INDEX)
        with pytest.raises(DomainError):
            model.predict_all(Features.from_mapping({7: 1.0}))

    def test_oracle_fallback(self):
        model = OracleRewardModel(2, {X0: [0.1, 0.9]}, fallback=0.5)
        assert model.predict_all(X0).tolist() == [0.1, 0.9]
        assert model.predict_all(X1).tolist() == [0.5, 0.5]


class TestPropensityModels:
    def test_logged_propensity(self):
        events = [LogEvent(context=Context(features=X0), action=1, outcome=0.0, propensity=0.3)]
        model = LoggedPropensityModel(events)
        assert model.estimate(events[0].context, 1, 0) == 0.3
        with pytest.raises(DomainError):
            model.estimate(events[0].context, 0, 0)

    def test_constant_must_be_positive(self):
        with pytest.raises(DomainError):
            ConstantPropensityModel(0.0)

    def test_infinite(self):
        assert math.isinf(InfinitePropensityModel().estimate(Context(), 0, 0))

    def test_table_scale(self):
        model = TablePropensityModel(np.array([[0.5, 0.5], [0.2, 0.8]]), INDEX, scale=2.0)
        assert model.estimate(Context(features=X1), 0, 0) == 0.4

    def test_clipped_floor(self):
        model = ClippedPropensityModel(ConstantPropensityModel(0.01), M=10.0)
        assert model.estimate(Context(), 0, 0) == 0.1
        assert ClippedPropensityModel(ConstantPropensityModel(0.5), M=10.0).estimate(
            Context(), 0, 0
        ) == 0.5
