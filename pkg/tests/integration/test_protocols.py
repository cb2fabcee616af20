"""Small end-to-end runs of each experiment protocol."""

import math

import pandas as pd
import pytest
from scipy.stats import binomtest

from dreval.config import ExperimentConfig
from dreval.determinism import DeterminismUtils
from dreval.experiments import (
    run_covariate_shift,
    run_drns_sweep,
    run_eval_stationary,
    run_optimize,
)
from dreval.report import load_outputs, write_report

pytestmark = [pytest.mark.integration, pytest.mark.slow]


def _config(**data) -> ExperimentConfig:
    return ExperimentConfig.model_validate(data)


def _eval_config(**overrides) -> ExperimentConfig:
    data = {
        "mode": "eval-stationary",
        "seed": 7,
        "replicates": 5,
        "dataset": {"kind": "synthetic-multiclass", "n": 300, "dimension": 3, "n_actions": 3},
        "dlm": {"restarts": 2, "max_batches": 50},
    }
    data.update(overrides)
    return _config(**data)


def _drns_config(**overrides) -> ExperimentConfig:
    data = {
        "mode": "drns",
        "seed": 42,
        "replicates": 2,
        "dataset": {"kind": "synthetic-multilabel", "n": 600, "dimension": 4, "n_actions": 3},
        "drns": {
            "rhos": [0.0, 0.1],
            "T": 8,
            "init_fraction": 0.1,
            "valid_fraction": 0.2,
            "truth_simulations": 5,
            "retrain_period": 4,
            "epochs": 20,
        },
    }
    data.update(overrides)
    return _config(**data)


def _figure_config(**overrides) -> ExperimentConfig:
    return _eval_config(
        replicates=200,
        dataset={"kind": "synthetic-multiclass", "n": 1200, "dimension": 3, "n_actions": 3},
        **overrides,
    )


def _summary(outputs, method: str):
    return next(s for s in outputs.summaries if s.method == method)


def _standard_error(summary) -> float:
    return summary.std / math.sqrt(summary.n_replicates)


class TestEvalStationary:
    def test_tables_and_summaries(self):
        outputs = run_eval_stationary(_eval_config())
        assert len(outputs.tables["replicates"]) == 5 * 3
        assert [s.method for s in outputs.summaries] == ["DM", "IPS", "DR"]
        assert all(s.n_replicates == 5 for s in outputs.summaries)
        assert 0.0 <= outputs.notes["truth"] <= 1.0
        assert outputs.notes["train_examples"] + outputs.notes["evaluation_examples"] == 300

    def test_oracle_model_leaves_dm_unbiased(self):
        """DM with the exact expected losses returns the expected target loss."""
        outputs = run_eval_stationary(_eval_config(estimators=["DM"], oracle_loss_model=True))
        assert outputs.summaries[0].bias == pytest.approx(0.0, abs=1e-6)
        assert outputs.notes["oracle"] is True

    def test_same_config_same_outputs(self):
        first = run_eval_stationary(_eval_config())
        second = run_eval_stationary(_eval_config())
        assert first.tables == second.tables
        assert first.config_hash == second.config_hash

    def test_workers_do_not_change_results(self):
        serial = run_eval_stationary(_eval_config())
        parallel = run_eval_stationary(_eval_config(workers=2))
        assert serial.tables == parallel.tables
        assert serial.config_hash == parallel.config_hash

    def test_ips_and_dr_are_unbiased_and_dr_is_tighter(self):
        outputs = run_eval_stationary(_figure_config())
        ips, dr = _summary(outputs, "IPS"), _summary(outputs, "DR")
        for summary in (ips, dr):
            assert abs(summary.bias) <= 3 * _standard_error(summary)
        assert dr.rmse < ips.rmse

    def test_constant_loss_model_leaves_dm_biased(self):
        """A near-constant loss model cannot see the target's skill; DR corrects it."""
        outputs = run_eval_stationary(_figure_config(ridge_lambda=1e4))
        dm, dr = _summary(outputs, "DM"), _summary(outputs, "DR")
        assert dm.std == pytest.approx(0.0, abs=1e-12)
        assert abs(dm.bias) > 5 * abs(dr.bias)
        assert abs(dr.bias) <= 3 * _standard_error(dr)

    def test_config_hash_tracks_content(self):
        assert run_eval_stationary(_eval_config()).config_hash != run_eval_stationary(
            _eval_config(seed=8)
        ).config_hash


def test_optimize_tables():
    config = _config(
        mode="optimize",
        seed=11,
        replicates=2,
        dataset={"kind": "synthetic-multiclass", "n": 200, "dimension": 3, "n_actions": 3},
        dlm={"restarts": 2, "max_batches": 30},
    )
    outputs = run_optimize(config)
    rows = outputs.tables["replicates"]
    assert len(rows) == 2 * 2 * 3
    assert {r["feedback"] for r in rows} == {"IPS", "DR", "full"}
    assert all(0.0 <= r["test_error"] <= 1.0 for r in rows)
    assert len(outputs.tables["test_error"]) == 6
    assert all(r["n_replicates"] == 2 for r in outputs.tables["test_error"])


def test_dr_feedback_trains_better_dlm_policies():
    """Paired over 30 replicates, a one-sided sign test favours DR-imputed costs."""
    config = _config(
        mode="optimize",
        seed=13,
        replicates=30,
        dataset={"kind": "synthetic-multiclass", "n": 800, "dimension": 3, "n_actions": 4},
        dlm={"restarts": 2, "max_batches": 50},
        optimize={"learners": ["dlm"], "full_feedback_baseline": False},
    )
    frame = pd.DataFrame(run_optimize(config).tables["replicates"])
    errors = frame.pivot(index="replicate", columns="feedback", values="test_error")
    wins = int((errors["DR"] < errors["IPS"]).sum())
    losses = int((errors["DR"] > errors["IPS"]).sum())
    assert binomtest(wins, wins + losses, 0.5, alternative="greater").pvalue < 0.05


class TestCovariateShift:
    def test_full_reveal_makes_ips_exact(self):
        config = _config(
            mode="covariate-shift",
            seed=3,
            replicates=2,
            dataset={"kind": "synthetic-regression", "n": 300, "dimension": 4},
            shift={"fractions": [1.0], "reveal_probability": 1.0},
        )
        outputs = run_covariate_shift(config)
        ips = next(s for s in outputs.summaries if s.method == "IPS")
        dr = next(s for s in outputs.summaries if s.method == "DR")
        assert ips.rmse == 0.0
        assert dr.rmse == pytest.approx(0.0, abs=1e-12)

    def test_fraction_sweep(self):
        config = _config(
            mode="covariate-shift",
            seed=3,
            replicates=3,
            dataset={"kind": "synthetic-regression", "n": 2000, "dimension": 4},
            shift={"fractions": [0.05, 0.5]},
        )
        outputs = run_covariate_shift(config)
        table = outputs.tables["by_fraction"]
        assert [(r["fraction"], r["method"]) for r in table] == [
            (0.05, "IPS"), (0.05, "DR"), (0.5, "IPS"), (0.5, "DR"),
        ]
        assert 0.0 < outputs.notes["truth"] <= 1.0
        for row in table:
            assert row["n_replicates"] + row["n_failed"] == 3

    def test_dr_rmse_beats_ips_on_most_fractions(self):
        config = _config(
            mode="covariate-shift",
            seed=21,
            replicates=100,
            dataset={"kind": "synthetic-regression", "n": 4000, "dimension": 4},
            shift={"fractions": [0.05, 0.1, 0.2, 0.3, 0.5, 1.0]},
        )
        table = pd.DataFrame(run_covariate_shift(config).tables["by_fraction"])
        rmse = table.pivot(index="fraction", columns="method", values="rmse")
        assert int((rmse["DR"] <= rmse["IPS"]).sum()) >= 4


def test_drns_sweep_methods():
    outputs = run_drns_sweep(_drns_config())
    methods = [s.method for s in outputs.summaries]
    assert methods == ["DM", "RS", "WC", "DR-ns(rho=0)", "DR-ns(rho=0.1)"]
    assert len(outputs.tables["replicates"]) == 2 * len(methods)
    assert 0.0 <= outputs.notes["truth"] <= 1.0
    assert outputs.notes["truth_simulations"] == 5
    for summary in outputs.summaries:
        assert summary.n_replicates + summary.n_failed == 2
    dm = outputs.summaries[0]
    assert not math.isnan(dm.mean_estimate)


def test_drns_sweep_orderings():
    """A learner warm-started on few examples keeps changing inside each trajectory."""
    outputs = run_drns_sweep(
        _drns_config(
            seed=5,
            replicates=50,
            workers=2,
            dataset={"kind": "synthetic-multilabel", "n": 3000, "dimension": 5, "n_actions": 2},
            drns={
                "rhos": [0.0, 0.01, 0.05, 0.1],
                "T": 30,
                "init_fraction": 0.01,
                "valid_fraction": 0.3,
                "truth_simulations": 300,
                "retrain_period": 3,
                "epochs": 20,
            },
        )
    )
    summaries = {s.method: s for s in outputs.summaries}
    dm, rs = summaries["DM"], summaries["RS"]
    assert dm.std == min(s.std for s in outputs.summaries)
    unbiased_regime = ["RS", "WC", "DR-ns(rho=0)", "DR-ns(rho=0.01)", "DR-ns(rho=0.05)"]
    assert all(abs(dm.bias) > abs(summaries[m].bias) for m in unbiased_regime)
    assert abs(rs.bias) <= 3 * rs.std
    assert any(summaries[m].rmse < rs.rmse for m in unbiased_regime[2:])
    # over-acceptance hides the learner's own mistakes from its history
    assert summaries["DR-ns(rho=0.1)"].bias > summaries["DR-ns(rho=0.01)"].bias


def test_rerun_from_recorded_config_is_byte_identical(tmp_path):
    first_dir = tmp_path / "first"
    write_report(run_eval_stationary(_eval_config()), first_dir)

    recorded = load_outputs(first_dir)
    rerun = run_eval_stationary(ExperimentConfig.model_validate(recorded.config))
    second_dir = tmp_path / "second"
    write_report(rerun, second_dir)

    for name in ("replicates.csv", "summary.csv", "config.json", "summary.md"):
        assert (first_dir / name).read_bytes() == (second_dir / name).read_bytes()
    assert rerun.config_hash == DeterminismUtils.config_hash(recorded.config)
