"""Unit tests for the DrevalApp facade."""

import pytest

from dreval.app import DrevalApp
from dreval.config import ExperimentConfig
from dreval.logfile import read_log_with_header
from dreval.logging import RunLogger
from dreval.types import OutcomeMode


@pytest.fixture
def app():
    return DrevalApp()


def _config(mode, dataset, **extra):
    return ExperimentConfig.model_validate({"mode": mode, "seed": 2, "dataset": dataset, **extra})


class TestGenerateLog:
    def test_uniform_logger_for_multiclass_modes(self, app):
        log = app.generate_log(
            _config("optimize", {"kind": "synthetic-multiclass", "n": 50, "n_actions": 5})
        )
        assert log.header.k == 5
        assert log.header.mode is OutcomeMode.LOSS
        assert {e.propensity for e in log.events} == {0.2}

    def test_biased_logger_for_drns(self, app):
        log = app.generate_log(
            _config("drns", {"kind": "synthetic-multilabel", "n": 40, "n_actions": 3})
        )
        assert len(log.events) == 40
        assert all(e.context.hidden is not None for e in log.events)

    def test_reveal_logger_for_shift(self, app):
        log = app.generate_log(
            _config("covariate-shift", {"kind": "synthetic-regression", "n": 60})
        )
        assert log.header.k == 2
        assert log.header.mode is OutcomeMode.REWARD
        assert {e.action for e in log.events} <= {0, 1}

    def test_written_log_reads_back(self, app, tmp_path):
        config = _config("eval-stationary", {"kind": "synthetic-multiclass", "n": 30})
        path = tmp_path / "log.jsonl"
        written = app.write_generated_log(config, path)
        assert read_log_with_header(path) == written


def test_validate_delegates_to_schema(app):
    assert app.validate({"mode": "drns"}).ok
    assert not app.validate({"mode": "drns", "workers": 0}).ok


@pytest.mark.slow
def test_run_and_report_with_logger(app, tmp_path):
    config = _config(
        "eval-stationary",
        {"kind": "synthetic-multiclass", "n": 120, "dimension": 3, "n_actions": 3},
        replicates=2,
        out=str(tmp_path / "out"),
        dlm={"restarts": 1, "max_batches": 20},
    )
    logger = RunLogger(log_level="INFO", enable_console=False, log_file=tmp_path / "run.log")
    outputs, manifest = app.run_and_report(config, logger)
    assert outputs.mode == "eval-stationary"
    assert (tmp_path / "out" / "manifest.json").exists()
    assert manifest.verify_manifest_integrity()["integrity_ok"]
    assert "Run completed" in (tmp_path / "run.log").read_text()
