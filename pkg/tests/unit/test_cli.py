"""Unit tests for CLI module."""

import json

import yaml
from click.testing import CliRunner

from dreval.audit import AuditLog
from dreval.cli import AUDIT_FILE, _overrides, main


def test_cli_help():
    runner = CliRunner()
    result = runner.invoke(main, ["--help"])
    assert result.exit_code == 0
    assert "doubly robust off-policy evaluation" in result.output
    for command in ("validate", "gen", "eval", "optimize", "shift", "drns", "report"):
        assert command in result.output


def test_run_command_help():
    runner = CliRunner()
    result = runner.invoke(main, ["drns", "--help"])
    assert result.exit_code == 0
    assert "--set" in result.output
    assert "--workers" in result.output


def test_flag_overrides_follow_set_overrides(tmp_path):
    overrides = _overrides(("seed=1",), 5, None, tmp_path / "o", None)
    assert overrides[0] == "seed=1"
    assert overrides[1] == "seed=5"
    assert yaml.safe_load(overrides[2].split("=", 1)[1]) == str(tmp_path / "o")


def test_validate_with_valid_config(tmp_path):
    config_file = tmp_path / "config.yaml"
    config_file.write_text(yaml.safe_dump({"mode": "optimize", "seed": 3}))

    result = CliRunner().invoke(main, ["validate", str(config_file)])

    assert result.exit_code == 0
    assert "PASS: Validation passed" in result.output
    events = AuditLog(tmp_path / AUDIT_FILE).load()
    assert [e.event_type for e in events] == ["validation_start", "validation_success"]


def test_validate_with_invalid_config(tmp_path):
    config_file = tmp_path / "config.yaml"
    config_file.write_text(yaml.safe_dump({"mode": "optimize", "seed": -3}))

    result = CliRunner().invoke(main, ["validate", str(config_file)])

    assert result.exit_code == 2
    assert "FAIL: Validation failed:" in result.output
    assert "/seed" in result.output


def test_validate_override_can_fix_config(tmp_path):
    config_file = tmp_path / "config.json"
    config_file.write_text(json.dumps({"mode": "optimize", "seed": -3}))

    result = CliRunner().invoke(main, ["validate", str(config_file), "--set", "seed=3"])

    assert result.exit_code == 0


def test_validate_missing_file(tmp_path):
    result = CliRunner().invoke(main, ["validate", str(tmp_path / "absent.yaml")])
    assert result.exit_code == 2
    assert "File not found" in result.output
