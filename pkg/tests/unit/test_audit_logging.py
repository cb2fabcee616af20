"""Tests for the audit trail and structured run logging."""

import json
from uuid import uuid4

import pytest

from dreval.audit import AuditLog
from dreval.logging import RunLogger, TimedOperation, create_run_logger


class TestAuditLog:
    def test_save_appends_and_load_reads_back(self, tmp_path):
        path = tmp_path / "audit.jsonl"
        run_id = uuid4()

        first = AuditLog(path)
        first.log_event("run_start", run_id, "Starting drns", stage="drns", event="start")
        first.save()
        second = AuditLog(path)
        second.log_event(
            "run_success", run_id, "Finished", details={"files": 4}, stage="drns", duration_ms=12
        )
        second.save()

        events = AuditLog(path).load()
        assert [e.event_type for e in events] == ["run_start", "run_success"]
        assert events[1].details == {"files": 4}
        assert events[1].run_id == run_id

    def test_timestamps_are_utc_strings(self, tmp_path):
        log = AuditLog(tmp_path / "audit.jsonl")
        log.log_event("validation_start", uuid4(), "Validating")
        path = log.save()
        record = json.loads(path.read_text().splitlines()[0])
        assert record["timestamp"].endswith("Z")
        assert log.events == []

    def test_load_missing_file(self, tmp_path):
        assert AuditLog(tmp_path / "absent.jsonl").load() == []


class TestRunLogger:
    def test_json_records_carry_run_id(self, tmp_path):
        log_file = tmp_path / "run.log"
        run_id = uuid4()
        logger = RunLogger(log_level="INFO", enable_console=False, log_file=log_file, run_id=run_id)

        logger.run_started("drns", "abc123", 5)

        record = json.loads(log_file.read_text().splitlines()[-1])
        assert record["event"] == "Run started"
        assert record["run_id"] == str(run_id)
        assert record["seed"] == 5
        assert record["mode"] == "drns"

    def test_debug_records_filtered_at_info(self, tmp_path):
        log_file = tmp_path / "run.log"
        logger = RunLogger(log_level="INFO", enable_console=False, log_file=log_file)

        logger.estimate_computed("DR", 0.5, 100)
        logger.replicate_skipped(3, 42, "nothing revealed")

        lines = log_file.read_text().splitlines()
        assert len(lines) == 1
        assert json.loads(lines[0])["reason"] == "nothing revealed"

    def test_factory(self):
        run_id = uuid4()
        logger = create_run_logger(run_id=run_id, log_level="WARNING", enable_console=False)
        assert logger.run_id == run_id
        logger.trajectory_failed("RS", 3, 10, 500)

    @pytest.mark.parametrize("level", ["DEBUG", "INFO", "WARNING", "ERROR"])
    def test_levels(self, level):
        logger = RunLogger(log_level=level, enable_console=True)
        logger.debug("Debug message")
        logger.error("Failure", error=ValueError("bad"), context={"stage": "test"})


class TestTimedOperation:
    def test_records_duration(self):
        logger = RunLogger(enable_console=False)
        with TimedOperation(logger, "replicate", replicate=1) as op:
            pass
        assert op.duration_ms >= 0

    def test_exceptions_propagate(self):
        logger = RunLogger(enable_console=False)
        with pytest.raises(ValueError):
            with TimedOperation(logger, "replicate"):
                raise ValueError("boom")
