"""Unit tests for the JSON Lines log reader and writer."""

import json

import pytest

from dreval.errors import LogParseError, LogValidationError
from dreval.logfile import read_log, read_log_with_header, write_log
from dreval.types import Context, Features, HiddenPayload, LogEvent, LogHeader, OutcomeMode


def _events():
    return [
        LogEvent(
            context=Context(features=Features.from_mapping({0: 0.1 + 0.2, 3: 1e-17})),
            action=1,
            outcome=1.0 / 3.0,
            propensity=0.1 + 0.7,
        ),
        LogEvent(
            context=Context(
                features=Features.from_mapping({2: -1.5}),
                hidden=HiddenPayload(label_set=(0, 2), scores=(0.25, 0.5, 0.75)),
            ),
            action=2,
            outcome=0.0,
            propensity=0.4,
        ),
    ]


def _write_lines(path, lines):
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def test_written_log_reads_back_exactly(tmp_path):
    """Every float survives the trip bit for bit, header and payload included."""
    path = write_log(_events(), tmp_path / "log.jsonl", LogHeader(k=3, mode=OutcomeMode.LOSS))
    log = read_log_with_header(path)
    assert log.header == LogHeader(k=3, mode=OutcomeMode.LOSS)
    assert log.events == _events()


def test_header_is_first_line(tmp_path):
    path = write_log(_events(), tmp_path / "log.jsonl", LogHeader(k=3))
    first = json.loads(path.read_text().splitlines()[0])
    assert first == {"meta": {"k": 3, "mode": "reward"}}


def test_log_without_header(tmp_path):
    path = write_log(_events()[:1], tmp_path / "log.jsonl")
    log = read_log_with_header(path)
    assert log.header is None
    assert len(read_log(path)) == 1


def test_blank_lines_skipped(tmp_path):
    path = _write_lines(
        tmp_path / "log.jsonl",
        ['{"x": {}, "a": 0, "r": 1.0, "p": 0.5}', "", '{"x": {"1": 2.0}, "a": 1, "r": 0.0, "p": 0.5}'],
    )
    assert [e.action for e in read_log(path)] == [0, 1]


def test_malformed_json_reports_line(tmp_path):
    path = _write_lines(tmp_path / "log.jsonl", ['{"x": {}, "a": 0, "r": 1.0, "p": 0.5}', "{not json"])
    with pytest.raises(LogParseError) as exc_info:
        read_log(path)
    assert exc_info.value.line_number == 2
    assert str(path) in str(exc_info.value)


def test_missing_keys(tmp_path):
    path = _write_lines(tmp_path / "log.jsonl", ['{"x": {}, "a": 0, "r": 1.0}'])
    with pytest.raises(LogParseError, match="missing keys"):
        read_log(path)


def test_header_after_first_line_rejected(tmp_path):
    path = _write_lines(
        tmp_path / "log.jsonl",
        ['{"x": {}, "a": 0, "r": 1.0, "p": 0.5}', '{"meta": {"k": 2}}'],
    )
    with pytest.raises(LogParseError, match="line 1 only"):
        read_log(path)


def test_zero_propensity_is_a_validation_error(tmp_path):
    path = _write_lines(tmp_path / "log.jsonl", ['{"x": {}, "a": 0, "r": 1.0, "p": 0.0}'])
    with pytest.raises(LogValidationError) as exc_info:
        read_log(path)
    assert exc_info.value.line_number == 1
    assert exc_info.value.exit_code == 2


def test_action_beyond_header_k(tmp_path):
    path = _write_lines(
        tmp_path / "log.jsonl",
        ['{"meta": {"k": 2, "mode": "loss"}}', '{"x": {}, "a": 2, "r": 1.0, "p": 0.5}'],
    )
    with pytest.raises(LogValidationError, match="K=2"):
        read_log(path)


def test_missing_file_is_os_error(tmp_path):
    with pytest.raises(OSError):
        read_log(tmp_path / "absent.jsonl")
