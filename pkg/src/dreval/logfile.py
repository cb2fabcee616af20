"""JSON Lines reader and writer for exploration logs.

One object per line: ``{"x": {"3": 0.5}, "a": 1, "r": 0.0, "p": 0.25}``, with an
optional ``{"meta": {"k": K, "mode": "loss"}}`` header as the first line and an
optional ``"h": {"Y": [...], "s": [...]}`` key carrying the hidden payload.
Floats are written with ``repr`` (shortest round-trip form), so reading back
reproduces every number bit for bit.
"""

import json
from collections.abc import Iterable
from pathlib import Path
from typing import Any

from pydantic import ValidationError as PydanticValidationError

from .errors import LogParseError, LogValidationError
from .types import Context, EventLog, Features, HiddenPayload, LogEvent, LogHeader


def event_to_record(event: LogEvent) -> dict[str, Any]:
    record: dict[str, Any] = {
        "x": event.context.features.to_mapping(),
        "a": event.action,
        "r": event.outcome,
        "p": event.propensity,
    }
    hidden = event.context.hidden
    if hidden is not None:
        record["h"] = {"Y": list(hidden.label_set), "s": list(hidden.scores)}
    return record


def record_to_event(record: dict[str, Any]) -> LogEvent:
    hidden = None
    if "h" in record:
        hidden = HiddenPayload(
            label_set=tuple(record["h"]["Y"]), scores=tuple(record["h"].get("s", ()))
        )
    return LogEvent(
        context=Context(features=Features.from_mapping(record["x"]), hidden=hidden),
        action=record["a"],
        outcome=record["r"],
        propensity=record["p"],
    )


def write_log(
    events: Iterable[LogEvent], path: Path, header: LogHeader | None = None
) -> Path:
    """Write events to ``path``, one JSON object per line."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            if header is not None:
                f.write(
                    json.dumps({"meta": {"k": header.k, "mode": header.mode.value}})
                    + "\n"
                )
            for event in events:
                f.write(json.dumps(event_to_record(event)) + "\n")
    except OSError as e:
        raise OSError(f"failed to write log {path}: {e}") from e
    return path


def read_log_with_header(path: Path) -> EventLog:
    """Read a log file, returning its header (if any) and events in file order."""
    path = Path(path)
    header: LogHeader | None = None
    events: list[LogEvent] = []
    try:
        handle = open(path, encoding="utf-8")
    except OSError as e:
        raise OSError(f"failed to read log {path}: {e}") from e

    with handle:
        for line_number, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as e:
                raise LogParseError(f"malformed JSON: {e.msg}", line_number, str(path)) from e
            if not isinstance(record, dict):
                raise LogParseError("expected a JSON object", line_number, str(path))

            if "meta" in record:
                if line_number != 1 or events:
                    raise LogParseError("header allowed on line 1 only", line_number, str(path))
                try:
                    header = LogHeader(**record["meta"])
                except (PydanticValidationError, TypeError) as e:
                    raise LogValidationError(str(e), line_number, str(path)) from e
                continue

            missing = {"x", "a", "r", "p"} - record.keys()
            if missing:
                raise LogParseError(
                    f"missing keys {sorted(missing)}", line_number, str(path)
                )
            try:
                event = record_to_event(record)
            except PydanticValidationError as e:
                raise LogValidationError(
                    "; ".join(err["msg"] for err in e.errors()), line_number, str(path)
                ) from e
            except (TypeError, ValueError, KeyError) as e:
                raise LogParseError(str(e), line_number, str(path)) from e
            if header is not None and event.action >= header.k:
                raise LogValidationError(
                    f"action {event.action} not below K={header.k}", line_number, str(path)
                )
            events.append(event)

    return EventLog(header=header, events=events)


def read_log(path: Path) -> list[LogEvent]:
    """Read the events of a log file in file order."""
    return read_log_with_header(path).events
