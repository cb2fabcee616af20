"""JSONL audit trail of CLI runs."""

import json
from datetime import datetime
from pathlib import Path
from uuid import UUID

from .types import RunEvent


class AuditLog:
    """Collects run events and appends them to a JSONL file."""

    def __init__(self, log_file: Path | None = None):
        self.log_file = log_file or Path("audit.jsonl")
        self.events: list[RunEvent] = []

    def log_event(
        self,
        event_type: str,
        run_id: UUID,
        note: str,
        details: dict | None = None,
        stage: str = "unknown",
        event: str = "",
        duration_ms: int | None = None,
        level: str = "info",
    ) -> None:
        self.events.append(
            RunEvent(
                event_type=event_type,
                timestamp=datetime.utcnow(),
                run_id=run_id,
                stage=stage,
                event=event,
                note=note,
                duration_ms=duration_ms,
                level=level,
                details=details or {},
            )
        )

    def save(self) -> Path:
        """Append the collected events; earlier runs' lines are kept."""
        self.log_file.parent.mkdir(parents=True, exist_ok=True)
        with open(self.log_file, "a") as f:
            for event in self.events:
                record = event.model_dump(mode="json")
                record["timestamp"] = event.timestamp.isoformat() + "Z"
                f.write(json.dumps(record, sort_keys=True) + "\n")
        self.events = []
        return self.log_file

    def load(self) -> list[RunEvent]:
        events = []
        if self.log_file.exists():
            with open(self.log_file) as f:
                for line in f:
                    if line.strip():
                        record = json.loads(line)
                        record["timestamp"] = datetime.fromisoformat(
                            record["timestamp"].removesuffix("Z")
                        )
                        events.append(RunEvent(**record))
        return events
