"""Structured logging for experiment runs."""

import logging
import sys
from datetime import datetime
from pathlib import Path
from typing import Any
from uuid import UUID

import structlog


class RunLogger:
    """Structured logger for estimation runs with configurable verbosity."""

    def __init__(
        self,
        log_level: str = "INFO",
        enable_console: bool = True,
        log_file: Path | None = None,
        run_id: UUID | None = None,
    ):
        """Initialize the run logger.

        Args:
            log_level: Logging level (DEBUG, INFO, WARNING, ERROR)
            enable_console: Render human-readable lines instead of JSON
            log_file: Optional file receiving a copy of every record
            run_id: Optional run ID added to every record
        """
        self.run_id = run_id
        self.log_file = log_file
        self._configure_logging(log_level, enable_console, log_file)
        self.logger = structlog.get_logger("dreval")

    def _configure_logging(
        self, log_level: str, enable_console: bool, log_file: Path | None
    ) -> None:
        level = getattr(logging, log_level.upper())
        handlers: list[logging.Handler] = [logging.StreamHandler(sys.stderr)]
        if log_file:
            log_file.parent.mkdir(parents=True, exist_ok=True)
            handlers.append(logging.FileHandler(str(log_file)))
        logging.basicConfig(format="%(message)s", level=level, handlers=handlers, force=True)

        processors: list[Any] = [
            structlog.processors.TimeStamper(fmt="iso"),
            structlog.stdlib.add_log_level,
            structlog.stdlib.add_logger_name,
            self._add_run_id,
            lambda _, __, event_dict: {
                k: v for k, v in event_dict.items() if v is not None
            },
        ]

        if log_level.upper() == "DEBUG":
            processors.append(
                structlog.processors.CallsiteParameterAdder(
                    parameters=[
                        structlog.processors.CallsiteParameter.FUNC_NAME,
                        structlog.processors.CallsiteParameter.LINENO,
                    ]
                )
            )

        if enable_console:
            processors.append(structlog.dev.ConsoleRenderer(colors=False))
        else:
            processors.append(structlog.processors.JSONRenderer(sort_keys=True))

        structlog.configure(
            processors=processors,
            context_class=dict,
            logger_factory=structlog.stdlib.LoggerFactory(),
            wrapper_class=structlog.stdlib.BoundLogger,
            cache_logger_on_first_use=False,
        )

    def _add_run_id(
        self, logger: Any, method_name: str, event_dict: dict[str, Any]
    ) -> dict[str, Any]:
        if self.run_id:
            event_dict["run_id"] = str(self.run_id)
        return event_dict

    def run_started(self, mode: str, config_hash: str, seed: int) -> None:
        self.logger.info(
            "Run started", operation="run", mode=mode, config_hash=config_hash, seed=seed
        )

    def run_completed(self, mode: str, tables: int, duration_ms: int) -> None:
        self.logger.info(
            "Run completed",
            operation="run",
            mode=mode,
            tables=tables,
            duration_ms=duration_ms,
            status="success",
        )

    def dataset_loaded(self, source: str, examples: int, n_actions: int | None = None) -> None:
        self.logger.info(
            "Dataset loaded",
            operation="dataset",
            source=source,
            examples=examples,
            n_actions=n_actions,
            stage="data",
        )

    def model_trained(self, learner: str, examples: int, training_cost: float | None = None) -> None:
        self.logger.debug(
            "Model trained",
            operation="train",
            learner=learner,
            examples=examples,
            training_cost=training_cost,
            stage="learn",
        )

    def estimate_computed(self, method: str, estimate: float, n: int) -> None:
        self.logger.debug(
            "Estimate computed", operation="estimate", method=method, estimate=estimate, n=n
        )

    def replicate_completed(self, replicate: int, seed: int, duration_ms: int) -> None:
        self.logger.debug(
            "Replicate completed",
            operation="replicate",
            replicate=replicate,
            seed=seed,
            duration_ms=duration_ms,
            status="success",
        )

    def replicate_skipped(self, replicate: int, seed: int, reason: str) -> None:
        self.logger.warning(
            "Replicate skipped",
            operation="replicate",
            replicate=replicate,
            seed=seed,
            reason=reason,
            status="skipped",
        )

    def trajectory_completed(self, method: str, blocks: int, events_consumed: int) -> None:
        self.logger.debug(
            "Trajectory completed",
            operation="rejection_sampling",
            method=method,
            blocks=blocks,
            events_consumed=events_consumed,
            status="success",
        )

    def trajectory_failed(self, method: str, blocks: int, target_blocks: int, events_consumed: int) -> None:
        self.logger.info(
            "Trajectory failed: log exhausted",
            operation="rejection_sampling",
            method=method,
            blocks=blocks,
            target_blocks=target_blocks,
            events_consumed=events_consumed,
            status="failure",
        )

    def report_written(self, path: Path, rows: int) -> None:
        self.logger.info("Report table written", operation="report", path=str(path), rows=rows)

    def error(
        self, message: str, error: Exception | None = None, context: dict[str, Any] | None = None
    ) -> None:
        error_info = {}
        if error:
            error_info = {
                "error_type": type(error).__name__,
                "error_message": str(error),
            }
        self.logger.error(message, error_info=error_info, context=context or {}, status="error")

    def debug(self, message: str, **kwargs) -> None:
        self.logger.debug(message, **kwargs)

    def info(self, message: str, **kwargs) -> None:
        self.logger.info(message, **kwargs)

    def warning(self, message: str, **kwargs) -> None:
        self.logger.warning(message, **kwargs)


class TimedOperation:
    """Logs start, completion (with duration_ms) or failure of a block."""

    def __init__(self, logger: RunLogger, operation: str, **kwargs):
        self.logger = logger
        self.operation = operation
        self.context = kwargs
        self.start_time: datetime | None = None
        self.duration_ms = 0

    def __enter__(self) -> "TimedOperation":
        self.start_time = datetime.utcnow()
        self.logger.info(f"{self.operation} started", **self.context)
        return self

    def __exit__(self, exc_type, exc_val, exc_tb) -> bool:
        self.duration_ms = int((datetime.utcnow() - self.start_time).total_seconds() * 1000)
        if exc_type is None:
            self.logger.info(
                f"{self.operation} completed",
                duration_ms=self.duration_ms,
                status="success",
                **self.context,
            )
        else:
            self.logger.error(
                f"{self.operation} failed",
                error=exc_val,
                context={"duration_ms": self.duration_ms, **self.context},
            )
        return False


def create_run_logger(
    run_id: UUID | None = None,
    log_level: str = "INFO",
    enable_console: bool = True,
    log_file: Path | None = None,
) -> RunLogger:
    """Create a configured run logger."""
    return RunLogger(
        log_level=log_level,
        enable_console=enable_console,
        log_file=log_file,
        run_id=run_id,
    )
