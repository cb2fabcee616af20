"""Main dreval application class."""

from pathlib import Path
from typing import Any

from .artifacts import RunManifest
from .config import ExperimentConfig, Mode
from .datagen import covariate_shift_transform, multiclass_to_bandit, multilabel_biased_logger
from .determinism import DeterminismUtils, SeedStream, derive_seed
from .errors import ConfigError
from .experiments import PROTOCOLS, RunOutputs
from .experiments.common import load_multiclass, load_multilabel, load_regression
from .logfile import write_log
from .logging import RunLogger, TimedOperation
from .report import write_report
from .types import EventLog, LogHeader, OutcomeMode
from .validation import SchemaValidator, ValidationResult


class DrevalApp:
    """Runs experiment protocols and writes their reports."""

    def __init__(self, schema_dir: Path | None = None):
        self.schema_validator = SchemaValidator(schema_dir)

    def validate(self, data: dict[str, Any]) -> ValidationResult:
        """Validate a raw configuration mapping."""
        return self.schema_validator.validate(data)

    def run(self, config: ExperimentConfig, logger: RunLogger | None = None) -> RunOutputs:
        """Run the protocol named by ``config.mode``."""
        protocol = PROTOCOLS[config.mode]
        if logger is None:
            return protocol(config)
        logger.run_started(
            config.mode.value, DeterminismUtils.config_hash(config.hashable()), config.seed
        )
        with TimedOperation(logger, "protocol", mode=config.mode.value) as timer:
            outputs = protocol(config, logger)
        logger.run_completed(config.mode.value, len(outputs.tables), timer.duration_ms)
        return outputs

    def report(
        self, outputs: RunOutputs, out_dir: Path, logger: RunLogger | None = None
    ) -> RunManifest:
        return write_report(outputs, out_dir, logger)

    def run_and_report(
        self, config: ExperimentConfig, logger: RunLogger | None = None
    ) -> tuple[RunOutputs, RunManifest]:
        outputs = self.run(config, logger)
        return outputs, self.report(outputs, config.out, logger)

    def generate_log(self, config: ExperimentConfig) -> EventLog:
        """One exploration log over the configured dataset, drawn the way ``mode`` logs.

        Multiclass modes log uniformly over labels, ``drns`` uses the
        label-biased logger and ``covariate-shift`` the reveal-or-conceal logger.
        """
        seed = derive_seed(config.seed, SeedStream.LOGGING, 0)
        if config.mode in (Mode.EVAL, Mode.OPTIMIZE):
            dataset = load_multiclass(config)
            events = multiclass_to_bandit(dataset, seed)
            header = LogHeader(k=dataset.n_actions, mode=OutcomeMode.LOSS)
        elif config.mode is Mode.DRNS:
            multilabel = load_multilabel(config)
            events = multilabel_biased_logger(multilabel, seed)
            header = LogHeader(k=multilabel.n_actions, mode=OutcomeMode.LOSS)
        elif config.mode is Mode.SHIFT:
            events, _ = covariate_shift_transform(
                load_regression(config), seed, config.shift.reveal_probability
            )
            header = LogHeader(k=2, mode=OutcomeMode.REWARD)
        else:
            raise ConfigError(f"no logger for mode {config.mode.value}")
        return EventLog(header=header, events=events)

    def write_generated_log(self, config: ExperimentConfig, path: Path) -> EventLog:
        log = self.generate_log(config)
        write_log(log.events, path, log.header)
        return log
