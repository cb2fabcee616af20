"""Plot-ready CSV tables, the run manifest and the Markdown summary."""

import json
from pathlib import Path

import pandas as pd

from .artifacts import Artifact, RunManifest
from .determinism import DeterminismUtils
from .errors import DrevalError
from .experiments.common import RunOutputs
from .logging import RunLogger
from .rendering import SummaryRenderer

SUMMARY_COLUMNS = [
    "method",
    "truth",
    "mean_estimate",
    "bias",
    "rmse",
    "std",
    "rmse_ci",
    "n_replicates",
    "n_failed",
]

# Column order of every table a protocol emits.
TABLE_COLUMNS: dict[str, dict[str, list[str]]] = {
    "eval-stationary": {
        "replicates": ["replicate", "seed", "method", "estimate"],
        "summary": ["seed", *SUMMARY_COLUMNS],
    },
    "optimize": {
        "replicates": ["replicate", "seed", "learner", "feedback", "test_error"],
        "test_error": ["seed", "learner", "feedback", "mean", "std", "n_replicates"],
    },
    "covariate-shift": {
        "replicates": ["fraction", "replicate", "seed", "examples", "method", "estimate"],
        "by_fraction": ["seed", "fraction", *SUMMARY_COLUMNS],
    },
    "drns": {
        "replicates": ["replicate", "seed", "method", "estimate", "trajectories", "failed"],
        "summary": ["seed", *SUMMARY_COLUMNS],
    },
}

RUN_FILE = "run.json"
MANIFEST_FILE = "manifest.json"
CONFIG_FILE = "config.json"
SUMMARY_FILE = "summary.md"


def table_columns(mode: str, table: str) -> list[str]:
    try:
        return TABLE_COLUMNS[mode][table]
    except KeyError:
        raise DrevalError(f"no column layout for table {table!r} of mode {mode!r}") from None


def write_table(rows: list[dict], columns: list[str], path: Path) -> int:
    """Write rows in a fixed column order; floats keep full precision."""
    frame = pd.DataFrame(rows, columns=columns)
    unexpected = {key for row in rows for key in row} - set(columns)
    if unexpected:
        raise DrevalError(f"{path.name}: undocumented columns {sorted(unexpected)}")
    frame.to_csv(path, index=False, float_format="%.17g", na_rep="NaN", lineterminator="\n")
    return len(frame)


def save_outputs(outputs: RunOutputs, out_dir: Path) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / RUN_FILE
    path.write_text(outputs.model_dump_json(indent=2) + "\n", encoding="utf-8")
    return path


def load_outputs(path: Path) -> RunOutputs:
    """Read ``run.json`` (or the directory holding it)."""
    path = Path(path)
    if path.is_dir():
        path = path / RUN_FILE
    try:
        return RunOutputs.model_validate_json(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise OSError(f"failed to read run outputs {path}: {e}") from e


def write_report(
    outputs: RunOutputs,
    out_dir: Path,
    logger: RunLogger | None = None,
    renderer: SummaryRenderer | None = None,
) -> RunManifest:
    """One CSV per table, the config, a summary and a hashed manifest.

    Everything but the manifest's ``generated_at`` is a pure function of the
    outputs, so reruns with the recorded config give byte-identical tables.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(
        mode=outputs.mode,
        seed=outputs.seed,
        config_hash=outputs.config_hash,
        config=outputs.config,
        generated_at=DeterminismUtils.utc_timestamp(),
    )

    for name in sorted(outputs.tables):
        columns = table_columns(outputs.mode, name)
        path = out_dir / f"{name}.csv"
        rows = write_table(outputs.tables[name], columns, path)
        manifest.add(
            Artifact(name=name, path=path, kind="table", columns=columns, rows=rows,
                     purpose=f"{outputs.mode} {name} table")
        )
        if logger:
            logger.report_written(path, rows)

    config_path = out_dir / CONFIG_FILE
    config_path.write_text(
        DeterminismUtils.normalize_json(outputs.config) + "\n", encoding="utf-8"
    )
    manifest.add(Artifact(name="config", path=config_path, kind="config",
                          purpose="configuration for an exact rerun"))

    run_path = save_outputs(outputs, out_dir)
    manifest.add(Artifact(name="run", path=run_path, kind="data", purpose="raw run outputs"))

    summary_path = out_dir / SUMMARY_FILE
    renderer = renderer or SummaryRenderer()
    summary_path.write_text(
        DeterminismUtils.ensure_lf_newlines(
            renderer.render(
                {
                    "mode": outputs.mode,
                    "seed": outputs.seed,
                    "config_hash": outputs.config_hash,
                    "summaries": [s.model_dump() for s in outputs.summaries],
                    "tables": [a.model_dump() for a in manifest.tables()],
                    "notes": outputs.notes,
                }
            )
        ),
        encoding="utf-8",
    )
    manifest.add(Artifact(name="summary", path=summary_path, kind="document",
                          purpose="human-readable summary"))

    manifest.calculate_all_hashes()
    (out_dir / MANIFEST_FILE).write_text(manifest.to_json() + "\n", encoding="utf-8")
    return manifest


def read_table(path: Path) -> list[dict]:
    """Rows of a written CSV table, for checks and reruns."""
    return json.loads(pd.read_csv(path).to_json(orient="records"))
