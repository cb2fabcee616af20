"""Tests for report tables, the run manifest and summary rendering."""

import json
import math

import pytest

from dreval.artifacts import Artifact, RunManifest
from dreval.errors import DrevalError
from dreval.experiments.common import RunOutputs, summarize
from dreval.rendering import SummaryRenderer
from dreval.report import (
    CONFIG_FILE,
    MANIFEST_FILE,
    SUMMARY_FILE,
    load_outputs,
    read_table,
    save_outputs,
    write_report,
    write_table,
)


def _outputs() -> RunOutputs:
    return RunOutputs(
        mode="eval-stationary",
        config={"mode": "eval-stationary", "seed": 3},
        config_hash="f" * 64,
        seed=3,
        tables={
            "replicates": [
                {"replicate": 0, "seed": 11, "method": "DR", "estimate": 0.1 + 0.2},
                {"replicate": 1, "seed": 12, "method": "DR", "estimate": math.nan},
            ],
            "summary": [{"seed": 3, **summarize("DR", 0.3, [0.25, 0.35]).model_dump()}],
        },
        summaries=[summarize("DR", 0.3, [0.25, 0.35])],
        notes={"truth": 0.3, "train_examples": 100},
    )


class TestArtifact:
    def test_hash_and_verify(self, tmp_path):
        path = tmp_path / "table.csv"
        path.write_text("a,b\n1,2\n")
        artifact = Artifact(name="table", path=path)
        assert not artifact.verify_integrity()
        artifact.calculate_hash()
        assert artifact.verify_integrity()
        path.write_text("a,b\n1,3\n")
        assert not artifact.verify_integrity()

    def test_missing_file(self, tmp_path):
        artifact = Artifact(name="gone", path=tmp_path / "gone.csv")
        with pytest.raises(FileNotFoundError):
            artifact.calculate_hash()
        artifact.sha256_hash = "0" * 64
        assert not artifact.verify_integrity()


class TestWriteTable:
    def test_full_precision_and_nan(self, tmp_path):
        path = tmp_path / "t.csv"
        write_table([{"x": 0.1 + 0.2, "y": math.nan}], ["x", "y"], path)
        assert path.read_text() == "x,y\n0.30000000000000004,NaN\n"

    def test_undocumented_column(self, tmp_path):
        with pytest.raises(DrevalError, match="undocumented"):
            write_table([{"x": 1, "z": 2}], ["x"], tmp_path / "t.csv")


class TestWriteReport:
    def test_files_and_manifest(self, tmp_path):
        manifest = write_report(_outputs(), tmp_path)
        for name in ("replicates.csv", "summary.csv", CONFIG_FILE, SUMMARY_FILE, MANIFEST_FILE, "run.json"):
            assert (tmp_path / name).exists()
        assert [a.name for a in manifest.tables()] == ["replicates", "summary"]
        assert manifest.verify_manifest_integrity()["integrity_ok"]

        loaded = RunManifest.load(tmp_path / MANIFEST_FILE)
        assert loaded.config_hash == "f" * 64
        assert loaded.verify_manifest_integrity()["integrity_ok"]

    def test_tampering_is_detected(self, tmp_path):
        write_report(_outputs(), tmp_path)
        (tmp_path / "summary.csv").write_text("tampered\n")
        (tmp_path / SUMMARY_FILE).unlink()
        result = RunManifest.load(tmp_path / MANIFEST_FILE).verify_manifest_integrity()
        assert not result["integrity_ok"]
        assert result["failed"] == 1
        assert result["missing"] == 1

    def test_tables_are_reproducible(self, tmp_path):
        write_report(_outputs(), tmp_path / "a")
        write_report(_outputs(), tmp_path / "b")
        for name in ("replicates.csv", "summary.csv", CONFIG_FILE, SUMMARY_FILE):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_replicate_rows(self, tmp_path):
        write_report(_outputs(), tmp_path)
        rows = read_table(tmp_path / "replicates.csv")
        assert [r["replicate"] for r in rows] == [0, 1]
        assert rows[1]["estimate"] is None

    def test_unknown_table(self, tmp_path):
        outputs = _outputs()
        outputs.tables["extra"] = [{"a": 1}]
        with pytest.raises(DrevalError, match="no column layout"):
            write_report(outputs, tmp_path)

    def test_summary_mentions_methods(self, tmp_path):
        write_report(_outputs(), tmp_path)
        text = (tmp_path / SUMMARY_FILE).read_text()
        assert "# dreval run: eval-stationary" in text
        assert "| DR |" in text
        assert "ground truth: 0.300000" in text


def test_nan_survives_run_json(tmp_path):
    outputs = RunOutputs(
        mode="drns",
        config={},
        config_hash="0" * 64,
        seed=1,
        summaries=[summarize("RS", 0.5, [math.nan], n_failed=1)],
    )
    path = save_outputs(outputs, tmp_path)
    assert "NaN" in path.read_text()
    loaded = load_outputs(tmp_path)
    assert math.isnan(loaded.summaries[0].rmse)
    assert loaded.summaries[0].n_failed == 1


def test_load_outputs_missing(tmp_path):
    with pytest.raises(OSError):
        load_outputs(tmp_path / "absent.json")


class TestRenderer:
    def test_number_filter(self):
        renderer = SummaryRenderer()
        assert renderer.render_string("{{ x | number(2) }} {{ n | number }}", {"x": 0.12345, "n": 3}) == "0.12 3"

    def test_missing_variable_is_an_error(self):
        with pytest.raises(DrevalError, match="Template rendering failed"):
            SummaryRenderer().render({"mode": "drns"})

    def test_custom_template_dir(self, tmp_path):
        (tmp_path / "t.j2").write_text("seed={{ seed }}")
        assert SummaryRenderer(tmp_path).render({"seed": 4}, "t.j2") == "seed=4"


def test_config_file_is_sorted_json(tmp_path):
    write_report(_outputs(), tmp_path)
    assert json.loads((tmp_path / CONFIG_FILE).read_text()) == {"mode": "eval-stationary", "seed": 3}
