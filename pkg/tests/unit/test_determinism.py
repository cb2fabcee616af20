"""Unit tests for determinism utilities."""

import json

from dreval.determinism import DeterminismUtils, SeedStream, derive_seed, replicate_rng


def test_normalize_json():
    """Keys are sorted and generated_at is dropped."""
    data = {
        "z_key": "last",
        "a_key": "first",
        "generated_at": "2025-01-01T00:00:00Z",
        "nested": {"b": 2, "a": 1},
    }

    result = DeterminismUtils.normalize_json(data)

    assert "generated_at" not in result
    lines = result.split("\n")
    assert '"a_key"' in lines[1]
    assert '"nested"' in lines[2]
    assert '"z_key"' in lines[-2]


def test_ensure_lf_newlines():
    assert DeterminismUtils.ensure_lf_newlines("line1\r\nline2\r\nline3") == "line1\nline2\nline3"
    assert DeterminismUtils.ensure_lf_newlines("line1\rline2\rline3") == "line1\nline2\nline3"
    assert DeterminismUtils.ensure_lf_newlines("line1\r\nline2\rline3\n") == "line1\nline2\nline3\n"


def test_utc_timestamp():
    timestamp = DeterminismUtils.utc_timestamp()

    assert timestamp.endswith("Z")
    assert "T" in timestamp


def test_normalize_file_for_comparison(tmp_path):
    test_file = tmp_path / "run.json"
    test_file.write_text(
        json.dumps({"mode": "drns", "generated_at": "2025-01-01T00:00:00Z", "notes": {"run_id": "x", "truth": 0.5}})
    )

    result = DeterminismUtils.normalize_file_for_comparison(test_file)

    assert "generated_at" not in result
    assert "run_id" not in result
    assert '"truth": 0.5' in result


def test_normalize_jsonl_file(tmp_path):
    test_file = tmp_path / "audit.jsonl"
    test_file.write_text('{"b": 1, "timestamp": "t1"}\r\n{"a": 2, "duration_ms": 5}\r\n')

    result = DeterminismUtils.normalize_file_for_comparison(test_file)

    assert result == '{"b": 1}\n{"a": 2}'


def test_config_hash_ignores_key_order():
    first = DeterminismUtils.config_hash({"seed": 1, "dataset": {"n": 10, "kind": "csv"}})
    second = DeterminismUtils.config_hash({"dataset": {"kind": "csv", "n": 10}, "seed": 1})
    assert first == second
    assert len(first) == 64
    assert DeterminismUtils.config_hash({"seed": 2, "dataset": {"n": 10, "kind": "csv"}}) != first


class TestSeedDerivation:
    def test_same_inputs_same_seed(self):
        assert derive_seed(7, SeedStream.LOGGING, 3) == derive_seed(7, SeedStream.LOGGING, 3)

    def test_streams_and_indices_are_distinct(self):
        seeds = {
            derive_seed(7, stream, index) for stream in SeedStream for index in range(20)
        }
        assert len(seeds) == len(SeedStream) * 20

    def test_master_seed_matters(self):
        assert derive_seed(7, SeedStream.SPLIT, 0) != derive_seed(8, SeedStream.SPLIT, 0)

    def test_replicate_rng_reproducible(self):
        first = replicate_rng(3, SeedStream.REJECTION, 5).random(4)
        second = replicate_rng(3, SeedStream.REJECTION, 5).random(4)
        other = replicate_rng(3, SeedStream.REJECTION, 6).random(4)
        assert first.tolist() == second.tolist()
        assert first.tolist() != other.tolist()
