"""Determinism utilities: seed derivation, config hashing, output normalization."""

import hashlib
import json
from datetime import datetime, timezone
from enum import IntEnum
from pathlib import Path
from typing import Any

import numpy as np

UTC = timezone.utc  # datetime.UTC alias (3.11+); same object on older interpreters


class SeedStream(IntEnum):
    """Fixed stream ids; one per randomized experiment stage."""
    SPLIT = 0
    LOGGING = 1
    LEARNER = 2
    SUBSAMPLE = 3
    REJECTION = 4
    SIMULATION = 5
    DATASET = 6


def derive_seed(master: int, stream: int, index: int) -> int:
    """Counter-based child seed for replicate ``index`` of ``stream``.

    Independent of how many other replicates run and in which order.
    """
    sequence = np.random.SeedSequence(entropy=master, spawn_key=(int(stream), index))
    return int(sequence.generate_state(1, dtype=np.uint32)[0])


def replicate_rng(master: int, stream: int, index: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence(entropy=master, spawn_key=(int(stream), index))
    )


class DeterminismUtils:
    """Utilities to ensure deterministic outputs."""

    @staticmethod
    def normalize_json(data: dict[str, Any], exclude_keys: set | None = None) -> str:
        """Sorted-key, indented JSON without volatile keys."""
        if exclude_keys is None:
            exclude_keys = {"generated_at"}
        normalized_data = {k: v for k, v in data.items() if k not in exclude_keys}
        return json.dumps(normalized_data, sort_keys=True, indent=2, ensure_ascii=False)

    @staticmethod
    def config_hash(config: dict[str, Any]) -> str:
        """SHA-256 of the compact sorted-key JSON form of a config."""
        canonical = json.dumps(config, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    @staticmethod
    def ensure_lf_newlines(content: str) -> str:
        return content.replace("\r\n", "\n").replace("\r", "\n")

    @staticmethod
    def utc_timestamp() -> str:
        return datetime.now(UTC).isoformat().replace("+00:00", "Z")

    @staticmethod
    def normalize_file_for_comparison(file_path: Path, exclude_patterns: list | None = None) -> str:
        """File content with LF newlines and volatile JSON keys removed."""
        if exclude_patterns is None:
            exclude_patterns = ["generated_at", "run_id", "timestamp", "duration_ms"]

        content = DeterminismUtils.ensure_lf_newlines(file_path.read_text(encoding="utf-8"))

        if file_path.suffix == ".json":
            try:
                data = DeterminismUtils._remove_nested_patterns(
                    json.loads(content), exclude_patterns
                )
                content = DeterminismUtils.normalize_json(data, set(exclude_patterns))
            except json.JSONDecodeError:
                pass
        elif file_path.suffix == ".jsonl":
            try:
                lines = []
                for line in content.strip().split("\n"):
                    if line.strip():
                        data = DeterminismUtils._remove_nested_patterns(
                            json.loads(line), exclude_patterns
                        )
                        lines.append(json.dumps(data, sort_keys=True, ensure_ascii=False))
                content = "\n".join(lines)
            except json.JSONDecodeError:
                pass

        return content

    @staticmethod
    def _remove_nested_patterns(data: Any, exclude_patterns: list) -> Any:
        if isinstance(data, dict):
            return {
                k: DeterminismUtils._remove_nested_patterns(v, exclude_patterns)
                for k, v in data.items()
                if k not in exclude_patterns
            }
        if isinstance(data, list):
            return [DeterminismUtils._remove_nested_patterns(item, exclude_patterns) for item in data]
        return data
