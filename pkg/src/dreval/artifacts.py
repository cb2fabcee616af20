"""Report artifacts and the run manifest."""

import hashlib
from pathlib import Path
from typing import Any

from pydantic import BaseModel, Field

from . import __version__


class Artifact(BaseModel):
    """One file written by ``report``, with its SHA-256 once hashed."""
    name: str
    path: Path
    kind: str = "table"
    purpose: str = ""
    columns: list[str] = Field(default_factory=list)
    rows: int | None = None
    sha256_hash: str | None = None

    def _digest(self) -> str:
        sha256_hash = hashlib.sha256()
        with open(self.path, "rb") as f:
            for chunk in iter(lambda: f.read(4096), b""):
                sha256_hash.update(chunk)
        return sha256_hash.hexdigest()

    def calculate_hash(self) -> str:
        """Calculate SHA-256 hash of the file content."""
        if not self.path.exists():
            raise FileNotFoundError(f"Cannot hash non-existent file: {self.path}")
        self.sha256_hash = self._digest()
        return self.sha256_hash

    def verify_integrity(self) -> bool:
        """Verify file integrity against stored hash."""
        if self.sha256_hash is None:
            return False
        try:
            return self._digest() == self.sha256_hash
        except FileNotFoundError:
            return False


class RunManifest(BaseModel):
    """Everything needed to rerun a protocol and check its outputs."""
    mode: str
    seed: int
    config_hash: str
    config: dict[str, Any]
    generated_at: str
    dreval_version: str = __version__
    artifacts: list[Artifact] = Field(default_factory=list)

    def add(self, artifact: Artifact) -> None:
        self.artifacts.append(artifact)

    def tables(self) -> list[Artifact]:
        return [a for a in self.artifacts if a.kind == "table"]

    def calculate_all_hashes(self) -> None:
        for artifact in self.artifacts:
            if artifact.path.exists():
                artifact.calculate_hash()

    def verify_manifest_integrity(self) -> dict[str, Any]:
        """Re-hash every artifact and report verified, mismatched and missing files."""
        results: dict[str, Any] = {
            "total_artifacts": len(self.artifacts),
            "verified": 0,
            "failed": 0,
            "missing": 0,
            "details": [],
        }
        for artifact in self.artifacts:
            if not artifact.path.exists():
                results["missing"] += 1
                results["details"].append(
                    {"name": artifact.name, "status": "missing", "path": str(artifact.path)}
                )
            elif artifact.verify_integrity():
                results["verified"] += 1
                results["details"].append(
                    {"name": artifact.name, "status": "verified", "hash": artifact.sha256_hash}
                )
            else:
                results["failed"] += 1
                results["details"].append(
                    {
                        "name": artifact.name,
                        "status": "hash_mismatch",
                        "path": str(artifact.path),
                        "expected_hash": artifact.sha256_hash,
                    }
                )
        results["integrity_ok"] = results["failed"] == 0 and results["missing"] == 0
        return results

    def to_json(self) -> str:
        return self.model_dump_json(indent=2)

    @classmethod
    def load(cls, path: Path) -> "RunManifest":
        return cls.model_validate_json(Path(path).read_text(encoding="utf-8"))
