"""Schema validation of experiment configurations."""

import json
from pathlib import Path
from typing import Any

import jsonschema
from pydantic import BaseModel
from pydantic import ValidationError as PydanticValidationError


class ValidationIssue(BaseModel):
    """One validation failure located by a JSON pointer."""
    json_pointer: str
    message: str


class ValidationResult(BaseModel):
    ok: bool
    errors: list[ValidationIssue] = []


class SchemaValidator:
    """Validates raw config mappings against the pydantic model and a JSON schema."""

    def __init__(self, schema_dir: Path | None = None):
        if schema_dir is None:
            schema_dir = Path(__file__).parent.parent.parent / "schemas"
        self.schema_dir = schema_dir
        self._schemas: dict[str, dict[str, Any]] = {}

    def _load_schema(self, schema_name: str) -> dict[str, Any]:
        if schema_name not in self._schemas:
            schema_path = self.schema_dir / f"{schema_name}.schema.json"
            if schema_path.exists():
                with open(schema_path) as f:
                    self._schemas[schema_name] = json.load(f)
            else:
                self._schemas[schema_name] = {
                    "$schema": "https://json-schema.org/draft/2020-12/schema",
                    "type": "object",
                }
        return self._schemas[schema_name]

    def validate(self, data: dict[str, Any]) -> ValidationResult:
        """Check ``data`` with pydantic first, then with the JSON schema."""
        from .config import ExperimentConfig

        errors = []
        try:
            ExperimentConfig.model_validate(data)
        except PydanticValidationError as e:
            for error in e.errors():
                location = "/".join(str(loc) for loc in error["loc"])
                errors.append(ValidationIssue(json_pointer=f"/{location}", message=error["msg"]))

        validator = jsonschema.Draft202012Validator(self._load_schema("experiment_config"))
        for error in sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path)):
            pointer = "/" + "/".join(str(part) for part in error.absolute_path)
            errors.append(ValidationIssue(json_pointer=pointer, message=error.message))

        return ValidationResult(ok=not errors, errors=errors)
