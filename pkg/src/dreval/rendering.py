"""Markdown summary of a run, rendered from a Jinja2 template."""

from pathlib import Path
from typing import Any

import jinja2

from .errors import DrevalError

SUMMARY_TEMPLATE = "summary.md.j2"


def _number(value: Any, digits: int = 4) -> str:
    if isinstance(value, float):
        return f"{value:.{digits}f}"
    return str(value)


class SummaryRenderer:
    """Renders run summaries with data."""

    def __init__(self, template_dir: Path | None = None):
        if template_dir is None:
            template_dir = Path(__file__).parent / "templates"
        self.template_dir = template_dir
        self.env = jinja2.Environment(
            loader=jinja2.FileSystemLoader(template_dir),
            undefined=jinja2.StrictUndefined,
            autoescape=False,
            keep_trailing_newline=True,
        )
        self.env.filters["number"] = _number

    def render(self, data: dict[str, Any], template_name: str = SUMMARY_TEMPLATE) -> str:
        try:
            return self.env.get_template(template_name).render(data)
        except jinja2.TemplateError as e:
            raise DrevalError(f"Template rendering failed: {e}") from e

    def render_string(self, template_str: str, data: dict[str, Any]) -> str:
        template = self.env.from_string(template_str)
        return template.render(data)
