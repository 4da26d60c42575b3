import logging
from typing import Any, Dict, List

import liquid
import numpy as np

from quiver_capacity.models import ReportFile

REPORT_TEMPLATE = """quiver-capacity {{ command }}: {{ status }}
{% for field in fields %}  {{ field.name }}: {{ field.value }}
{% endfor %}"""


def _format_value(value: Any) -> str:
    if isinstance(value, list) and value and isinstance(value[0], list):
        # list of matrices (or a single matrix)
        if value[0] and isinstance(value[0][0], list):
            return "\n    " + "\n    ".join(
                np.array2string(np.asarray(matrix), precision=8, prefix="    ") for matrix in value
            )
        return np.array2string(np.asarray(value), precision=8)
    if isinstance(value, dict):
        return ", ".join(f"{key}={_format_value(item)}" for key, item in sorted(value.items()))
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def render_report(report: ReportFile, template: str = REPORT_TEMPLATE) -> str:
    """
    Render a report as human-readable text through a Liquid template. The template sees
    `command`, `status` and `fields`, a list of {name, value} entries for every present field.

    Raises:
        ValueError: If there is an error during template rendering.
    """
    logger = logging.getLogger("QuiverCapacity")
    data: Dict[str, Any] = report.model_dump(mode="json", exclude_none=True)
    fields: List[Dict[str, str]] = [
        {"name": name, "value": _format_value(value)}
        for name, value in data.items()
        if name not in ("command", "status", "scaled_datum")
    ]
    logger.debug("Rendering report fields: %s", [field["name"] for field in fields])

    try:
        tpl = liquid.Template(template)
        return tpl.render(command=report.command, status=report.status, fields=fields)
    except Exception as e:
        error_message = f"Error rendering report template: {e}"
        logger.error(error_message)
        raise ValueError(error_message) from e
