"""JSON report writer and JSON-lines trace dump."""

import json
import logging
from collections.abc import Iterable
from pathlib import Path

from pydantic import ValidationError

from loo_verifier.core.models.results import Report, TraceRecord
from loo_verifier.shared.exceptions import ReportError

logger = logging.getLogger(__name__)


class JsonReportWriter:
    """Writes a `Report` with a stable key order."""

    def __init__(self, report: Report, indent: int = 2):
        self.report = report
        self.indent = indent

    def render(self) -> str:
        return self.report.model_dump_json(indent=self.indent) + "\n"

    def generate(self, output_path: Path) -> Path:
        """
        Write the report to `output_path`.

        Raises:
            ReportError: If the file cannot be written
        """
        try:
            output_path.write_text(self.render(), encoding="utf-8")
        except OSError as exc:
            raise ReportError(f"cannot write report to {output_path}: {exc}") from exc
        logger.info("report written to %s", output_path)
        return output_path


def write_json_report(report: Report, output_path: Path) -> Path:
    """Convenience wrapper around `JsonReportWriter`."""
    return JsonReportWriter(report).generate(output_path)


def read_json_report(path: Path) -> Report:
    """
    Load a report written by `write_json_report`.

    Raises:
        ReportError: If the file is missing or is not a report
    """
    try:
        return Report.model_validate_json(path.read_text(encoding="utf-8"))
    except (OSError, ValidationError) as exc:
        raise ReportError(f"cannot read report {path}: {exc}") from exc


def trace_lines(records: Iterable[TraceRecord]) -> list[str]:
    """One compact JSON object per trace step."""
    return [json.dumps(r.model_dump(), separators=(",", ":")) for r in records]


def write_trace_jsonl(records: Iterable[TraceRecord], output_path: Path) -> Path:
    """
    Dump a trace as JSON lines, one step per line with its heap delta.

    Raises:
        ReportError: If the file cannot be written
    """
    lines = trace_lines(records)
    try:
        output_path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    except OSError as exc:
        raise ReportError(f"cannot write trace to {output_path}: {exc}") from exc
    logger.info("trace of %d steps written to %s", len(lines), output_path)
    return output_path
