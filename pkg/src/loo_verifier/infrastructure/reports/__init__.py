"""Report writers."""

from loo_verifier.infrastructure.reports.json_report import (
    JsonReportWriter,
    read_json_report,
    trace_lines,
    write_json_report,
    write_trace_jsonl,
)

__all__ = [
    "JsonReportWriter",
    "read_json_report",
    "trace_lines",
    "write_json_report",
    "write_trace_jsonl",
]
