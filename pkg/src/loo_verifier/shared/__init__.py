"""Shared utilities: exceptions, pretty-printing and logging setup."""

from loo_verifier.shared.exceptions import (
    EvaluationError,
    LooError,
    LooParseError,
    MachineError,
    ProofError,
    ReportError,
    SpecError,
)
from loo_verifier.shared.formatters import (
    format_assertion,
    format_expr,
    format_module,
    format_spec,
    format_state,
    format_stmt,
    render_heap,
)
from loo_verifier.shared.log import configure_logging

__all__ = [
    # Exceptions
    "EvaluationError",
    "LooError",
    "LooParseError",
    "MachineError",
    "ProofError",
    "ReportError",
    "SpecError",
    # Formatters
    "format_assertion",
    "format_expr",
    "format_module",
    "format_spec",
    "format_state",
    "format_stmt",
    "render_heap",
    # Logging
    "configure_logging",
]
