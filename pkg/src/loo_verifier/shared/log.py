"""Logging setup for the command line.

Library modules only call `logging.getLogger(__name__)`; handlers are
installed here, once, by the CLI.
"""

import logging

from rich.console import Console
from rich.logging import RichHandler


def configure_logging(console: Console, verbose: bool = False) -> None:
    """Route the root logger through a RichHandler on `console`."""
    handler = RichHandler(console=console, show_path=False, rich_tracebacks=True, markup=False)
    root = logging.getLogger()
    for existing in list(root.handlers):
        if isinstance(existing, RichHandler):
            root.removeHandler(existing)
    root.addHandler(handler)
    root.setLevel(logging.DEBUG if verbose else logging.WARNING)
