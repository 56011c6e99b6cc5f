"""loo-verifier - interpreter, monitor, attack search and proof checker for the Loo language."""

__version__ = "0.1.0"
