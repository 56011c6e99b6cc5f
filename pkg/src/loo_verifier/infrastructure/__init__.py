"""Parsers and report writers."""
