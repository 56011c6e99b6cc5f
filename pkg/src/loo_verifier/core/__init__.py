"""Core domain: models, semantics, analyzers and the proof logic."""
