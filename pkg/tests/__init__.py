"""Tests for loo-verifier."""
