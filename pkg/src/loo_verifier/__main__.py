"""Entry point for python -m loo_verifier."""

from loo_verifier.cli.app import app

if __name__ == "__main__":
    app()
