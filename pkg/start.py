"""
start.py

Entrypoint for the cfica command line.
"""

from __future__ import annotations

from src.cli import app


if __name__ == "__main__":
    app()
