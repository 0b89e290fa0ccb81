"""
env.py

Parse environment variables from .env file.
"""

from __future__ import annotations

import logging
import os
from collections.abc import Callable
from typing import TypeVar

from dotenv import load_dotenv

from .util import strtobool

__all__ = [
    "DEBUG_MODE",
    "DEFAULT_K",
    "DEFAULT_P",
    "DEFAULT_LAMBDA",
    "DEFAULT_THETA",
    "DEFAULT_DELTA",
    "DEFAULT_SEED",
    "DEFAULT_MAX_ITERATIONS",
    "DEFAULT_CONVERGENCE_TOL",
    "DEFAULT_DRIFT_MODE",
    "SWEEP_DIRECTORY",
    "PYPROJECT_TOML_PATH",
]

logger = logging.getLogger(__name__)

T = TypeVar("T", int, float)

# Load envs
load_dotenv()

DEBUG_MODE = strtobool(os.getenv("DEBUG_MODE", "off"))
if DEBUG_MODE:
    logger.warning("[red]Debug mode is activated.[/red]", extra={"markup": True})


def _number_env(name: str, default: T, cast: Callable[[str], T], *, allow_zero: bool = False) -> T:
    """
    Read a numeric env, exiting on a malformed value like the other required settings.

    :param name: The env name.
    :param default: Value used when the env is unset.
    :param cast: int or float.
    :param allow_zero: Whether zero is accepted (negative values never are).
    :return: The parsed value.
    """
    raw = os.getenv(name)
    if raw is None or not raw.strip():
        return default
    try:
        value = cast(raw.strip())
    except ValueError:
        logger.critical("[bold red]%s must be a number, got %r.[/bold red]", name, raw, extra={"markup": True})
        exit(1)
    if value < 0 or (value == 0 and not allow_zero):
        logger.critical("[bold red]%s must be positive, got %r.[/bold red]", name, raw, extra={"markup": True})
        exit(1)
    return value


# Hyperparameter defaults, lambda=10 and theta=4 follow the published iris runs
DEFAULT_K = _number_env("CFICA_K", 3, int)
DEFAULT_P = _number_env("CFICA_P", 5, int)
DEFAULT_LAMBDA = _number_env("CFICA_LAMBDA", 10.0, float)
DEFAULT_THETA = _number_env("CFICA_THETA", 4.0, float)
DEFAULT_DELTA = _number_env("CFICA_DELTA", 0.1, float)
DEFAULT_SEED = _number_env("CFICA_SEED", 0, int, allow_zero=True)
DEFAULT_MAX_ITERATIONS = _number_env("CFICA_MAX_ITERATIONS", 100, int)
DEFAULT_CONVERGENCE_TOL = _number_env("CFICA_CONVERGENCE_TOL", 1e-6, float, allow_zero=True)

DEFAULT_DRIFT_MODE = os.getenv("CFICA_DRIFT_MODE", "per-point").strip().lower()
if DEFAULT_DRIFT_MODE not in ("per-point", "per-chunk"):
    logger.critical(
        "[bold red]CFICA_DRIFT_MODE must be per-point or per-chunk.[/bold red]",
        extra={"markup": True},
    )
    exit(1)

# Default is ../data/sweep
SWEEP_DIRECTORY = os.getenv(
    "CFICA_SWEEP_DIRECTORY",
    os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "data", "sweep"),
)

PYPROJECT_TOML_PATH = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "pyproject.toml")
