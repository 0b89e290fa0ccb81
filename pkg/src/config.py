"""
config.py

Resolve hyperparameters from command-line flags, an optional TOML file and the env defaults.

Precedence: flag > TOML file > env > built-in default. A TOML file looks like

    [cfica]
    k = 3
    lambda = 10.0
    theta = 4.0
"""

from __future__ import annotations

import logging
import os
from typing import Any, NamedTuple

import tomli

from .cf import DriftMode, HyperParams
from .env import (
    DEFAULT_CONVERGENCE_TOL,
    DEFAULT_DELTA,
    DEFAULT_DRIFT_MODE,
    DEFAULT_K,
    DEFAULT_LAMBDA,
    DEFAULT_MAX_ITERATIONS,
    DEFAULT_P,
    DEFAULT_SEED,
    DEFAULT_THETA,
    PYPROJECT_TOML_PATH,
)
from .errors import InvalidParameter
from .kmeans import KMeansConfig

__all__ = ["PARAM_KEYS", "Settings", "load_params_file", "resolve_settings", "project_version"]

logger = logging.getLogger(__name__)

PARAM_KEYS = ("k", "p", "lambda", "theta", "delta", "seed", "max_iterations", "convergence_tol", "drift_mode")


class Settings(NamedTuple):
    params: HyperParams
    kmeans: KMeansConfig


def _env_defaults() -> dict[str, Any]:
    return {
        "k": DEFAULT_K,
        "p": DEFAULT_P,
        "lambda": DEFAULT_LAMBDA,
        "theta": DEFAULT_THETA,
        "delta": DEFAULT_DELTA,
        "seed": DEFAULT_SEED,
        "max_iterations": DEFAULT_MAX_ITERATIONS,
        "convergence_tol": DEFAULT_CONVERGENCE_TOL,
        "drift_mode": DEFAULT_DRIFT_MODE,
    }


def load_params_file(path: str | os.PathLike[str]) -> dict[str, Any]:
    """
    Read the [cfica] table of a TOML file.

    :raises InvalidParameter: On unknown keys or a missing table.
    """
    with open(path, "rb") as f:
        logger.debug("Loading parameters from %s.", path)
        document = tomli.load(f)
    table = document.get("cfica")
    if not isinstance(table, dict):
        raise InvalidParameter("config", str(path), "expected a [cfica] table")
    unknown = sorted(set(table) - set(PARAM_KEYS))  # type: ignore[reportUnknownArgumentType]
    if unknown:
        raise InvalidParameter("config", str(path), f"unknown keys {', '.join(unknown)}")
    return dict(table)  # type: ignore[reportUnknownArgumentType]


def resolve_settings(config_path: str | os.PathLike[str] | None = None, **overrides: Any) -> Settings:
    """
    Build HyperParams and KMeansConfig. Overrides set to None are ignored.
    """
    values = _env_defaults()
    if config_path is not None:
        values.update(load_params_file(config_path))
    values.update({key: value for key, value in overrides.items() if value is not None})
    unknown = sorted(set(values) - set(PARAM_KEYS))
    if unknown:
        raise InvalidParameter("settings", unknown, "unknown parameter names")

    try:
        drift_mode = DriftMode(str(values["drift_mode"]))
    except ValueError:
        raise InvalidParameter("drift_mode", values["drift_mode"], "must be per-point or per-chunk") from None
    params = HyperParams(
        k=values["k"],
        p=values["p"],
        lambda_=values["lambda"],
        theta=values["theta"],
        delta=values["delta"],
        drift_mode=drift_mode,
    )
    kmeans = KMeansConfig(
        k=params.k,
        max_iterations=values["max_iterations"],
        convergence_tol=float(values["convergence_tol"]),
        rng_seed=values["seed"],
    )
    return Settings(params, kmeans)


def project_version() -> str:
    """
    The project version from pyproject.toml.
    """
    with open(PYPROJECT_TOML_PATH, "rb") as f:
        logger.debug("Loading pyproject.toml to parse version.")
        toml_dict = tomli.load(f)
    return toml_dict["project"]["version"]
