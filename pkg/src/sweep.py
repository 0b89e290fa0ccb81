"""
sweep.py

Run the chunked protocol once per k and collect purity, as in the purity-versus-k experiments.
"""

from __future__ import annotations

import logging
import os
from collections.abc import Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import NamedTuple

from .cf import HyperParams
from .engine import run_protocol
from .errors import CficaError
from .evaluation import purity_of_store
from .kmeans import KMeansConfig
from .snapshot import save_snapshot
from .store import Point

__all__ = ["SweepRow", "sweep_one", "run_sweep"]

logger = logging.getLogger(__name__)


class SweepRow(NamedTuple):
    k: int
    purity: float | None
    cluster_count: int | None
    total_points: int | None
    state_path: str | None
    error: str | None


def sweep_one(
    k: int,
    chunks: Sequence[Sequence[Point]],
    params: HyperParams,
    kconfig: KMeansConfig,
    scratch_dir: str | os.PathLike[str],
) -> SweepRow:
    """
    Run the protocol for one k; failures are reported in the row instead of raised.
    """
    try:
        result = run_protocol(chunks, replace(params, k=k), replace(kconfig, k=k))
        path = save_snapshot(result.model, result.store, Path(scratch_dir) / f"k{k}.state")
        report = purity_of_store(result.store)
    except (CficaError, OSError) as e:
        logger.error("Sweep for k=%d failed: %s", k, e)
        return SweepRow(k, None, None, None, None, str(e))
    return SweepRow(k, report.purity, result.model.active_count, report.total_points, str(path), None)


def run_sweep(
    chunks: Sequence[Sequence[Point]],
    params: HyperParams,
    kconfig: KMeansConfig,
    ks: Sequence[int],
    scratch_dir: str | os.PathLike[str],
    jobs: int = 1,
) -> list[SweepRow]:
    """
    Sweep k over ks. With jobs > 1 each k runs in its own process; rows come back in k order.
    """
    logger.info("Sweeping k over %s with %d job(s).", list(ks), jobs)
    if jobs <= 1 or len(ks) <= 1:
        return [sweep_one(k, chunks, params, kconfig, scratch_dir) for k in ks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        futures = [pool.submit(sweep_one, k, chunks, params, kconfig, scratch_dir) for k in ks]
        return [future.result() for future in futures]
