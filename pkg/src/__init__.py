from __future__ import annotations

from . import logging  # type: ignore[reportUnusedImport]
