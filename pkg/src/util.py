"""
util.py

Utility functions.
"""

from __future__ import annotations


def strtobool(val: str) -> int:
    """Convert a string representation of truth to true (1) or false (0).

    True values are 'y', 'yes', 't', 'true', 'on', and '1'; false values
    are 'n', 'no', 'f', 'false', 'off', and '0'.  Raises ValueError if
    'val' is anything else.

    This is a copy of the `distutils.util.strtobool` function.
    """
    val = val.lower()
    if val in ("y", "yes", "t", "true", "on", "1"):
        return 1
    elif val in ("n", "no", "f", "false", "off", "0"):
        return 0
    else:
        raise ValueError(f"invalid truth value {val!r}")


def parse_k_range(val: str) -> list[int]:
    """
    Parse a k range such as "2..10", "4" or "2,3,5".

    Raises ValueError on malformed or non-positive input.
    """
    val = val.strip()
    if ".." in val:
        low, _, high = val.partition("..")
        start, stop = int(low), int(high)
        if start > stop:
            raise ValueError(f"empty k range {val!r}")
        values = list(range(start, stop + 1))
    else:
        values = [int(part) for part in val.split(",") if part.strip()]
    if not values or any(v < 1 for v in values):
        raise ValueError(f"k values must be positive, got {val!r}")
    return sorted(set(values))


def parse_selectors(val: str) -> list[str]:
    """
    Split a comma separated column selector list, e.g. "1,2,4" or "alcohol,hue".
    """
    return [part.strip() for part in val.split(",") if part.strip()]
