"""Small shared helpers: thread budget and canonical JSON."""

from __future__ import annotations

import json
import os

THREADS_ENV = "HARNACK_LAB_THREADS"


def thread_count() -> int:
    """Width for data-parallel scans.

    Serial by default; HARNACK_LAB_THREADS raises the width, capped by the
    machine's CPU count.
    """
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return 1
    try:
        requested = int(raw)
    except ValueError:
        raise ValueError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    return max(1, min(requested, os.cpu_count() or 1))


def json_line(obj) -> str:
    """One-line canonical JSON: sorted keys, compact separators.

    Infinite margins serialize as bare Infinity tokens (the Python json
    round-trip accepts them back).
    """
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=True)
