"""Small shared helpers: float formatting and optional process parallelism."""

from __future__ import annotations

import os


def format_float(value) -> str:
    """Render a float with 17 significant digits for reproducible output files."""
    return format(float(value), ".17g")


def default_n_jobs() -> int:
    return os.cpu_count() or 1


def parallel_map(fn, items, n_jobs: int = 1):
    """Ordered map over independent work items.

    Results come back in input order regardless of completion order, so
    parallel runs write byte-identical outputs.
    """
    items = list(items)
    if n_jobs == 1 or len(items) <= 1:
        return [fn(item) for item in items]
    from joblib import Parallel, delayed
    return Parallel(n_jobs=n_jobs)(delayed(fn)(item) for item in items)
