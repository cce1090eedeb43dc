"""Thread-pool helpers for the simulators.

Worker count comes from NAKLAB_THREADS (default: os.cpu_count, capped at 8).
Results must not depend on the worker count, so callers split work into
deterministically-seeded blocks and combine per-block integer tallies with
commutative sums only.
"""

import os
from concurrent.futures import ThreadPoolExecutor

from .errors import ParameterError


def worker_count() -> int:
    raw = os.environ.get("NAKLAB_THREADS", "").strip()
    if raw:
        try:
            n = int(raw)
        except ValueError as exc:
            raise ParameterError(f"NAKLAB_THREADS must be an integer, got {raw!r}") from exc
        if n < 1:
            raise ParameterError("NAKLAB_THREADS must be >= 1")
        return n
    return min(os.cpu_count() or 1, 8)


def run_blocks(fn, blocks):
    """Apply fn to each block spec, preserving block order in the result list.

    numpy releases the GIL in the bulk RNG / ufunc calls, so threads give a
    real speedup without the pickling cost of processes.
    """
    n = worker_count()
    blocks = list(blocks)
    if n == 1 or len(blocks) <= 1:
        return [fn(b) for b in blocks]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, blocks))
