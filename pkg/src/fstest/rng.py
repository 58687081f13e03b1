"""Deterministic named randomness streams and a replication-level worker pool.

Every random quantity in the package is drawn from a stream derived from a
single 64-bit master seed plus a human-readable path, e.g.
``stream_rng(seed, "power", "cauchy", 0.3, rep)``.  Two consequences:

* reruns with the same seed and configuration are bitwise identical, and
* each replication owns its stream, so campaign output does not depend on
  how replications are scheduled across workers (``FSTEST_THREADS``).
"""

from __future__ import annotations

import hashlib
import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "stream_rng",
    "stream_seed_words",
    "worker_count",
    "parallel_map",
    "replication_slices",
]

_DOMAIN = b"fstest/1"

THREADS_ENV_VAR = "FSTEST_THREADS"


def stream_seed_words(seed: int, *path: object) -> list[int]:
    """Hash (seed, path) into eight 32-bit words suitable for SeedSequence."""
    h = hashlib.sha256()
    h.update(_DOMAIN)
    h.update((int(seed) % (1 << 64)).to_bytes(8, "little"))
    for part in path:
        h.update(b"/")
        if isinstance(part, float):
            # repr() is the shortest round-trip form, stable across platforms
            h.update(repr(part).encode())
        else:
            h.update(str(part).encode())
    return [int(w) for w in np.frombuffer(h.digest(), dtype=np.uint32)]


def stream_rng(seed: int, *path: object) -> np.random.Generator:
    """Return the generator for the named stream ``(seed, *path)``.

    Identical arguments always yield a generator producing identical draws;
    distinct paths yield independent streams.
    """
    entropy = stream_seed_words(seed, *path)
    return np.random.default_rng(np.random.SeedSequence(entropy))


def worker_count() -> int:
    """Worker cap from the FSTEST_THREADS environment variable (default 1)."""
    raw = os.environ.get(THREADS_ENV_VAR, "").strip()
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"{THREADS_ENV_VAR} must be an integer, got {raw!r}")
    return max(1, n)


def parallel_map(fn: Callable, items: Sequence, workers: int | None = None) -> list:
    """Map ``fn`` over ``items`` preserving order.

    With ``workers`` (default: :func:`worker_count`) above one, items are
    distributed over a process pool.  ``fn`` must be picklable and must not
    rely on shared mutable state; per-item determinism then guarantees the
    result is independent of the pool size.
    """
    if workers is None:
        workers = worker_count()
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))


def replication_slices(reps: int, workers: int | None = None) -> list[slice]:
    """Split 0..reps into contiguous chunks, one per available worker.

    Chunk boundaries never affect results because every replication owns a
    stream derived from its own index.
    """
    if reps < 0:
        raise ValueError("reps must be nonnegative")
    if workers is None:
        workers = worker_count()
    if workers <= 1 or reps <= 1:
        return [slice(0, reps)]
    chunk = -(-reps // workers)
    return [slice(s, min(s + chunk, reps)) for s in range(0, reps, chunk)]
