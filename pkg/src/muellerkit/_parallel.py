"""Chunked execution over pixel batches.

Every per-pixel kernel in this package is written as fn(start, stop)
over a flat pixel index, with each chunk computed independently (one
LAPACK call per matrix, no cross-pixel state).  Results are therefore
byte-identical for any chunk size and any worker count; threads only
change wall time.  numpy releases the GIL inside its linalg gufuncs, so
plain threads give real parallelism without pickling the cube.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterator

CHUNK_PIXELS = 65536

WORKERS_ENV = "MUELLERKIT_WORKERS"


def resolve_workers(workers: int | None) -> int:
    """Explicit argument wins, then the MUELLERKIT_WORKERS variable, then 1."""
    if workers is None:
        raw = os.environ.get(WORKERS_ENV, "").strip()
        if raw:
            try:
                workers = int(raw)
            except ValueError:
                raise ValueError(
                    f"{WORKERS_ENV} must be an integer, got {raw!r}"
                ) from None
        else:
            workers = 1
    if workers < 1:
        raise ValueError(f"worker count must be >= 1, got {workers}")
    return workers


def iter_spans(n: int, chunk: int = CHUNK_PIXELS) -> Iterator[tuple[int, int]]:
    for start in range(0, n, chunk):
        yield start, min(start + chunk, n)


def run_chunked(
    n: int,
    fn: Callable[[int, int], None],
    workers: int | None = None,
    chunk: int = CHUNK_PIXELS,
    progress: Callable[[int, int], None] | None = None,
) -> None:
    """Run ``fn(start, stop)`` over [0, n) in fixed-size chunks.

    ``fn`` must write its results into preallocated output arrays; chunks
    never overlap so no locking is needed.  ``progress(done, total)`` is
    called after each chunk completes (from the coordinating thread).
    """
    workers = resolve_workers(workers)
    spans = list(iter_spans(n, chunk))
    total = len(spans)
    if workers == 1 or total <= 1:
        for done, span in enumerate(spans, 1):
            fn(*span)
            if progress is not None:
                progress(done, total)
        return
    with ThreadPoolExecutor(max_workers=workers) as pool:
        done = 0
        for _ in pool.map(lambda span: fn(*span), spans):
            done += 1
            if progress is not None:
                progress(done, total)
