"""Parallel replications with scheduling-independent results.

Replication i always draws from substream(seed, tag, i), so the assembled
arrays are bit-identical whether the work runs inline, in one process, or
fanned out over a pool.  Worker processes are forked after the case is
staged in a module global, which keeps models (closures) out of pickling.
"""

from __future__ import annotations

import multiprocessing as mp
import os

import numpy as np

from .random_walk import diff_exit
from .rng import substream

_CASE = None


def _run_chunk(bounds):
    lo, hi = bounds
    model, x, a, b, T, N, seed, tag, gamma_fn = _CASE
    m = hi - lo
    times = np.empty(m)
    locs = np.empty(m)
    works = np.empty(m, dtype=np.int64)
    steps = np.empty(m, dtype=np.int64)
    restarts = np.empty(m, dtype=np.int64)
    for i in range(m):
        rng = substream(seed, tag, lo + i)
        rec = diff_exit(rng, model, x, a, b, T, N, gamma_fn=gamma_fn)
        times[i] = rec.exit_time
        locs[i] = rec.exit_location
        works[i] = rec.work.total()
        steps[i] = rec.steps
        restarts[i] = rec.work.restarts
    return lo, times, locs, works, steps, restarts


def run_replications(
    model, x, a, b, T, N, n, seed, tag="rep", processes=None, gamma_fn=None
) -> dict[str, np.ndarray]:
    """n independent exit simulations; returns arrays keyed time/location/work/steps/restarts."""
    global _CASE
    if processes is None:
        processes = os.cpu_count() or 1
    _CASE = (model, x, a, b, T, N, seed, tag, gamma_fn)
    try:
        if processes <= 1 or n < 64 or mp.get_start_method(allow_none=True) not in (None, "fork"):
            parts = [_run_chunk((0, n))]
        else:
            chunk = max(32, (n + 4 * processes - 1) // (4 * processes))
            bounds = [(lo, min(lo + chunk, n)) for lo in range(0, n, chunk)]
            ctx = mp.get_context("fork")
            with ctx.Pool(processes) as pool:
                parts = pool.map(_run_chunk, bounds)
    finally:
        _CASE = None
    out = {
        "time": np.empty(n),
        "location": np.empty(n),
        "work": np.empty(n, dtype=np.int64),
        "steps": np.empty(n, dtype=np.int64),
        "restarts": np.empty(n, dtype=np.int64),
    }
    for lo, times, locs, works, steps, restarts in parts:
        hi = lo + len(times)
        out["time"][lo:hi] = times
        out["location"][lo:hi] = locs
        out["work"][lo:hi] = works
        out["steps"][lo:hi] = steps
        out["restarts"][lo:hi] = restarts
    return out
