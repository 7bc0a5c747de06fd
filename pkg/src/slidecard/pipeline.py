"""Slice-by-slice driver enforcing the scan / estimate / maintain cycle.

Each slice runs three strictly ordered phases: scan (record the slice's
pairs into the pool), estimate (read-only window queries for every host
seen within the query window), maintain (advance the pool clocks and
refresh due blocks).  Worker fan-out happens inside a phase, never
across phases.

Work is chunked at fixed sizes independent of the worker count, pool
writes are applied under a lock, and every per-host quantity is an
integer count until the single shared float path turns counts into
estimates, so output is identical for any worker count.
"""

from __future__ import annotations

import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import estimator as est

SCAN_CHUNK = 1 << 15  # records per scan work unit
_CELL_BUDGET = 1 << 20  # cells per estimate work unit


@dataclass(frozen=True)
class SliceStats:
    """Timing and maintenance accounting for one processed slice."""

    slice_index: int
    pairs: int
    scan_us: int
    estimate_us: int
    maintain_us: int
    cells_maintained: int
    cells_cleared: int


class SlidingHostSet:
    """Hosts seen recently, with the slice each was last seen in."""

    def __init__(self, k: int):
        self.k = k
        self._last: dict = {}

    def update(self, aips: np.ndarray, t: int) -> None:
        for a in np.unique(aips):
            self._last[int(a)] = t

    def active(self, t: int, k_prime: int) -> np.ndarray:
        """Sorted hosts seen within the last k' slices."""
        floor_t = t - k_prime
        live = sorted(a for a, s in self._last.items() if s > floor_t)
        return np.array(live, dtype=np.uint64)

    def prune(self, t: int) -> None:
        horizon = t - self.k
        stale = [a for a, s in self._last.items() if s <= horizon]
        for a in stale:
            del self._last[a]


class Pipeline:
    """Runs one pool and estimator layout over a sliced pair stream."""

    def __init__(self, pool, cfg: est.EstimatorConfig, k_prime: int,
                 floor: float = 0.0, workers: int = 1):
        if not 1 <= k_prime <= pool.k:
            raise ValueError(f"k'={k_prime} outside [1, {pool.k}]")
        if workers < 1:
            raise ValueError(f"workers must be at least 1, got {workers}")
        self.pool = pool
        self.cfg = cfg
        self.k_prime = k_prime
        self.floor = floor
        self.workers = workers
        self.hosts = SlidingHostSet(pool.k)
        self.total_maintained = 0
        self.total_cleared = 0
        self._lock = threading.Lock()
        self._executor = (ThreadPoolExecutor(max_workers=workers)
                          if workers > 1 else None)

    def close(self) -> None:
        if self._executor is not None:
            self._executor.shutdown(wait=True)
            self._executor = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False

    # --- phases -----------------------------------------------------------------

    def _scan(self, aips: np.ndarray, bips: np.ndarray) -> None:
        n = len(aips)
        if n == 0:
            return
        spans = [(lo, min(lo + SCAN_CHUNK, n)) for lo in range(0, n, SCAN_CHUNK)]
        if self._executor is None:
            for lo, hi in spans:
                self.pool.set_many(est.pair_cells(self.cfg, aips[lo:hi], bips[lo:hi]))
            return
        futures = [self._executor.submit(est.pair_cells, self.cfg,
                                         aips[lo:hi], bips[lo:hi])
                   for lo, hi in spans]
        for f in futures:
            cells = f.result()
            # packed words are shared; writes must not interleave
            with self._lock:
                self.pool.set_many(cells)

    def _estimate(self, t: int):
        aips = self.hosts.active(t, self.k_prime)
        if len(aips) == 0:
            return []
        pool_inactive = self.pool.count_inactive(self.k_prime)
        step = max(1, _CELL_BUDGET // self.cfg.g)
        if self._executor is None or len(aips) <= step:
            g0 = est.inactive_virtual_counts(self.pool, self.cfg, aips, self.k_prime)
        else:
            futures = [self._executor.submit(
                est.inactive_virtual_counts, self.pool, self.cfg,
                aips[lo:lo + step], self.k_prime)
                for lo in range(0, len(aips), step)]
            g0 = np.concatenate([f.result() for f in futures])
        reports = est.reports_from_counts(self.cfg, aips, g0, pool_inactive,
                                          t, self.k_prime)
        if self.floor > 0:
            reports = [r for r in reports if r.estimate >= self.floor]
        return reports

    # --- driving ----------------------------------------------------------------

    def process_slice(self, t: int, aips: np.ndarray, bips: np.ndarray):
        """Run all three phases for slice ``t``; returns (reports, stats)."""
        t0 = time.perf_counter_ns()
        self._scan(aips, bips)
        if len(aips):
            self.hosts.update(aips, t)
        t1 = time.perf_counter_ns()
        reports = self._estimate(t)
        t2 = time.perf_counter_ns()
        report = self.pool.advance_slice()
        t3 = time.perf_counter_ns()
        self.total_maintained += report.cells_maintained
        self.total_cleared += report.cells_cleared
        if t % max(1, self.pool.k) == 0:
            self.hosts.prune(t)
        stats = SliceStats(t, len(aips), (t1 - t0) // 1000, (t2 - t1) // 1000,
                           (t3 - t2) // 1000, report.cells_maintained,
                           report.cells_cleared)
        return reports, stats

    def run(self, sliced):
        """Process a (slice, aips, bips) stream; yields (t, reports, stats)."""
        for t, aips, bips in sliced:
            reports, stats = self.process_slice(t, aips, bips)
            yield t, reports, stats
