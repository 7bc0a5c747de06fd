"""Per-host cardinality estimation over a shared counter pool.

Each monitored host owns ``g`` virtual counters.  A peer address picks
one of the host's virtual slots, and (host, slot) picks a physical cell
in the shared pool, so distinct hosts overlap arbitrarily in the pool.
The estimate de-noises the host's own inactive fraction ``z_v`` with the
pool-wide inactive fraction ``z_p``:

    estimate = g * (ln z_p - ln z_v)

which reduces to the plain linear estimator -g*ln(g0/g) when the pool
is otherwise idle (z_p = 1).  All counter kinds share this arithmetic,
so equal inactive counts give bit-identical estimates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import hashing
from .errors import ConfigError
from .pools import TAIL_REMAINDER, make_pool

COUNTER_KINDS = ("at", "dr", "ts")

# cells examined per estimate-phase work chunk, sized to bound scratch arrays
_CELL_BUDGET = 1 << 20


@dataclass(frozen=True)
class EstimatorConfig:
    """Virtual layout: g slots per host over a pool of 2**c counters."""

    g: int
    c: int
    k: int
    seed: int = 0
    counter_kind: str = "at"
    partition: str = TAIL_REMAINDER

    def __post_init__(self):
        if self.g < 1:
            raise ConfigError(f"g must be at least 1, got {self.g}")
        if self.c < 1 or self.c > 32:
            raise ConfigError(f"c must be in [1, 32], got {self.c}")
        if self.g > (1 << self.c):
            raise ConfigError(
                f"g={self.g} exceeds the pool size 2^{self.c}")
        if not 0 <= self.seed < (1 << 64):
            raise ConfigError("seed must fit in 64 bits")
        if self.counter_kind not in COUNTER_KINDS:
            raise ConfigError(f"unknown counter kind {self.counter_kind!r}")
        # derived hash streams; two salts make the families independent
        object.__setattr__(
            self, "cell_stream",
            hashing.derive_stream(self.seed, hashing.CELL_SALT))
        object.__setattr__(
            self, "group_stream",
            hashing.derive_stream(self.seed, hashing.GROUP_SALT))

    def build_pool(self):
        return make_pool(self.counter_kind, self.c, self.k, self.partition)


@dataclass(frozen=True)
class EstimateReport:
    """One host's estimate for the window of k' slices ending now."""

    host: int
    window_start: int
    k_prime: int
    estimate: float
    z_v: float          # measured fraction, before any clamping
    z_p: float
    saturated: bool

    @property
    def slice_end(self) -> int:
        return self.window_start + self.k_prime - 1


def virtual_slot(cfg: EstimatorConfig, bip: int) -> int:
    """Which of the host's g virtual slots a peer address lands in."""
    return hashing.group_index(bip, cfg.g, cfg.group_stream)


def cell_of(cfg: EstimatorConfig, aip: int, slot: int) -> int:
    """Physical pool cell behind one (host, virtual slot)."""
    if slot >= cfg.g:
        raise ValueError(f"virtual slot {slot} outside [0, {cfg.g})")
    return hashing.cell_index(aip, slot, cfg.c, cfg.cell_stream)


def pair_cells(cfg: EstimatorConfig, aips: np.ndarray, bips: np.ndarray) -> np.ndarray:
    """Pool cells touched by a batch of (aip, bip) pairs."""
    slots = hashing.group_index_vec(bips, cfg.g, cfg.group_stream)
    return hashing.cell_index_vec(aips, slots, cfg.c, cfg.cell_stream)


def record_pairs(pool, cfg: EstimatorConfig, aips: np.ndarray, bips: np.ndarray) -> None:
    """Record a batch of pairs into the pool (scan phase)."""
    pool.set_many(pair_cells(cfg, aips, bips))


def host_cells(cfg: EstimatorConfig, aips: np.ndarray) -> np.ndarray:
    """All g cells of each host, flattened host-major."""
    rep = np.repeat(aips.astype(np.uint64, copy=False), cfg.g)
    slots = np.tile(np.arange(cfg.g, dtype=np.uint64), len(aips))
    return hashing.cell_index_vec(rep, slots, cfg.c, cfg.cell_stream)


def inactive_virtual_counts(pool, cfg: EstimatorConfig,
                            aips: np.ndarray, k_prime: int) -> np.ndarray:
    """Per-host count of inactive virtual slots (g0), as int64."""
    out = np.empty(len(aips), dtype=np.int64)
    step = max(1, _CELL_BUDGET // cfg.g)
    for lo in range(0, len(aips), step):
        chunk = aips[lo:lo + step]
        mask = pool.inactive_mask(host_cells(cfg, chunk), k_prime)
        out[lo:lo + step] = mask.reshape(len(chunk), cfg.g).sum(axis=1)
    return out


def estimate_linear(g: int, g0: int):
    """Plain linear estimate -g*ln(g0/g) from the zero-slot count.

    Returns (estimate, saturated); g0=0 is clamped to 1, flagged.
    """
    if not 0 <= g0 <= g:
        raise ValueError(f"g0={g0} outside [0, {g}]")
    saturated = g0 == 0
    clamped = max(g0, 1)
    return float(g * np.log(g / np.float64(clamped))), saturated


def reports_from_counts(cfg: EstimatorConfig, aips: np.ndarray,
                        g0: np.ndarray, pool_inactive: int,
                        slice_end: int, k_prime: int):
    """Turn integer inactive counts into per-host estimate reports.

    This is the single arithmetic path every counter kind funnels
    through; equal counts therefore yield bit-identical reports.
    """
    g = cfg.g
    pool_size = 1 << cfg.c
    z_v = g0 / np.float64(g)
    z_p = pool_inactive / np.float64(pool_size)
    # half-count continuity clamps keep the logs finite
    zv_clamped = np.where(g0 == 0, 1.0 / (2 * g), z_v)
    zp_clamped = 1.0 / (2 * pool_size) if pool_inactive == 0 else z_p
    raw = g * (np.log(zp_clamped) - np.log(zv_clamped))
    saturated = (g0 == 0) | (raw < 0) | (pool_inactive == 0)
    estimates = np.maximum(raw, 0.0)
    window_start = slice_end - k_prime + 1
    return [
        EstimateReport(int(aips[i]), window_start, k_prime,
                       float(estimates[i]), float(z_v[i]), float(z_p),
                       bool(saturated[i]))
        for i in range(len(aips))
    ]


def estimate_hosts(pool, cfg: EstimatorConfig, aips: np.ndarray,
                   slice_end: int, k_prime: int, pool_inactive=None):
    """Estimate every host in ``aips`` (estimate phase, read-only).

    ``pool_inactive`` may be precomputed once per slice and shared.
    """
    if pool_inactive is None:
        pool_inactive = pool.count_inactive(k_prime)
    g0 = inactive_virtual_counts(pool, cfg, aips, k_prime)
    return reports_from_counts(cfg, aips, g0, pool_inactive, slice_end, k_prime)


def estimate_host(pool, cfg: EstimatorConfig, aip: int,
                  slice_end: int, k_prime: int, pool_inactive=None) -> EstimateReport:
    """Single-host convenience wrapper over the batch path."""
    return estimate_hosts(pool, cfg, np.array([aip], dtype=np.uint64),
                          slice_end, k_prime, pool_inactive)[0]
