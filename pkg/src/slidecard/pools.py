"""Counter pools: shared arrays of sliding-window counters.

The interesting one is :class:`AtPool`, a pool of 2**c asynchronous
timestamp counters split into 2k blocks.  Block i's clock reads
(bact0 + i) mod 2k, so the 2k block clocks are always a permutation of
[0, 2k-1] and exactly two blocks sit at a clock of 0 or k after any
slice advance.  Only those two blocks need maintenance, which is what
buys the O(1/k) per-cell maintenance cost.

:class:`DrPool` and :class:`TsPool` hold the rival counter families
behind the same protocol so the estimator and the bench harness can
swap them in: DR pays a full-pool slide every slice, TS pays 64 bits
per cell.  All three agree exactly on "set within the last k' slices".
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .bitpack import PackedArray
from .counters import MAX_K, TS_UNSET, ats_bits, ats_check, dr_bits
from .errors import ConfigError

TAIL_REMAINDER = "tail"
LOW_DEVIATION = "low-dev"
PARTITIONS = (TAIL_REMAINDER, LOW_DEVIATION)

_SNAPSHOT_MAGIC = b"ATP1"
_SNAPSHOT_HEADER = struct.Struct("<4sBBHH6x")  # magic, c, partition, k, bact0

_CHUNK = 1 << 18  # cells per whole-pool scan chunk

# Keep a per-block histogram of stored values while the table stays small;
# it turns the pool-wide inactive count into an O(k*k') table sum instead
# of a full scan.  Beyond this many blocks the table would outweigh the
# pool itself, so wide-window pools fall back to scanning.
_HIST_MAX_BLOCKS = 1024


@dataclass(frozen=True)
class MaintenanceReport:
    """What one slice advance touched.

    ``blocks`` lists maintained block indices (empty when the whole pool
    slides, as for DR).  ``cells_maintained`` counts cells visited,
    ``cells_cleared`` counts cells that became inactive.
    """

    blocks: tuple
    cells_maintained: int
    cells_cleared: int


def _validate_pool_shape(c: int, k: int) -> None:
    if not 1 <= k <= MAX_K:
        raise ConfigError(f"k must be in [1, {MAX_K}], got {k}")
    if c > 32:
        raise ConfigError(f"c must be at most 32, got {c}")
    if c < 1 or (1 << c) < 2 * k:
        raise ConfigError(
            f"pool of 2^{c} cells cannot hold 2k={2 * k} non-empty blocks")


class AtPool:
    """2**c asynchronous timestamps in 2k blocks with staggered clocks."""

    kind = "at"

    def __init__(self, c: int, k: int, partition: str = TAIL_REMAINDER):
        _validate_pool_shape(c, k)
        if partition not in PARTITIONS:
            raise ConfigError(f"unknown partition method {partition!r}")
        self.c = c
        self.k = k
        self.partition = partition
        self.size = 1 << c
        self.nblocks = 2 * k
        self.sentinel = 2 * k
        if partition == TAIL_REMAINDER:
            # all the size remainder lands in the last block
            self._a = self.size // (self.nblocks - 1)
            self._b = self.size % (self.nblocks - 1)
            if self._b == 0:
                raise ConfigError(
                    "tail partition leaves the last block empty for "
                    f"c={c}, k={k}; use the {LOW_DEVIATION!r} partition")
        else:
            self._a2 = self.size // self.nblocks
            self._b2 = self.size % self.nblocks
            # cells below this index live in the narrower leading blocks
            self._split = self._a2 * (self.nblocks - self._b2 + 1)
        self.cells = PackedArray(self.size, ats_bits(k), fill_value=self.sentinel)
        self.bact0 = 0
        self._hist = None
        if self.nblocks <= _HIST_MAX_BLOCKS:
            self._hist = np.zeros((self.nblocks, self.nblocks + 1), dtype=np.int64)
            self._hist[:, self.sentinel] = self.block_sizes()

    # --- layout ---------------------------------------------------------------

    def block_of(self, i: int) -> int:
        """Block index owning cell ``i``."""
        if not 0 <= i < self.size:
            raise ValueError(f"cell index {i} outside [0, {self.size})")
        if self.partition == TAIL_REMAINDER:
            return min(i // self._a, self.nblocks - 1)
        if i < self._split:
            return i // self._a2
        return (i + self.nblocks - self._b2) // (self._a2 + 1)

    def block_of_vec(self, idx: np.ndarray) -> np.ndarray:
        idx = idx.astype(np.uint64, copy=False)
        if self.partition == TAIL_REMAINDER:
            return np.minimum(idx // np.uint64(self._a), np.uint64(self.nblocks - 1))
        lead = idx // np.uint64(self._a2)
        tail = (idx + np.uint64(self.nblocks - self._b2)) // np.uint64(self._a2 + 1)
        return np.where(idx < np.uint64(self._split), lead, tail)

    def block_range(self, bi: int):
        """Cell range [start, stop) of block ``bi``."""
        if not 0 <= bi < self.nblocks:
            raise ValueError(f"block index {bi} outside [0, {self.nblocks})")
        if self.partition == TAIL_REMAINDER:
            if bi < self.nblocks - 1:
                return bi * self._a, (bi + 1) * self._a
            return (self.nblocks - 1) * self._a, self.size
        narrow = self.nblocks - self._b2
        if bi < narrow:
            return bi * self._a2, (bi + 1) * self._a2
        base = narrow * self._a2
        j = bi - narrow
        return base + j * (self._a2 + 1), base + (j + 1) * (self._a2 + 1)

    def block_sizes(self):
        return [stop - start for start, stop in
                (self.block_range(bi) for bi in range(self.nblocks))]

    @property
    def max_block_size(self) -> int:
        return max(self.block_sizes())

    def block_act(self, bi: int) -> int:
        """Clock value of block ``bi`` in the current slice."""
        if not 0 <= bi < self.nblocks:
            raise ValueError(f"block index {bi} outside [0, {self.nblocks})")
        return (self.bact0 + bi) % self.nblocks

    # --- counter access ---------------------------------------------------------

    def set_one(self, i: int) -> None:
        """Record activity on cell ``i`` in the current slice."""
        if not 0 <= i < self.size:
            raise ValueError(f"cell index {i} outside [0, {self.size})")
        bi = self.block_of(i)
        act = self.block_act(bi)
        if self._hist is not None:
            self._hist[bi, self.cells.get_one(i)] -= 1
            self._hist[bi, act] += 1
        self.cells.set_one(i, act)

    def set_many(self, idx: np.ndarray) -> None:
        """Record activity on all cells in ``idx`` (duplicates fine)."""
        idx = idx.astype(np.uint64, copy=False)
        if self._hist is not None:
            idx = np.unique(idx)
            blocks = self.block_of_vec(idx)
            acts = (np.uint64(self.bact0) + blocks) % np.uint64(self.nblocks)
            rows = blocks * np.uint64(self.nblocks + 1)
            flat = self._hist.reshape(-1)
            np.subtract.at(flat, (rows + self.cells.get(idx)).astype(np.intp), 1)
            np.add.at(flat, (rows + acts).astype(np.intp), 1)
        else:
            acts = (np.uint64(self.bact0)
                    + self.block_of_vec(idx)) % np.uint64(self.nblocks)
        self.cells.set(idx, acts)

    def check_one(self, i: int, k_prime: int) -> bool:
        """Was cell ``i`` set within the last ``k_prime`` slices?"""
        if not 0 <= i < self.size:
            raise ValueError(f"cell index {i} outside [0, {self.size})")
        value = self.cells.get_one(i)
        return ats_check(value, self.block_act(self.block_of(i)), self.k, k_prime)

    def inactive_mask(self, idx: np.ndarray, k_prime: int) -> np.ndarray:
        """Boolean mask: True where the cell is inactive for width k'."""
        self._validate_width(k_prime)
        values = self.cells.get(idx)
        acts = (np.uint64(self.bact0) + self.block_of_vec(idx)) % np.uint64(self.nblocks)
        dist = (acts + np.uint64(self.nblocks) - values) % np.uint64(self.nblocks)
        return (values == np.uint64(self.sentinel)) | (dist >= np.uint64(k_prime))

    def count_inactive(self, k_prime: int) -> int:
        """Number of pool cells inactive for width k'."""
        self._validate_width(k_prime)
        if self._hist is not None:
            # a cell is active iff its stored value is one of the k' most
            # recent clock readings of its block
            acts = (self.bact0 + np.arange(self.nblocks)) % self.nblocks
            recent = (acts[:, None] - np.arange(k_prime)[None, :]) % self.nblocks
            rows = np.arange(self.nblocks)[:, None]
            return self.size - int(self._hist[rows, recent].sum())
        total = 0
        for lo in range(0, self.size, _CHUNK):
            hi = min(lo + _CHUNK, self.size)
            total += int(self.inactive_mask(
                np.arange(lo, hi, dtype=np.uint64), k_prime).sum())
        return total

    def inactive_fraction(self, k_prime: int) -> float:
        return self.count_inactive(k_prime) / self.size

    def _validate_width(self, k_prime: int) -> None:
        if not 1 <= k_prime <= self.k:
            raise ValueError(f"k'={k_prime} outside [1, {self.k}]")

    # --- maintenance ------------------------------------------------------------

    def advance_slice(self) -> MaintenanceReport:
        """Advance all block clocks one slice and refresh the two due blocks.

        After the advance, exactly the blocks whose clock reads 0 or k
        hold counters whose distance may have reached k; their stale
        values are cleared by range comparisons alone.
        """
        self.bact0 = (self.bact0 + 1) % self.nblocks
        cleared = 0
        maintained = 0
        at_zero = (-self.bact0) % self.nblocks
        at_k = (self.k - self.bact0) % self.nblocks
        for bi, clock_k in ((at_zero, False), (at_k, True)):
            start, stop = self.block_range(bi)
            values = self.cells.get_range(start, stop)
            if clock_k:
                stale = ((values >= np.uint64(self.k))
                         & (values <= np.uint64(2 * self.k - 1)))
                stale |= values == np.uint64(0)
            else:
                stale = values <= np.uint64(self.k)
            cleared += int(stale.sum())
            maintained += stop - start
            refreshed = np.where(stale, np.uint64(self.sentinel), values)
            self.cells.set_range(start, refreshed)
            if self._hist is not None:
                self._hist[bi] = np.bincount(
                    refreshed.astype(np.int64), minlength=self.nblocks + 1)
        return MaintenanceReport((at_zero, at_k), maintained, cleared)

    # --- accounting and snapshots -------------------------------------------------

    @property
    def bits_per_counter(self) -> int:
        return self.cells.width

    @property
    def memory_bytes(self) -> int:
        return self.cells.nbytes + _SNAPSHOT_HEADER.size

    def snapshot_bytes(self) -> bytes:
        header = _SNAPSHOT_HEADER.pack(
            _SNAPSHOT_MAGIC, self.c, PARTITIONS.index(self.partition),
            self.k, self.bact0)
        return header + self.cells.data_words.tobytes()

    def save(self, path) -> None:
        with open(path, "wb") as fh:
            fh.write(self.snapshot_bytes())

    @classmethod
    def load(cls, path) -> "AtPool":
        with open(path, "rb") as fh:
            blob = fh.read()
        if len(blob) < _SNAPSHOT_HEADER.size:
            raise ConfigError(f"pool snapshot {path} is truncated")
        magic, c, part, k, bact0 = _SNAPSHOT_HEADER.unpack_from(blob)
        if magic != _SNAPSHOT_MAGIC:
            raise ConfigError(f"{path} is not a pool snapshot")
        if part >= len(PARTITIONS):
            raise ConfigError(f"snapshot has unknown partition code {part}")
        pool = cls(c, k, PARTITIONS[part])
        if bact0 >= pool.nblocks:
            raise ConfigError(f"snapshot clock {bact0} out of range")
        payload = blob[_SNAPSHOT_HEADER.size:]
        expected = pool.cells.data_words.nbytes
        if len(payload) != expected:
            raise ConfigError(
                f"snapshot payload is {len(payload)} bytes, expected {expected}")
        pool.cells.data_words[:] = np.frombuffer(payload, dtype="<u8")
        pool.bact0 = bact0
        if pool._hist is not None:
            for bi in range(pool.nblocks):
                start, stop = pool.block_range(bi)
                pool._hist[bi] = np.bincount(
                    pool.cells.get_range(start, stop).astype(np.int64),
                    minlength=pool.nblocks + 1)
        return pool


class DrPool:
    """2**c distance recorders; every cell slides every slice."""

    kind = "dr"

    def __init__(self, c: int, k: int):
        _validate_pool_shape(c, k)
        self.c = c
        self.k = k
        self.size = 1 << c
        self.cells = PackedArray(self.size, dr_bits(k), fill_value=k)

    def set_many(self, idx: np.ndarray) -> None:
        self.cells.set(idx, np.uint64(0))

    def set_one(self, i: int) -> None:
        self.cells.set_one(i, 0)

    def check_one(self, i: int, k_prime: int) -> bool:
        return self.cells.get_one(i) < k_prime

    def inactive_mask(self, idx: np.ndarray, k_prime: int) -> np.ndarray:
        if not 1 <= k_prime <= self.k:
            raise ValueError(f"k'={k_prime} outside [1, {self.k}]")
        return self.cells.get(idx) >= np.uint64(k_prime)

    def count_inactive(self, k_prime: int) -> int:
        total = 0
        for lo in range(0, self.size, _CHUNK):
            hi = min(lo + _CHUNK, self.size)
            total += int(self.inactive_mask(
                np.arange(lo, hi, dtype=np.uint64), k_prime).sum())
        return total

    def inactive_fraction(self, k_prime: int) -> float:
        return self.count_inactive(k_prime) / self.size

    def advance_slice(self) -> MaintenanceReport:
        """Every recorder's distance grows by one, saturating at k."""
        cap = np.uint64(self.k)
        cleared = 0
        for lo in range(0, self.size, _CHUNK):
            hi = min(lo + _CHUNK, self.size)
            values = self.cells.get_range(lo, hi)
            slid = np.minimum(values + np.uint64(1), cap)
            cleared += int(((values < cap) & (slid == cap)).sum())
            self.cells.set_range(lo, slid)
        return MaintenanceReport((), self.size, cleared)

    @property
    def bits_per_counter(self) -> int:
        return self.cells.width

    @property
    def memory_bytes(self) -> int:
        return self.cells.nbytes


class TsPool:
    """2**c plain last-seen slice indices; no maintenance, wide cells."""

    kind = "ts"

    def __init__(self, c: int, k: int):
        _validate_pool_shape(c, k)
        self.c = c
        self.k = k
        self.size = 1 << c
        self.cells = np.full(self.size, TS_UNSET, dtype=np.uint64)
        self.t = 0  # current slice index

    def set_many(self, idx: np.ndarray) -> None:
        self.cells[idx.astype(np.intp, copy=False)] = np.uint64(self.t)

    def set_one(self, i: int) -> None:
        self.cells[i] = np.uint64(self.t)

    def check_one(self, i: int, k_prime: int) -> bool:
        last = int(self.cells[i])
        return last != TS_UNSET and self.t - last < k_prime

    def inactive_mask(self, idx: np.ndarray, k_prime: int) -> np.ndarray:
        if not 1 <= k_prime <= self.k:
            raise ValueError(f"k'={k_prime} outside [1, {self.k}]")
        last = self.cells[idx.astype(np.intp, copy=False)]
        age = np.uint64(self.t) - last  # wraps huge for the unset marker
        return (last == np.uint64(TS_UNSET)) | (age >= np.uint64(k_prime))

    def count_inactive(self, k_prime: int) -> int:
        total = 0
        for lo in range(0, self.size, _CHUNK):
            hi = min(lo + _CHUNK, self.size)
            total += int(self.inactive_mask(
                np.arange(lo, hi, dtype=np.uint64), k_prime).sum())
        return total

    def inactive_fraction(self, k_prime: int) -> float:
        return self.count_inactive(k_prime) / self.size

    def advance_slice(self) -> MaintenanceReport:
        self.t += 1
        return MaintenanceReport((), 0, 0)

    @property
    def bits_per_counter(self) -> int:
        return 64

    @property
    def memory_bytes(self) -> int:
        return self.cells.nbytes


def make_pool(kind: str, c: int, k: int, partition: str = TAIL_REMAINDER):
    """Build a counter pool by kind name ('at', 'dr', or 'ts')."""
    if kind == "at":
        return AtPool(c, k, partition)
    if kind == "dr":
        return DrPool(c, k)
    if kind == "ts":
        return TsPool(c, k)
    raise ConfigError(f"unknown counter kind {kind!r}")
