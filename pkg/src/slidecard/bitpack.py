"""Fixed-width unsigned integers bit-packed into 64-bit words.

Cells are packed tightly: a cell may straddle two adjacent words, so a
pool of n cells of w bits occupies ceil(n*w/64) words with no per-cell
padding.  One extra guard word is allocated at the end so the two-word
read path never branches on the array boundary.

Vectorised ``set`` applies one clear pass (``bitwise_and.at``) followed
by one set pass (``bitwise_or.at``) per word column.  Because every
cell owns a disjoint bit range, concurrent-looking updates of different
cells in one batch cannot corrupt each other; duplicate indices in one
batch MUST carry equal values (the two passes OR the values together
otherwise).
"""

from __future__ import annotations

from math import lcm

import numpy as np

_WORD = 64
_M64 = (1 << 64) - 1


class PackedArray:
    """A dense array of ``size`` unsigned ints of ``width`` bits each."""

    def __init__(self, size: int, width: int, fill_value: int = 0):
        if not 1 <= width <= 32:
            raise ValueError(f"width must be in [1, 32], got {width}")
        if size <= 0:
            raise ValueError(f"size must be positive, got {size}")
        if fill_value >> width:
            raise ValueError(f"fill value {fill_value} exceeds {width} bits")
        self.size = size
        self.width = width
        self.mask = np.uint64((1 << width) - 1)
        self._data_words = (size * width + _WORD - 1) // _WORD
        # +1 guard word keeps the straddling read/write paths branch-free
        self.words = np.zeros(self._data_words + 1, dtype=np.uint64)
        if fill_value:
            self.fill(fill_value)

    def __len__(self) -> int:
        return self.size

    @property
    def data_words(self) -> np.ndarray:
        """The packed payload, excluding the guard word."""
        return self.words[: self._data_words]

    @property
    def nbytes(self) -> int:
        return self.words.nbytes

    def fill(self, value: int) -> None:
        """Set every cell to ``value``."""
        if value >> self.width:
            raise ValueError(f"value {value} exceeds {self.width} bits")
        # cell boundaries repeat every lcm(width, 64) bits, so one packed
        # period tiled across the array reproduces the per-cell layout
        period_cells = lcm(self.width, _WORD) // self.width
        period_words = period_cells * self.width // _WORD
        acc = 0
        for j in range(period_cells):
            acc |= value << (j * self.width)
        pattern = np.array(
            [(acc >> (_WORD * w)) & _M64 for w in range(period_words)],
            dtype=np.uint64,
        )
        reps = -(-self._data_words // period_words)
        self.words[: self._data_words] = np.tile(pattern, reps)[: self._data_words]
        # zero pad bits past the last cell so snapshots are canonical
        used = self.size * self.width - _WORD * (self._data_words - 1)
        if used < _WORD:
            self.words[self._data_words - 1] &= np.uint64((1 << used) - 1)
        self.words[self._data_words :] = 0

    # --- vector paths --------------------------------------------------------

    def _locate(self, idx: np.ndarray):
        bitpos = idx.astype(np.uint64) * np.uint64(self.width)
        w0 = (bitpos >> np.uint64(6)).astype(np.intp)
        off = bitpos & np.uint64(63)
        return w0, off

    def get(self, idx) -> np.ndarray:
        """Read cells at ``idx`` (array-like of indices) as uint64."""
        idx = np.asarray(idx)
        w0, off = self._locate(idx)
        lo = self.words[w0] >> off
        # double shift keeps the count <= 63; off == 0 yields zero as needed
        hi = (self.words[w0 + 1] << (np.uint64(63) - off)) << np.uint64(1)
        return (lo | hi) & self.mask

    def set(self, idx, values) -> None:
        """Write ``values`` into cells at ``idx``.

        Duplicate indices must carry equal values.
        """
        idx = np.asarray(idx)
        w0, off = self._locate(idx)
        vals = np.asarray(values, dtype=np.uint64) & self.mask
        vals = np.broadcast_to(vals, idx.shape)
        m0 = self.mask << off
        v0 = vals << off
        shift = np.uint64(63) - off
        m1 = (self.mask >> shift) >> np.uint64(1)
        v1 = (vals >> shift) >> np.uint64(1)
        w1 = w0 + 1
        np.bitwise_and.at(self.words, w0, ~m0)
        np.bitwise_or.at(self.words, w0, v0)
        np.bitwise_and.at(self.words, w1, ~m1)
        np.bitwise_or.at(self.words, w1, v1)

    def get_range(self, start: int, stop: int) -> np.ndarray:
        """Read the contiguous cell range [start, stop)."""
        return self.get(np.arange(start, stop, dtype=np.uint64))

    def set_range(self, start: int, values: np.ndarray) -> None:
        """Write a contiguous run of cells beginning at ``start``."""
        self.set(np.arange(start, start + len(values), dtype=np.uint64), values)

    # --- scalar paths ---------------------------------------------------------

    def get_one(self, i: int) -> int:
        bitpos = i * self.width
        w0, off = bitpos >> 6, bitpos & 63
        pair = int(self.words[w0]) | (int(self.words[w0 + 1]) << _WORD)
        return (pair >> off) & int(self.mask)

    def set_one(self, i: int, value: int) -> None:
        bitpos = i * self.width
        w0, off = bitpos >> 6, bitpos & 63
        mask = int(self.mask)
        pair = int(self.words[w0]) | (int(self.words[w0 + 1]) << _WORD)
        pair = (pair & ~(mask << off)) | ((value & mask) << off)
        self.words[w0] = pair & _M64
        self.words[w0 + 1] = pair >> _WORD
