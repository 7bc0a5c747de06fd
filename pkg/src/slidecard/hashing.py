"""Seeded 64-bit mixing for cell and group placement.

Both hash families share one construction: a splitmix-style finalizer
applied to ``key * GOLDEN + stream``, where ``stream`` is itself the
finalizer applied to ``seed ^ salt``.  Distinct salts give the two
families independent streams from a single user seed.

Scalar paths use plain Python ints masked to 64 bits; vector paths use
uint64 ndarrays whose arithmetic wraps identically.  Tests pin the two
paths bit-for-bit against each other.
"""

from __future__ import annotations

import numpy as np

_M64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15

# arbitrary distinct constants, fixed forever for reproducibility
CELL_SALT = 0x9D9E26B1D9C4F201
GROUP_SALT = 0x5C5D14FA8A33E96D


def mix64(z: int) -> int:
    """Finalizing 64-bit avalanche (splitmix64 finalizer)."""
    z &= _M64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _M64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _M64
    return z ^ (z >> 31)


def mix64_vec(z: np.ndarray) -> np.ndarray:
    z = z.astype(np.uint64, copy=True)
    z ^= z >> np.uint64(30)
    z *= np.uint64(0xBF58476D1CE4E5B9)
    z ^= z >> np.uint64(27)
    z *= np.uint64(0x94D049BB133111EB)
    z ^= z >> np.uint64(31)
    return z


def derive_stream(seed: int, salt: int) -> int:
    """Expand a user seed into one family's independent hash stream."""
    return mix64((seed ^ salt) & _M64)


def cell_index(aip: int, vid: int, c: int, stream: int) -> int:
    """Map (host, virtual slot) to a pool cell index in [0, 2**c)."""
    key = ((aip << 32) | vid) & _M64
    return mix64((key * _GOLDEN + stream) & _M64) & ((1 << c) - 1)


def cell_index_vec(aip: np.ndarray, vid: np.ndarray, c: int, stream: int) -> np.ndarray:
    key = (aip.astype(np.uint64) << np.uint64(32)) | vid.astype(np.uint64)
    h = mix64_vec(key * np.uint64(_GOLDEN) + np.uint64(stream))
    return h & np.uint64((1 << c) - 1)


def group_index(bip: int, g: int, stream: int) -> int:
    """Map a peer address to a virtual slot index in [0, g)."""
    return mix64((bip * _GOLDEN + stream) & _M64) % g


def group_index_vec(bip: np.ndarray, g: int, stream: int) -> np.ndarray:
    h = mix64_vec(bip.astype(np.uint64) * np.uint64(_GOLDEN) + np.uint64(stream))
    return h % np.uint64(g)
