"""Sliding-window counters as pure value-level functions.

Three counter families answer the same question -- "was this counter
set within the last k' time slices?" -- with different memory and
maintenance trade-offs:

* asynchronous timestamp (``ats_*``): stores the value of a per-counter
  modular clock at its last set.  The clock (the "asynchronous current
  timestamp", ACT) runs over [0, 2k-1] and is derived at runtime, never
  stored.  A counter needs ceil(log2(2k+1)) bits (value 2k is the
  inactive sentinel) and needs its state refreshed only when its clock
  reads 0 or k, i.e. once every k slices.
* distance recorder (``dr_*``): stores the number of slices since the
  last set, ceil(log2(k+1)) bits, but must be incremented every slice.
* timestamp (``ts_*``): stores the last-seen slice index in a wide
  integer; no per-slice maintenance but 64 bits per counter.

All functions here are pure and take the window parameter ``k``
explicitly; stored-counter mutation and the maintenance schedule live
in :mod:`slidecard.pools`.
"""

from __future__ import annotations

from dataclasses import dataclass

MAX_K = 1 << 15


@dataclass(frozen=True)
class WindowConfig:
    """Sliding-window shape: up to ``k`` slices of ``slice_us`` microseconds."""

    k: int
    slice_us: int

    def __post_init__(self):
        if not 1 <= self.k <= MAX_K:
            raise ValueError(f"k must be in [1, {MAX_K}], got {self.k}")
        if self.slice_us <= 0:
            raise ValueError(f"slice_us must be positive, got {self.slice_us}")

    def validate_width(self, k_prime: int) -> None:
        """Reject a query width outside [1, k]."""
        if not 1 <= k_prime <= self.k:
            raise ValueError(
                f"query width k'={k_prime} outside [1, {self.k}]")


# --- asynchronous timestamp -------------------------------------------------

def ats_bits(k: int) -> int:
    """Bits needed for one asynchronous timestamp: ceil(log2(2k+1))."""
    return (2 * k).bit_length()


def ats_init(k: int) -> int:
    """A fresh counter holds the inactive sentinel 2k."""
    return 2 * k


def ats_set(act: int, k: int) -> int:
    """Record activity: the counter takes its clock's current value."""
    if not 0 <= act < 2 * k:
        raise ValueError(f"act {act} outside [0, {2 * k - 1}]")
    return act


def ats_distance(value: int, act: int, k: int) -> int:
    """Slices since the last set, recovered modulo 2k from the clock.

    Undefined for the sentinel; callers must short-circuit on it first.
    """
    if value == 2 * k:
        raise ValueError("distance of an inactive counter is undefined")
    return (act + 2 * k - value) % (2 * k)


def ats_check(value: int, act: int, k: int, k_prime: int) -> bool:
    """Is the counter active in the window of the last ``k_prime`` slices?

    Exact under the maintenance schedule of :func:`ats_preserve_fast`
    (refresh whenever the clock reads 0 or k).
    """
    if not 1 <= k_prime <= k:
        raise ValueError(f"k'={k_prime} outside [1, {k}]")
    if value == 2 * k:
        return False
    return ats_distance(value, act, k) <= k_prime - 1


def ats_preserve(value: int, act: int, k: int) -> int:
    """General maintenance: clear a counter whose distance reached k.

    Distances in [k, 2k] can never be active for any query width, and
    clearing them keeps later distance arithmetic from wrapping past 2k.

    Maintenance runs at slice start, before any set of the new slice, so
    a stored value equal to the current clock cannot be a fresh set; the
    modular distance reads 0 but the true distance is the full 2k, and
    the counter is cleared.
    """
    if value == 2 * k:
        return value
    dis = ats_distance(value, act, k)
    if dis == 0:
        dis = 2 * k
    if dis >= k:
        return 2 * k
    return value


def ats_preserve_fast(value: int, act: int, k: int) -> int:
    """Comparison-only maintenance, valid when the clock reads 0 or k.

    At clock 0 the stale values are exactly [0, k]; at clock k they are
    [k, 2k-1] plus 0.  Any other clock value is a no-op so a scheduler
    may call this unconditionally.  Agrees with :func:`ats_preserve`
    whenever the clock reads 0 or k.
    """
    if act == 0:
        if value <= k:
            return 2 * k
    elif act == k:
        if k <= value <= 2 * k - 1 or value == 0:
            return 2 * k
    return value


# --- distance recorder -------------------------------------------------------

def dr_bits(k: int) -> int:
    """Bits needed for one distance recorder: ceil(log2(k+1))."""
    return k.bit_length()


def dr_init(k: int) -> int:
    """A fresh recorder holds k, the inactive sentinel."""
    return k


def dr_set() -> int:
    """Record activity: distance resets to zero."""
    return 0


def dr_slide(value: int, k: int) -> int:
    """Advance one slice: distance grows, saturating at k."""
    return min(value + 1, k)


def dr_check(value: int, k_prime: int) -> bool:
    """Active in the last ``k_prime`` slices iff distance < k'."""
    return value < k_prime


# --- timestamp ---------------------------------------------------------------

TS_UNSET = (1 << 64) - 1


def ts_set(last_seen: int, t: int) -> int:
    """Record activity in slice ``t``; slice indices may only grow."""
    if last_seen != TS_UNSET and t < last_seen:
        raise ValueError(f"slice {t} precedes stored slice {last_seen}")
    return t


def ts_check(last_seen: int, t: int, k_prime: int) -> bool:
    """Active iff ever set and the last set lies within the window."""
    return last_seen != TS_UNSET and t - last_seen < k_prime
