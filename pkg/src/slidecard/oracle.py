"""Brute-force ground truth for sliding-window distinct counts.

Keeps the last k slices as literal per-host sets of peer addresses, so
any window question is answered by set union.  Memory is bounded by k
slices of raw pairs; meant for tests and desk-scale traces only.
"""

from __future__ import annotations


class ExactOracle:
    """Ring of the last k per-slice {host -> set of peers} maps."""

    def __init__(self, k: int):
        if k < 1:
            raise ValueError(f"k must be at least 1, got {k}")
        self.k = k
        self.t = 0
        # slice index -> {aip -> set(bip)}; only indices in (t-k, t] kept
        self._slices: dict = {}

    def advance_to(self, t: int) -> None:
        """Move the current slice forward, evicting expired slices."""
        if t < self.t:
            raise ValueError(f"cannot move back from slice {self.t} to {t}")
        self.t = t
        horizon = t - self.k
        for old in [s for s in self._slices if s <= horizon]:
            del self._slices[old]

    def record(self, aip: int, bip: int, t=None) -> None:
        """Note one pair in slice ``t`` (defaults to the current slice)."""
        if t is None:
            t = self.t
        if t > self.t:
            self.advance_to(t)
        elif t < self.t:
            raise ValueError(f"slice {t} is behind the current slice {self.t}")
        self._slices.setdefault(t, {}).setdefault(aip, set()).add(bip)

    def record_batch(self, aips, bips, t=None) -> None:
        if t is not None:
            self.advance_to(max(t, self.t))
        hosts = self._slices.setdefault(self.t, {})
        for a, b in zip(aips, bips):
            hosts.setdefault(int(a), set()).add(int(b))

    def cardinality(self, aip: int, k_prime: int, t=None) -> int:
        """Distinct peers of ``aip`` over the last ``k_prime`` slices.

        Unknown hosts count 0.
        """
        if not 1 <= k_prime <= self.k:
            raise ValueError(f"k'={k_prime} outside [1, {self.k}]")
        if t is None:
            t = self.t
        peers: set = set()
        for s in range(t - k_prime + 1, t + 1):
            hosts = self._slices.get(s)
            if hosts is not None:
                got = hosts.get(aip)
                if got:
                    peers |= got
        return len(peers)

    def hosts_in_window(self, k_prime: int):
        """Sorted hosts with any traffic in the last ``k_prime`` slices."""
        if not 1 <= k_prime <= self.k:
            raise ValueError(f"k'={k_prime} outside [1, {self.k}]")
        seen: set = set()
        for s in range(self.t - k_prime + 1, self.t + 1):
            hosts = self._slices.get(s)
            if hosts is not None:
                seen.update(hosts.keys())
        return sorted(seen)


def counter_active(history, t: int, k_prime: int) -> bool:
    """Would a counter set in the given slices be active at slice ``t``?

    ``history`` lists the slices in which the counter was set; active
    means some set falls within the last ``k_prime`` slices.
    """
    return any(t - k_prime + 1 <= s <= t for s in history)
