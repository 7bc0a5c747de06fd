"""Trace parsing, time slicing, and synthetic traffic generation.

Two on-disk formats carry the same records: text CSV lines
``timestamp_us,aip,bip`` with dotted-quad addresses, and fixed 16-byte
little-endian binary records (u64 timestamp, u32 aip, u32 bip).
Timestamps must be non-decreasing; a regression is a hard error, since
sliding-window semantics need ordered slices.

The synthetic generator works from an explicit per-host plan so tests
know the exact ground truth: every host's distinct peers all appear
inside its activity span, the span fits inside the query window, and
therefore the window cardinality at the final slice equals the plan.
"""

from __future__ import annotations

from dataclasses import dataclass
from ipaddress import AddressValueError, IPv4Address

import numpy as np

from .errors import ConfigError, TraceOrderError, TraceParseError

RECORD_DTYPE = np.dtype([("ts", "<u8"), ("aip", "<u4"), ("bip", "<u4")])
RECORD_BYTES = RECORD_DTYPE.itemsize

TEXT = "text"
BINARY = "binary"
FORMATS = (TEXT, BINARY)

DEFAULT_BATCH = 1 << 15

TRUTH_HEADER = "aip,window_end_slice,k_prime,true_cardinality"


def parse_ipv4(s: str) -> int:
    """Strict dotted-quad to integer; rejects shorthand and leading zeros."""
    try:
        return int(IPv4Address(s))
    except AddressValueError as exc:
        raise ValueError(f"bad IPv4 address {s!r}: {exc}") from None


def format_ipv4(x: int) -> str:
    x = int(x)
    return f"{x >> 24 & 255}.{x >> 16 & 255}.{x >> 8 & 255}.{x & 255}"


def make_records(ts, aips, bips) -> np.ndarray:
    """Assemble parallel arrays into one structured record array."""
    out = np.empty(len(ts), dtype=RECORD_DTYPE)
    out["ts"] = ts
    out["aip"] = aips
    out["bip"] = bips
    return out


# --- reading -----------------------------------------------------------------

def read_batches(path, fmt: str, batch_size: int = DEFAULT_BATCH):
    """Yield record batches in file order, enforcing timestamp order."""
    if fmt == BINARY:
        return _read_binary(path, batch_size)
    if fmt == TEXT:
        return _read_text(path, batch_size)
    raise ConfigError(f"unknown trace format {fmt!r}")


def read_trace(path, fmt: str) -> np.ndarray:
    """Read a whole trace into one record array (tests and small files)."""
    parts = list(read_batches(path, fmt))
    if not parts:
        return np.empty(0, dtype=RECORD_DTYPE)
    return np.concatenate(parts)


def _read_binary(path, batch_size: int):
    offset = 0
    last_ts = None
    with open(path, "rb") as fh:
        while True:
            data = fh.read(batch_size * RECORD_BYTES)
            if not data:
                return
            extra = len(data) % RECORD_BYTES
            if extra:
                # short reads mid-stream are legal; try to finish the record
                data += fh.read(RECORD_BYTES - extra)
                if len(data) % RECORD_BYTES:
                    raise TraceParseError(
                        "truncated record at end of file",
                        byte=offset + len(data) - len(data) % RECORD_BYTES)
            batch = np.frombuffer(data, dtype=RECORD_DTYPE)
            ts = batch["ts"]
            if last_ts is not None and int(ts[0]) < last_ts:
                raise TraceOrderError(
                    f"timestamp {int(ts[0])} after {last_ts}", byte=offset)
            drops = np.nonzero(ts[1:] < ts[:-1])[0]
            if len(drops):
                i = int(drops[0]) + 1
                raise TraceOrderError(
                    f"timestamp {int(ts[i])} after {int(ts[i - 1])}",
                    byte=offset + i * RECORD_BYTES)
            last_ts = int(ts[-1])
            offset += len(data)
            yield batch


def _read_text(path, batch_size: int):
    ts_buf: list = []
    a_buf: list = []
    b_buf: list = []
    last_ts = None
    with open(path, "r", encoding="ascii", newline=None) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            parts = line.split(",")
            if len(parts) != 3:
                raise TraceParseError(
                    f"expected 3 comma-separated fields, got {len(parts)}",
                    line=lineno)
            try:
                ts = int(parts[0])
            except ValueError:
                raise TraceParseError(
                    f"bad timestamp {parts[0]!r}", line=lineno) from None
            if ts < 0:
                raise TraceParseError(f"negative timestamp {ts}", line=lineno)
            try:
                aip = parse_ipv4(parts[1])
                bip = parse_ipv4(parts[2])
            except ValueError as exc:
                raise TraceParseError(str(exc), line=lineno) from None
            if last_ts is not None and ts < last_ts:
                raise TraceOrderError(
                    f"timestamp {ts} after {last_ts}", line=lineno)
            last_ts = ts
            ts_buf.append(ts)
            a_buf.append(aip)
            b_buf.append(bip)
            if len(ts_buf) >= batch_size:
                yield make_records(ts_buf, a_buf, b_buf)
                ts_buf, a_buf, b_buf = [], [], []
    if ts_buf:
        yield make_records(ts_buf, a_buf, b_buf)


# --- writing -----------------------------------------------------------------

def write_trace(path, records: np.ndarray, fmt: str) -> None:
    if fmt == BINARY:
        with open(path, "wb") as fh:
            fh.write(records.astype(RECORD_DTYPE, copy=False).tobytes())
    elif fmt == TEXT:
        with open(path, "w", encoding="ascii", newline="\n") as fh:
            for r in records:
                fh.write(f"{int(r['ts'])},{format_ipv4(r['aip'])},"
                         f"{format_ipv4(r['bip'])}\n")
    else:
        raise ConfigError(f"unknown trace format {fmt!r}")


def write_truth(path, rows) -> None:
    """Ground-truth CSV: one exact window cardinality per host."""
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(TRUTH_HEADER + "\n")
        for aip, end_slice, k_prime, n in rows:
            fh.write(f"{format_ipv4(aip)},{end_slice},{k_prime},{n}\n")


def read_truth(path):
    rows = []
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().rstrip("\n")
        if header != TRUTH_HEADER:
            raise TraceParseError(f"bad ground-truth header {header!r}", line=1)
        for lineno, line in enumerate(fh, 2):
            parts = line.rstrip("\n").split(",")
            if len(parts) != 4:
                raise TraceParseError("expected 4 fields", line=lineno)
            rows.append((parse_ipv4(parts[0]), int(parts[1]),
                         int(parts[2]), int(parts[3])))
    return rows


# --- slicing -----------------------------------------------------------------

def slice_stream(batches, slice_us: int):
    """Regroup ordered record batches into consecutive whole slices.

    Yields (slice_index, aips, bips) with uint64 address arrays, one
    tuple per slice from the first record's slice through the last,
    including empty slices in between so windows advance correctly.
    The first record's slice is index 0; a timestamp exactly on a
    boundary belongs to the later slice (floor convention).
    """
    if slice_us <= 0:
        raise ConfigError(f"slice duration must be positive, got {slice_us}")
    base = None
    cur = 0
    pend_a: list = []
    pend_b: list = []

    def drain():
        a = np.concatenate(pend_a) if pend_a else np.empty(0, dtype=np.uint64)
        b = np.concatenate(pend_b) if pend_b else np.empty(0, dtype=np.uint64)
        pend_a.clear()
        pend_b.clear()
        return a, b

    for batch in batches:
        if len(batch) == 0:
            continue
        ts = batch["ts"]
        if base is None:
            base = int(ts[0]) // slice_us
        sl = (ts // np.uint64(slice_us)).astype(np.int64) - base
        uniq, starts = np.unique(sl, return_index=True)
        bounds = list(starts) + [len(sl)]
        for i, s in enumerate(uniq):
            while cur < int(s):
                a, b = drain()
                yield cur, a, b
                cur += 1
            seg = slice(bounds[i], bounds[i + 1])
            pend_a.append(batch["aip"][seg].astype(np.uint64))
            pend_b.append(batch["bip"][seg].astype(np.uint64))
    if base is not None:
        a, b = drain()
        yield cur, a, b


# --- synthetic traffic ---------------------------------------------------------

@dataclass(frozen=True)
class HostPlan:
    """One host's target: ``cardinality`` distinct peers spread over the
    last ``span`` slices of the trace."""

    aip: int
    cardinality: int
    span: int


@dataclass(frozen=True)
class SyntheticSpec:
    """A full synthetic trace plan with exact known ground truth."""

    hosts: tuple
    k_prime: int
    repetition: float = 1.0  # mean packets per distinct pair
    universe: int = 1 << 28  # peer address space size
    slice_us: int = 1_000_000
    seed: int = 0

    def __post_init__(self):
        if not self.hosts:
            raise ConfigError("synthetic plan has no hosts")
        if self.k_prime < 1:
            raise ConfigError(f"k' must be at least 1, got {self.k_prime}")
        if self.repetition < 1:
            raise ConfigError(
                f"repetition factor must be at least 1, got {self.repetition}")
        if self.slice_us <= 0:
            raise ConfigError("slice duration must be positive")
        if not 1 <= self.universe <= 1 << 32:
            raise ConfigError(f"universe must be in [1, 2^32], got {self.universe}")
        seen = set()
        for h in self.hosts:
            if not 0 <= h.aip < 1 << 32:
                raise ConfigError(f"aip {h.aip} is not a 32-bit address")
            if h.aip in seen:
                raise ConfigError(f"duplicate host {format_ipv4(h.aip)} in plan")
            seen.add(h.aip)
            if h.cardinality < 1:
                raise ConfigError(
                    f"host {format_ipv4(h.aip)} wants cardinality {h.cardinality}")
            if h.cardinality > self.universe:
                raise ConfigError(
                    f"host {format_ipv4(h.aip)} wants {h.cardinality} distinct "
                    f"peers from a universe of {self.universe}")
            if not 1 <= h.span <= self.k_prime:
                raise ConfigError(
                    f"host {format_ipv4(h.aip)} span {h.span} must lie in "
                    f"[1, k'={self.k_prime}] so the plan equals the window truth")

    @property
    def total_slices(self) -> int:
        return max(h.span for h in self.hosts)


def _distinct_peers(rng, n: int, universe: int) -> np.ndarray:
    """n distinct addresses in [1, universe], deterministic given rng state."""
    if n > universe // 2:
        return rng.permutation(universe).astype(np.uint64)[:n] + np.uint64(1)
    draw = n + n // 8 + 16
    uniq = np.unique(rng.integers(1, universe + 1, size=draw, dtype=np.uint64))
    while len(uniq) < n:
        more = rng.integers(1, universe + 1, size=draw, dtype=np.uint64)
        uniq = np.unique(np.concatenate([uniq, more]))
    return uniq[:n]


def generate_synthetic(spec: SyntheticSpec):
    """Build the trace and its exact ground truth.

    Returns (records, truth_rows): records sorted by timestamp, truth
    rows (aip, window_end_slice, k_prime, cardinality).  Every distinct
    pair appears at least once inside the host's span, and the span ends
    at the trace's final slice, so the window of k' slices ending there
    contains exactly the planned peers.
    """
    rng = np.random.default_rng(spec.seed)
    total = spec.total_slices
    ts_parts = []
    a_parts = []
    b_parts = []
    for h in spec.hosts:
        peers = _distinct_peers(rng, h.cardinality, spec.universe)
        if spec.repetition > 1:
            counts = 1 + rng.poisson(spec.repetition - 1, h.cardinality)
        else:
            counts = np.ones(h.cardinality, dtype=np.int64)
        occ = np.repeat(peers, counts)
        m = len(occ)
        start = total - h.span
        slices = rng.integers(start, total, size=m, dtype=np.int64)
        slices[0] = start  # pin the span start so slice numbering is stable
        ts = slices * spec.slice_us + rng.integers(
            0, spec.slice_us, size=m, dtype=np.int64)
        ts_parts.append(ts.astype(np.uint64))
        a_parts.append(np.full(m, h.aip, dtype=np.uint32))
        b_parts.append(occ.astype(np.uint32))
    ts = np.concatenate(ts_parts)
    order = np.argsort(ts, kind="stable")
    records = make_records(ts[order], np.concatenate(a_parts)[order],
                           np.concatenate(b_parts)[order])
    truth = [(h.aip, total - 1, spec.k_prime, h.cardinality)
             for h in spec.hosts]
    return records, truth


def generate_trace_files(spec: SyntheticSpec, trace_path, fmt: str, truth_path):
    """Generate and write both files; returns a small summary dict."""
    records, truth = generate_synthetic(spec)
    write_trace(trace_path, records, fmt)
    write_truth(truth_path, truth)
    return {
        "hosts": len(spec.hosts),
        "records": len(records),
        "distinct_pairs": sum(h.cardinality for h in spec.hosts),
        "slices": spec.total_slices,
    }


def logspace_plan(num_hosts: int, n_min: int, n_max: int, span: int,
                  base_aip: int = 0x0A000001):
    """Hosts with cardinalities evenly spaced on a log scale."""
    if num_hosts < 1:
        raise ConfigError("need at least one host")
    if not 1 <= n_min <= n_max:
        raise ConfigError(f"bad cardinality range [{n_min}, {n_max}]")
    cards = np.rint(np.geomspace(n_min, n_max, num_hosts)).astype(int)
    return tuple(HostPlan(base_aip + i, max(1, int(n)), span)
                 for i, n in enumerate(cards))


def pareto_plan(num_hosts: int, n_min: int, n_max: int, alpha: float,
                span: int, seed: int = 0, base_aip: int = 0x0A000001):
    """Heavy-tailed cardinalities: most hosts small, a few very large."""
    if num_hosts < 1:
        raise ConfigError("need at least one host")
    if alpha <= 0:
        raise ConfigError(f"alpha must be positive, got {alpha}")
    if not 1 <= n_min <= n_max:
        raise ConfigError(f"bad cardinality range [{n_min}, {n_max}]")
    rng = np.random.default_rng(seed)
    cards = np.minimum(n_min * (1 + rng.pareto(alpha, num_hosts)), n_max)
    cards = np.rint(cards).astype(int)
    return tuple(HostPlan(base_aip + i, max(1, int(n)), span)
                 for i, n in enumerate(cards))
