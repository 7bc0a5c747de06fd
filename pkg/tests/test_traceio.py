"""Trace parsing, slicing, and the synthetic generator's ground truth."""

import numpy as np
import pytest

from slidecard.errors import ConfigError, TraceOrderError, TraceParseError
from slidecard.oracle import ExactOracle
from slidecard import traceio
from slidecard.traceio import (
    BINARY,
    TEXT,
    HostPlan,
    SyntheticSpec,
    format_ipv4,
    generate_synthetic,
    generate_trace_files,
    logspace_plan,
    make_records,
    parse_ipv4,
    pareto_plan,
    read_trace,
    read_truth,
    slice_stream,
    write_trace,
    write_truth,
)


# --- addresses ------------------------------------------------------------------

def test_parse_ipv4_values():
    assert parse_ipv4("10.1.2.3") == 0x0A010203
    assert parse_ipv4("0.0.0.0") == 0
    assert parse_ipv4("255.255.255.255") == 0xFFFFFFFF


@pytest.mark.parametrize("bad", ["10.1.2", "10.1.2.3.4", "256.0.0.1",
                                 "abc", "", "01.2.3.4", "1.2.3.-4"])
def test_parse_ipv4_rejects(bad):
    with pytest.raises(ValueError):
        parse_ipv4(bad)


def test_format_parse_roundtrip():
    for x in (0, 1, 0x0A010203, 0xCB007107, 0xFFFFFFFF):
        assert parse_ipv4(format_ipv4(x)) == x


# --- reading and writing -------------------------------------------------------------

def test_text_line_example(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("1508731200000000,10.1.2.3,203.0.113.7\n")
    rec = read_trace(p, TEXT)
    assert len(rec) == 1
    assert int(rec["ts"][0]) == 1508731200000000
    assert int(rec["aip"][0]) == parse_ipv4("10.1.2.3")
    assert int(rec["bip"][0]) == parse_ipv4("203.0.113.7")


def test_empty_input_is_empty_stream(tmp_path):
    p = tmp_path / "empty"
    p.write_bytes(b"")
    assert len(read_trace(p, TEXT)) == 0
    assert len(read_trace(p, BINARY)) == 0
    assert list(slice_stream(traceio.read_batches(p, TEXT), 1_000_000)) == []


def _random_records(n, seed=0):
    rng = np.random.default_rng(seed)
    ts = np.sort(rng.integers(0, 10_000_000, size=n).astype(np.uint64))
    return make_records(ts,
                        rng.integers(0, 1 << 32, size=n, dtype=np.uint64),
                        rng.integers(0, 1 << 32, size=n, dtype=np.uint64))


@pytest.mark.parametrize("fmt", [TEXT, BINARY])
def test_write_read_roundtrip(fmt, tmp_path):
    records = _random_records(1000)
    p = tmp_path / "trace"
    write_trace(p, records, fmt)
    back = read_trace(p, fmt)
    assert np.array_equal(back, records)


def test_binary_batching_preserves_order(tmp_path):
    records = _random_records(997)
    p = tmp_path / "trace.bin"
    write_trace(p, records, BINARY)
    parts = list(traceio.read_batches(p, BINARY, batch_size=100))
    assert sum(len(b) for b in parts) == 997
    assert np.array_equal(np.concatenate(parts), records)


def test_unknown_format_rejected(tmp_path):
    p = tmp_path / "x"
    p.write_bytes(b"")
    with pytest.raises(ConfigError):
        read_trace(p, "pcap")
    with pytest.raises(ConfigError):
        write_trace(p, _random_records(1), "pcap")


def test_text_errors_carry_line_numbers(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("1,10.0.0.1,10.0.0.2\n2,10.0.0.1\n")
    with pytest.raises(TraceParseError) as err:
        read_trace(p, TEXT)
    assert err.value.line == 2

    p.write_text("1,10.0.0.1,999.0.0.2\n")
    with pytest.raises(TraceParseError) as err:
        read_trace(p, TEXT)
    assert err.value.line == 1

    p.write_text("xyz,10.0.0.1,10.0.0.2\n")
    with pytest.raises(TraceParseError):
        read_trace(p, TEXT)

    p.write_text("-5,10.0.0.1,10.0.0.2\n")
    with pytest.raises(TraceParseError):
        read_trace(p, TEXT)


def test_text_order_violation(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("5,10.0.0.1,10.0.0.2\n3,10.0.0.1,10.0.0.2\n")
    with pytest.raises(TraceOrderError) as err:
        read_trace(p, TEXT)
    assert err.value.line == 2


def test_binary_truncation_carries_byte_offset(tmp_path):
    records = _random_records(3)
    p = tmp_path / "cut.bin"
    p.write_bytes(records.tobytes()[:40])  # 2.5 records
    with pytest.raises(TraceParseError) as err:
        read_trace(p, BINARY)
    assert err.value.byte == 32


def test_binary_order_violation(tmp_path):
    records = _random_records(10)
    records["ts"][4] = 0  # force a regression mid-batch
    p = tmp_path / "bad.bin"
    p.write_bytes(records.tobytes())
    with pytest.raises(TraceOrderError):
        read_trace(p, BINARY)


def test_truth_roundtrip(tmp_path):
    rows = [(parse_ipv4("10.0.0.1"), 29, 30, 123),
            (parse_ipv4("10.0.0.2"), 29, 30, 4567)]
    p = tmp_path / "truth.csv"
    write_truth(p, rows)
    assert read_truth(p) == rows


def test_truth_rejects_bad_header(tmp_path):
    p = tmp_path / "truth.csv"
    p.write_text("nope\n")
    with pytest.raises(TraceParseError):
        read_truth(p)


# --- slicing --------------------------------------------------------------------------

def _slices_of(records, slice_us):
    return list(slice_stream(iter([records]), slice_us))


def test_slice_indices_and_empty_gap():
    # records at 0.5 s and 2.5 s with 1 s slices: indices 0 and 2, with
    # the empty slice 1 emitted in between
    records = make_records([500_000, 2_500_000], [1, 2], [7, 8])
    got = _slices_of(records, 1_000_000)
    assert [t for t, _, _ in got] == [0, 1, 2]
    assert [len(a) for _, a, _ in got] == [1, 0, 1]
    assert int(got[2][1][0]) == 2


def test_slice_origin_truncates_first_timestamp():
    # first record at 1.5 s: the slice grid starts at 1.0 s, so a record
    # at 2.2 s is one slice later
    records = make_records([1_500_000, 2_200_000], [1, 2], [7, 8])
    got = _slices_of(records, 1_000_000)
    assert [t for t, _, _ in got] == [0, 1]


def test_slice_boundary_belongs_to_later_slice():
    records = make_records([0, 999_999, 1_000_000], [1, 2, 3], [7, 8, 9])
    got = _slices_of(records, 1_000_000)
    assert [len(a) for _, a, _ in got] == [2, 1]
    assert int(got[1][1][0]) == 3


def test_slices_assembled_across_batches():
    records = _random_records(2000, seed=5)
    whole = _slices_of(records, 100_000)
    batched = list(slice_stream(
        iter([records[:701], records[701:1402], records[1402:]]), 100_000))
    assert len(batched) == len(whole)
    for (t1, a1, b1), (t2, a2, b2) in zip(batched, whole):
        assert t1 == t2
        assert np.array_equal(a1, a2)
        assert np.array_equal(b1, b2)


def test_slice_stream_rejects_bad_duration():
    with pytest.raises(ConfigError):
        list(slice_stream(iter([]), 0))


# --- synthetic traffic -------------------------------------------------------------------

def _small_spec(seed=3, repetition=2.0):
    plan = logspace_plan(15, 5, 60, span=6)
    return SyntheticSpec(hosts=plan, k_prime=6, repetition=repetition,
                         universe=10_000, seed=seed)


def test_synthetic_truth_matches_exact_oracle():
    spec = _small_spec()
    records, truth = generate_synthetic(spec)
    oracle = ExactOracle(spec.k_prime)
    for t, aips, bips in _slices_of(records, spec.slice_us):
        oracle.advance_to(t)
        if len(aips):
            oracle.record_batch(aips, bips)
    for aip, end_slice, k_prime, n in truth:
        assert end_slice == spec.total_slices - 1
        assert k_prime == spec.k_prime
        assert oracle.cardinality(aip, k_prime) == n


def test_synthetic_is_deterministic():
    a, _ = generate_synthetic(_small_spec(seed=9))
    b, _ = generate_synthetic(_small_spec(seed=9))
    c, _ = generate_synthetic(_small_spec(seed=10))
    assert a.tobytes() == b.tobytes()
    assert a.tobytes() != c.tobytes()


def test_synthetic_repetition_factor():
    plan = logspace_plan(30, 50, 400, span=5)
    spec = SyntheticSpec(hosts=plan, k_prime=5, repetition=3.0, seed=0)
    records, _ = generate_synthetic(spec)
    distinct = sum(h.cardinality for h in plan)
    assert abs(len(records) / distinct - 3.0) < 0.15


def test_synthetic_timestamps_sorted_and_in_span():
    spec = _small_spec()
    records, _ = generate_synthetic(spec)
    ts = records["ts"].astype(np.int64)
    assert np.all(np.diff(ts) >= 0)
    assert ts.min() >= 0
    assert ts.max() < spec.total_slices * spec.slice_us


def test_synthetic_peers_stay_in_universe():
    spec = _small_spec()
    records, _ = generate_synthetic(spec)
    bips = records["bip"].astype(np.int64)
    assert bips.min() >= 1
    assert bips.max() <= spec.universe


def test_infeasible_plans_rejected():
    with pytest.raises(ConfigError):
        SyntheticSpec(hosts=(), k_prime=4)
    with pytest.raises(ConfigError):
        SyntheticSpec(hosts=(HostPlan(1, 50, 5),), k_prime=4)  # span > k'
    with pytest.raises(ConfigError):
        SyntheticSpec(hosts=(HostPlan(1, 50, 2),), k_prime=4, universe=10)
    with pytest.raises(ConfigError):
        SyntheticSpec(hosts=(HostPlan(1, 0, 2),), k_prime=4)
    with pytest.raises(ConfigError):
        SyntheticSpec(hosts=(HostPlan(1, 5, 2), HostPlan(1, 5, 2)), k_prime=4)
    with pytest.raises(ConfigError):
        SyntheticSpec(hosts=(HostPlan(1, 5, 2),), k_prime=4, repetition=0.5)
    with pytest.raises(ConfigError):
        SyntheticSpec(hosts=(HostPlan(1, 5, 2),), k_prime=4, universe=1 << 33)


def test_generate_trace_files_summary(tmp_path):
    spec = _small_spec()
    summary = generate_trace_files(spec, tmp_path / "t.bin", BINARY,
                                   tmp_path / "truth.csv")
    assert summary["hosts"] == 15
    assert summary["slices"] == 6
    assert summary["distinct_pairs"] == sum(h.cardinality for h in spec.hosts)
    assert len(read_trace(tmp_path / "t.bin", BINARY)) == summary["records"]
    truth = read_truth(tmp_path / "truth.csv")
    assert {r[0] for r in truth} == {h.aip for h in spec.hosts}


# --- host plans ------------------------------------------------------------------------

def test_logspace_plan_endpoints():
    plan = logspace_plan(10, 100, 5000, span=4)
    cards = [h.cardinality for h in plan]
    assert cards[0] == 100
    assert cards[-1] == 5000
    assert cards == sorted(cards)
    assert len({h.aip for h in plan}) == 10


def test_pareto_plan_bounds():
    plan = pareto_plan(200, 50, 2000, alpha=1.2, span=4, seed=1)
    cards = [h.cardinality for h in plan]
    assert min(cards) >= 50
    assert max(cards) <= 2000
    assert len(plan) == 200


def test_plan_validation():
    with pytest.raises(ConfigError):
        logspace_plan(0, 1, 10, span=2)
    with pytest.raises(ConfigError):
        logspace_plan(5, 10, 1, span=2)
    with pytest.raises(ConfigError):
        pareto_plan(5, 10, 100, alpha=0.0, span=2)
