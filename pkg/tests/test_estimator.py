"""Estimator arithmetic, hashing plumbing, and cross-kind agreement.

Float expectations are recomputed here with ``math.log`` so the package
and the test cannot share a mistake in the same expression.
"""

import math

import numpy as np
import pytest

from slidecard.errors import ConfigError
from slidecard.estimator import (
    EstimatorConfig,
    cell_of,
    estimate_host,
    estimate_hosts,
    estimate_linear,
    host_cells,
    inactive_virtual_counts,
    pair_cells,
    record_pairs,
    reports_from_counts,
    virtual_slot,
)


def test_config_validation():
    EstimatorConfig(1024, 14, 8)
    with pytest.raises(ConfigError):
        EstimatorConfig(0, 14, 8)
    with pytest.raises(ConfigError):
        EstimatorConfig(1024, 0, 8)
    with pytest.raises(ConfigError):
        EstimatorConfig(1024, 33, 8)
    with pytest.raises(ConfigError):
        EstimatorConfig(2048, 10, 8)  # g exceeds pool size
    with pytest.raises(ConfigError):
        EstimatorConfig(1024, 14, 8, seed=-1)
    with pytest.raises(ConfigError):
        EstimatorConfig(1024, 14, 8, seed=1 << 64)
    with pytest.raises(ConfigError):
        EstimatorConfig(1024, 14, 8, counter_kind="hll")
    with pytest.raises(ConfigError):
        EstimatorConfig(1024, 14, 8, partition="bogus").build_pool()


def test_seed_changes_both_hash_streams():
    a = EstimatorConfig(64, 10, 4, seed=0)
    b = EstimatorConfig(64, 10, 4, seed=1)
    assert a.cell_stream != b.cell_stream
    assert a.group_stream != b.group_stream
    assert a.cell_stream != a.group_stream


def test_slot_and_cell_ranges():
    cfg = EstimatorConfig(64, 10, 4)
    for bip in range(200):
        assert 0 <= virtual_slot(cfg, bip) < 64
    for slot in range(64):
        assert 0 <= cell_of(cfg, 7, slot) < 1 << 10
    with pytest.raises(ValueError):
        cell_of(cfg, 7, 64)


def test_pair_cells_composes_the_scalar_path():
    cfg = EstimatorConfig(64, 12, 4)
    aips = np.array([10, 11, 10, 99], dtype=np.uint64)
    bips = np.array([5, 5, 6, 7], dtype=np.uint64)
    got = pair_cells(cfg, aips, bips)
    want = [cell_of(cfg, int(a), virtual_slot(cfg, int(b)))
            for a, b in zip(aips, bips)]
    assert list(got) == want


def test_host_cells_layout():
    cfg = EstimatorConfig(8, 10, 4)
    cells = host_cells(cfg, np.array([3, 4], dtype=np.uint64))
    assert len(cells) == 16
    assert list(cells[:8]) == [cell_of(cfg, 3, j) for j in range(8)]
    assert list(cells[8:]) == [cell_of(cfg, 4, j) for j in range(8)]


def test_inactive_virtual_counts_matches_direct_mask():
    cfg = EstimatorConfig(32, 10, 4)
    pool = cfg.build_pool()
    rng = np.random.default_rng(2)
    record_pairs(pool, cfg, rng.integers(0, 20, size=300).astype(np.uint64),
                 rng.integers(0, 1000, size=300).astype(np.uint64))
    hosts = np.arange(20, dtype=np.uint64)
    got = inactive_virtual_counts(pool, cfg, hosts, 4)
    for i, aip in enumerate(hosts):
        mask = pool.inactive_mask(host_cells(cfg, np.array([aip])), 4)
        assert got[i] == mask.sum()


# --- the estimate formula -----------------------------------------------------------

def test_linear_estimate_values():
    est, sat = estimate_linear(4096, 2048)
    assert est == pytest.approx(4096 * math.log(2), rel=1e-12)
    assert not sat
    est, sat = estimate_linear(1024, 1024)
    assert est == 0.0 and not sat
    est, sat = estimate_linear(1024, 0)
    assert est == pytest.approx(1024 * math.log(1024), rel=1e-12)
    assert sat
    with pytest.raises(ValueError):
        estimate_linear(1024, 1025)


def _one_report(cfg, g0, pool_inactive, slice_end=4, k_prime=3):
    return reports_from_counts(cfg, np.array([7], dtype=np.uint64),
                               np.array([g0], dtype=np.int64),
                               pool_inactive, slice_end, k_prime)[0]


def test_denoised_estimate_value():
    cfg = EstimatorConfig(1024, 12, 8)
    r = _one_report(cfg, g0=512, pool_inactive=3686)
    want = 1024 * (math.log(3686 / 4096) - math.log(512 / 1024))
    assert r.estimate == pytest.approx(want, rel=1e-12)
    assert r.z_v == 512 / 1024
    assert r.z_p == 3686 / 4096
    assert not r.saturated
    assert r.window_start == 2
    assert r.slice_end == 4


def test_idle_pool_reduces_to_linear():
    cfg = EstimatorConfig(1024, 12, 8)
    r = _one_report(cfg, g0=400, pool_inactive=4096)
    want, _ = estimate_linear(1024, 400)
    assert r.estimate == pytest.approx(want, rel=1e-12)
    assert r.z_p == 1.0


def test_saturated_virtual_vector_clamps():
    cfg = EstimatorConfig(1024, 12, 8)
    r = _one_report(cfg, g0=0, pool_inactive=3686)
    # half-count clamp: z_v treated as 1/(2g)
    want = 1024 * (math.log(3686 / 4096) + math.log(2048))
    assert r.estimate == pytest.approx(want, rel=1e-12)
    assert r.saturated
    assert r.z_v == 0.0  # raw fraction is reported unclamped


def test_saturated_pool_clamps():
    cfg = EstimatorConfig(1024, 12, 8)
    r = _one_report(cfg, g0=512, pool_inactive=0)
    assert r.saturated
    assert r.z_p == 0.0
    assert r.estimate == 0.0  # ln(1/8192) - ln(1/2) is negative, floored


def test_negative_raw_estimate_floors_to_zero():
    cfg = EstimatorConfig(1024, 12, 8)
    # host quieter than the pool average: z_v > z_p
    r = _one_report(cfg, g0=1024, pool_inactive=2048)
    assert r.estimate == 0.0
    assert r.saturated


def test_estimates_never_negative():
    cfg = EstimatorConfig(64, 10, 4)
    rng = np.random.default_rng(3)
    g0 = rng.integers(0, 65, size=200)
    for pool_inactive in (0, 1, 512, 1024):
        reports = reports_from_counts(
            cfg, np.arange(200, dtype=np.uint64), g0, pool_inactive, 0, 1)
        assert all(r.estimate >= 0.0 for r in reports)


# --- end to end over a pool -----------------------------------------------------------

def test_lone_host_estimate_tracks_truth():
    cfg = EstimatorConfig(1024, 14, 8, seed=1)
    pool = cfg.build_pool()
    n = 400
    record_pairs(pool, cfg, np.full(n, 42, dtype=np.uint64),
                 np.arange(1, n + 1, dtype=np.uint64))
    r = estimate_host(pool, cfg, 42, 0, 8)
    assert abs(r.estimate - n) / n < 0.08
    assert not r.saturated


def test_estimate_with_background_noise():
    cfg = EstimatorConfig(1024, 14, 8, seed=1)
    pool = cfg.build_pool()
    n = 400
    record_pairs(pool, cfg, np.full(n, 42, dtype=np.uint64),
                 np.arange(1, n + 1, dtype=np.uint64))
    rng = np.random.default_rng(7)
    for host in range(1000, 1050):
        peers = rng.integers(1, 1 << 24, size=300).astype(np.uint64)
        record_pairs(pool, cfg, np.full(300, host, dtype=np.uint64), peers)
    r = estimate_host(pool, cfg, 42, 0, 8)
    # pool is about half full; the de-noising keeps the host on target
    assert r.z_p < 0.6
    assert abs(r.estimate - n) / n < 0.12


def test_duplicate_pairs_do_not_inflate():
    cfg = EstimatorConfig(256, 12, 4, seed=2)
    pool = cfg.build_pool()
    aips = np.full(500, 9, dtype=np.uint64)
    bips = np.arange(50, dtype=np.uint64)[np.arange(500) % 50]
    record_pairs(pool, cfg, aips, bips)
    once = cfg.build_pool()
    record_pairs(once, cfg, np.full(50, 9, dtype=np.uint64),
                 np.arange(50, dtype=np.uint64))
    a = estimate_host(pool, cfg, 9, 0, 4)
    b = estimate_host(once, cfg, 9, 0, 4)
    assert a.estimate == b.estimate


def test_order_independence_within_slice():
    cfg = EstimatorConfig(128, 12, 4, seed=3)
    rng = np.random.default_rng(4)
    aips = rng.integers(0, 30, size=2000).astype(np.uint64)
    bips = rng.integers(0, 5000, size=2000).astype(np.uint64)
    perm = rng.permutation(2000)
    a_pool = cfg.build_pool()
    record_pairs(a_pool, cfg, aips, bips)
    b_pool = cfg.build_pool()
    record_pairs(b_pool, cfg, aips[perm], bips[perm])
    hosts = np.arange(30, dtype=np.uint64)
    ra = estimate_hosts(a_pool, cfg, hosts, 0, 4)
    rb = estimate_hosts(b_pool, cfg, hosts, 0, 4)
    assert ra == rb


def test_counter_kinds_agree_bit_for_bit():
    rng = np.random.default_rng(8)
    slices = [
        (rng.integers(0, 40, size=800).astype(np.uint64),
         rng.integers(0, 20_000, size=800).astype(np.uint64))
        for _ in range(12)
    ]
    hosts = np.arange(40, dtype=np.uint64)
    per_kind = {}
    for kind in ("at", "dr", "ts"):
        cfg = EstimatorConfig(256, 13, 6, seed=5, counter_kind=kind)
        pool = cfg.build_pool()
        out = []
        for t, (aips, bips) in enumerate(slices):
            record_pairs(pool, cfg, aips, bips)
            for w in (1, 3, 6):
                for r in estimate_hosts(pool, cfg, hosts, t, w):
                    out.append((t, w, r.host, r.estimate, r.z_v, r.z_p,
                                r.saturated))
            pool.advance_slice()
        per_kind[kind] = out
    assert per_kind["at"] == per_kind["dr"]
    assert per_kind["at"] == per_kind["ts"]
