"""Command-line interface: generate traces, estimate, ground-truth, bench.

Every command reads or writes plain CSV so results can be diffed and
plotted with anything.  Exit codes: 0 success, 2 configuration error,
3 unreadable or malformed input.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from contextlib import nullcontext

from . import estimator as est
from . import traceio
from .counters import MAX_K
from .errors import ConfigError, TraceError
from .oracle import ExactOracle
from .pipeline import Pipeline
from .pools import AtPool, PARTITIONS, TAIL_REMAINDER

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INPUT = 3

ESTIMATE_HEADER = "slice_end,aip,estimate,z_v,z_p,saturated"
EXACT_HEADER = "slice_end,aip,true_cardinality"
BENCH_HEADER = "slice,ST_us,ET_us,PT_us,cells_maintained,cells_cleared"
COMPARE_HEADER = "slice_end,aip,estimate_at,estimate_dr,estimate_ts,mismatch"


def _fnum(x: float) -> str:
    return repr(float(x))


def _fbool(b: bool) -> str:
    return "true" if b else "false"


def _out_stream(path):
    if path:
        return open(path, "w", encoding="ascii", newline="\n")
    return nullcontext(sys.stdout)


def _default_workers() -> int:
    return os.cpu_count() or 1


def _add_run_flags(p: argparse.ArgumentParser, with_counter=True):
    p.add_argument("--trace", required=True, help="input trace path")
    p.add_argument("--format", choices=traceio.FORMATS, default=traceio.TEXT,
                   help="trace encoding (default text)")
    p.add_argument("--c", type=int, default=20,
                   help="pool holds 2^c counters (default 20)")
    p.add_argument("--g", type=int, default=1024,
                   help="virtual counters per host (default 1024)")
    p.add_argument("--k", type=int, default=30,
                   help="max window width in slices (default 30)")
    p.add_argument("--k-prime", type=int, default=None,
                   help="query window width (default: k)")
    p.add_argument("--slice-us", type=int, default=1_000_000,
                   help="slice duration in microseconds (default 1s)")
    p.add_argument("--seed", type=int, default=0, help="hash seed")
    if with_counter:
        p.add_argument("--counter", choices=est.COUNTER_KINDS, default="at",
                       help="counter family backing the pool (default at)")
    p.add_argument("--partition", choices=PARTITIONS, default=TAIL_REMAINDER,
                   help="pool block partition method")
    p.add_argument("--floor", type=float, default=100.0,
                   help="suppress rows whose value is below this (default 100)")
    p.add_argument("--workers", type=int, default=_default_workers(),
                   help="worker threads (default: available parallelism)")
    p.add_argument("--out", default=None, help="output CSV path (default stdout)")


def _run_params(args):
    k = args.k
    k_prime = args.k_prime if args.k_prime is not None else k
    if not 1 <= k <= MAX_K:
        raise ConfigError(f"k must be in [1, {MAX_K}], got {k}")
    if not 1 <= k_prime <= k:
        raise ConfigError(f"k'={k_prime} must be in [1, k={k}]")
    if args.slice_us <= 0:
        raise ConfigError(f"slice duration must be positive, got {args.slice_us}")
    if args.floor < 0:
        raise ConfigError(f"reporting floor must not be negative, got {args.floor}")
    if args.workers < 1:
        raise ConfigError(f"workers must be at least 1, got {args.workers}")
    return k, k_prime


def _sliced_input(args):
    batches = traceio.read_batches(args.trace, args.format)
    return traceio.slice_stream(batches, args.slice_us)


# --- commands -----------------------------------------------------------------

def cmd_estimate(args) -> int:
    k, k_prime = _run_params(args)
    cfg = est.EstimatorConfig(args.g, args.c, k, args.seed, args.counter,
                              args.partition)
    if (args.checkpoint or args.resume) and args.counter != "at":
        raise ConfigError("checkpoint/resume requires the 'at' counter pool")
    if args.resume:
        pool = AtPool.load(args.resume)
        if (pool.c, pool.k, pool.partition) != (args.c, k, args.partition):
            raise ConfigError(
                f"snapshot {args.resume} was taken with c={pool.c}, k={pool.k}, "
                f"partition={pool.partition}; run flags disagree")
    else:
        pool = cfg.build_pool()
    with _out_stream(args.out) as out, \
            Pipeline(pool, cfg, k_prime, args.floor, args.workers) as pipe:
        out.write(ESTIMATE_HEADER + "\n")
        for t, reports, _ in pipe.run(_sliced_input(args)):
            for r in reports:
                out.write(f"{t},{traceio.format_ipv4(r.host)},"
                          f"{_fnum(r.estimate)},{_fnum(r.z_v)},"
                          f"{_fnum(r.z_p)},{_fbool(r.saturated)}\n")
    if args.checkpoint:
        pool.save(args.checkpoint)
    return EXIT_OK


def cmd_exact(args) -> int:
    k, k_prime = _run_params(args)
    oracle = ExactOracle(k)
    with _out_stream(args.out) as out:
        out.write(EXACT_HEADER + "\n")
        for t, aips, bips in _sliced_input(args):
            oracle.advance_to(t)
            if len(aips):
                oracle.record_batch(aips, bips)
            for aip in oracle.hosts_in_window(k_prime):
                n = oracle.cardinality(aip, k_prime)
                if n >= args.floor:
                    out.write(f"{t},{traceio.format_ipv4(aip)},{n}\n")
    return EXIT_OK


def cmd_bench(args) -> int:
    k, k_prime = _run_params(args)
    cfg = est.EstimatorConfig(args.g, args.c, k, args.seed, args.counter,
                              args.partition)
    pool = cfg.build_pool()
    pairs = 0
    started = time.perf_counter()
    with _out_stream(args.out) as out, \
            Pipeline(pool, cfg, k_prime, args.floor, args.workers) as pipe:
        out.write(BENCH_HEADER + "\n")
        for t, _, stats in pipe.run(_sliced_input(args)):
            pairs += stats.pairs
            out.write(f"{t},{stats.scan_us},{stats.estimate_us},"
                      f"{stats.maintain_us},{stats.cells_maintained},"
                      f"{stats.cells_cleared}\n")
    elapsed = time.perf_counter() - started
    rate = pairs / elapsed if elapsed > 0 else float("inf")
    print(f"processed {pairs} pairs in {elapsed:.3f}s ({rate:,.0f} pairs/s)",
          file=sys.stderr)
    return EXIT_OK


def cmd_compare(args) -> int:
    k, k_prime = _run_params(args)
    results = {}
    maintenance = {}
    bits = {}
    for kind in est.COUNTER_KINDS:
        cfg = est.EstimatorConfig(args.g, args.c, k, args.seed, kind,
                                  args.partition)
        pool = cfg.build_pool()
        rows = {}
        with Pipeline(pool, cfg, k_prime, args.floor, args.workers) as pipe:
            for t, reports, _ in pipe.run(_sliced_input(args)):
                for r in reports:
                    rows[(t, r.host)] = (r.estimate, r.z_v, r.z_p)
        results[kind] = rows
        maintenance[kind] = pipe.total_maintained
        bits[kind] = pool.bits_per_counter
    keys = sorted(set().union(*(results[kind].keys()
                                for kind in est.COUNTER_KINDS)))
    mismatches = 0
    with _out_stream(args.out) as out:
        out.write(COMPARE_HEADER + "\n")
        for key in keys:
            per_kind = [results[kind].get(key) for kind in est.COUNTER_KINDS]
            ok = all(v is not None and v == per_kind[0] for v in per_kind)
            mismatches += not ok
            t, host = key
            cells = [("" if v is None else _fnum(v[0])) for v in per_kind]
            out.write(f"{t},{traceio.format_ipv4(host)},{cells[0]},"
                      f"{cells[1]},{cells[2]},{_fbool(not ok)}\n")
        out.write("# total_maintenance_ops,"
                  + ",".join(f"{kind}={maintenance[kind]}"
                             for kind in est.COUNTER_KINDS) + "\n")
        out.write("# bits_per_counter,"
                  + ",".join(f"{kind}={bits[kind]}"
                             for kind in est.COUNTER_KINDS) + "\n")
        out.write(f"# mismatches,{mismatches}\n")
    return EXIT_OK


def cmd_gen(args) -> int:
    if args.k_prime < 1:
        raise ConfigError(f"k' must be at least 1, got {args.k_prime}")
    span = args.span if args.span is not None else args.k_prime
    if args.plan == "log":
        hosts = traceio.logspace_plan(args.hosts, args.n_min, args.n_max, span)
    else:
        hosts = traceio.pareto_plan(args.hosts, args.n_min, args.n_max,
                                    args.alpha, span, seed=args.seed)
    spec = traceio.SyntheticSpec(hosts=hosts, k_prime=args.k_prime,
                                 repetition=args.repetition,
                                 universe=args.universe,
                                 slice_us=args.slice_us, seed=args.seed)
    summary = traceio.generate_trace_files(spec, args.out, args.format,
                                           args.truth)
    print(f"wrote {summary['records']} records for {summary['hosts']} hosts "
          f"({summary['distinct_pairs']} distinct pairs) across "
          f"{summary['slices']} slices to {args.out}")
    return EXIT_OK


# --- wiring --------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="slidecard",
        description="Sliding-window per-host cardinality estimation over "
                    "IP pair streams")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="stream a trace and emit estimates")
    _add_run_flags(p)
    p.add_argument("--checkpoint", default=None,
                   help="write the pool snapshot here when done ('at' only)")
    p.add_argument("--resume", default=None,
                   help="load a pool snapshot before processing ('at' only)")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("exact", help="emit exact window cardinalities")
    _add_run_flags(p, with_counter=False)
    p.set_defaults(func=cmd_exact)

    p = sub.add_parser("bench", help="per-slice phase timings and maintenance")
    _add_run_flags(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("compare", help="run all counter kinds, flag mismatches")
    _add_run_flags(p, with_counter=False)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("gen", help="generate a synthetic trace with ground truth")
    p.add_argument("--out", required=True, help="trace output path")
    p.add_argument("--truth", required=True, help="ground-truth CSV path")
    p.add_argument("--format", choices=traceio.FORMATS, default=traceio.TEXT)
    p.add_argument("--hosts", type=int, default=100)
    p.add_argument("--n-min", type=int, default=100,
                   help="smallest per-host cardinality")
    p.add_argument("--n-max", type=int, default=5000,
                   help="largest per-host cardinality")
    p.add_argument("--plan", choices=("log", "pareto"), default="log",
                   help="cardinality spacing across hosts")
    p.add_argument("--alpha", type=float, default=1.5,
                   help="pareto tail exponent (plan=pareto)")
    p.add_argument("--span", type=int, default=None,
                   help="slices of activity per host (default: k')")
    p.add_argument("--repetition", type=float, default=1.0,
                   help="mean packets per distinct pair")
    p.add_argument("--universe", type=int, default=1 << 28,
                   help="peer address space size")
    p.add_argument("--slice-us", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--k-prime", type=int, default=30,
                   help="window width the ground truth targets")
    p.set_defaults(func=cmd_gen)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except TraceError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
