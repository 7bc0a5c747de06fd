"""Sliding-window per-host cardinality estimation over IP pair streams.

The pool of bit-packed asynchronous-timestamp counters answers "how
many distinct peers did this host talk to in the last k' time slices"
with O(1/k) amortized maintenance per counter per slice.  Rival counter
pools (distance recorder, plain timestamp) and a brute-force oracle
back the equivalence and accuracy tests.
"""

from .counters import WindowConfig
from .errors import ConfigError, TraceError, TraceOrderError, TraceParseError
from .estimator import (EstimateReport, EstimatorConfig, estimate_host,
                        estimate_hosts, estimate_linear, record_pairs)
from .oracle import ExactOracle
from .pipeline import Pipeline
from .pools import AtPool, DrPool, MaintenanceReport, TsPool, make_pool
from .traceio import (HostPlan, SyntheticSpec, generate_synthetic,
                      logspace_plan, pareto_plan, read_trace, slice_stream,
                      write_trace)

__version__ = "0.1.0"

__all__ = [
    "AtPool",
    "ConfigError",
    "DrPool",
    "EstimateReport",
    "EstimatorConfig",
    "ExactOracle",
    "HostPlan",
    "MaintenanceReport",
    "Pipeline",
    "SyntheticSpec",
    "TraceError",
    "TraceOrderError",
    "TraceParseError",
    "TsPool",
    "WindowConfig",
    "estimate_host",
    "estimate_hosts",
    "estimate_linear",
    "generate_synthetic",
    "logspace_plan",
    "make_pool",
    "pareto_plan",
    "read_trace",
    "record_pairs",
    "slice_stream",
    "write_trace",
]
