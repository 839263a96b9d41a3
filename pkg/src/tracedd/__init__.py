"""Trace-based delta debugging for query engines.

Record the queries an inductive learner evaluates, replay them against a
simulated engine, and shrink a failing trace to a 1-minimal one.
"""

from .dataset import Dataset, Example, load_dataset, load_dataset_files
from .ddmin import (
    TestOutcome,
    EntryConditionViolated,
    ddebug,
    ddebug_cached,
    ddebug_composed,
    ddmin,
    verify_one_minimal,
    brute_force_global_min,
)
from .engine import EngineConfig, Effect, FaultSpec, evaluate_query, simulate
from .oracle import CrashOracle, CrashOracleConfig, DiffOracle, DiffOracleConfig, Termination
from .term import parse_term, print_term, unify
from .trace import Granularity, QueryUid, Run, Slice, Trace, load_trace, parse_trace, print_trace

__version__ = "0.1.0"
