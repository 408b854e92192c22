"""Deduplication, reduction and bisection of bug reports."""

from .bisect import (
    BisectResult,
    Build,
    NonMonotone,
    NotFixed,
    NotTriggering,
    bisect,
    bisect_first_fixed,
    linear_first_fixed,
    load_manifest,
    run_budget,
    triggers_on,
)
from .db import BugDatabase, Duplicate, New, dedup
from .fingerprint import crash_signature, fingerprint_crash, fingerprint_report, normalize_stderr, script_theories
from .reduce import ReduceResult, reduce, reproduces, write_interestingness_test

__all__ = [
    "BisectResult",
    "BugDatabase",
    "Build",
    "Duplicate",
    "New",
    "NonMonotone",
    "NotFixed",
    "NotTriggering",
    "ReduceResult",
    "bisect",
    "bisect_first_fixed",
    "crash_signature",
    "dedup",
    "fingerprint_crash",
    "fingerprint_report",
    "linear_first_fixed",
    "load_manifest",
    "normalize_stderr",
    "reduce",
    "reproduces",
    "run_budget",
    "script_theories",
    "triggers_on",
    "write_interestingness_test",
]
