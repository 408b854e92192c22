"""Differential solver runs, model validation and bug classification."""

from .classify import (
    BugKind,
    BugReport,
    Fingerprint,
    ModelCheck,
    classify,
    comparison_groups,
    decide,
    judge_model,
    model_script,
    parse_model,
    read_bug,
    run_all,
    uses_extensions,
    validate_model,
    write_bug,
)
from .run import Outcome, SolverVerdict, interpret, run_solver
from .solvers import (
    DEFAULT_CRASH_PATTERNS,
    ConfigError,
    SolverCmd,
    SolverConfig,
    load_solver_config,
    parse_solver_config,
)

__all__ = [
    "DEFAULT_CRASH_PATTERNS",
    "BugKind",
    "BugReport",
    "ConfigError",
    "Fingerprint",
    "ModelCheck",
    "Outcome",
    "SolverCmd",
    "SolverConfig",
    "SolverVerdict",
    "classify",
    "comparison_groups",
    "decide",
    "interpret",
    "judge_model",
    "load_solver_config",
    "model_script",
    "parse_model",
    "parse_solver_config",
    "read_bug",
    "run_all",
    "run_solver",
    "uses_extensions",
    "validate_model",
    "write_bug",
]
