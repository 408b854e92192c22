"""Language-model assisted construction of theory grammars."""

from .backend import BackendError, HttpBackend, LmBackend, StubBackend, StubScript
from .construct import (
    CorrectionReport,
    FoundryConfig,
    Iteration,
    TheoryDoc,
    TheoryOutcome,
    build_generator,
    build_generators,
    correct,
    dedup_errors,
    distill,
    extract_grammar_text,
    fill_template,
    load_docs,
    normalize_error,
    score,
    summarize_cfg,
    synthesize_generator,
    template,
)

__all__ = [
    "BackendError",
    "CorrectionReport",
    "FoundryConfig",
    "HttpBackend",
    "Iteration",
    "LmBackend",
    "StubBackend",
    "StubScript",
    "TheoryDoc",
    "TheoryOutcome",
    "build_generator",
    "build_generators",
    "correct",
    "dedup_errors",
    "distill",
    "extract_grammar_text",
    "fill_template",
    "load_docs",
    "normalize_error",
    "score",
    "summarize_cfg",
    "synthesize_generator",
    "template",
]
