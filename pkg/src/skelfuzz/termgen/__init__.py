"""Grammar-driven Boolean term generation."""

from .generate import (
    BUILTIN_THEORIES,
    DepthExhaustion,
    GeneratedTerm,
    GeneratorSet,
    adapt_variables,
    builtin_grammars,
    draw_samples,
    generate,
    literal,
    load_grammar_dir,
    probe_script,
    probe_texts,
    select,
    var_prefix,
)
from .grammar import GrammarError, Production, TheoryGrammar, load_grammar, parse_grammar, validate

__all__ = [
    "BUILTIN_THEORIES",
    "DepthExhaustion",
    "GeneratedTerm",
    "GeneratorSet",
    "GrammarError",
    "Production",
    "TheoryGrammar",
    "adapt_variables",
    "builtin_grammars",
    "draw_samples",
    "generate",
    "literal",
    "load_grammar",
    "load_grammar_dir",
    "parse_grammar",
    "probe_script",
    "probe_texts",
    "select",
    "validate",
    "var_prefix",
]
