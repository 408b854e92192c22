"""Generator construction: summarize, synthesize, then self-correct."""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable, Sequence

from ..difftest.run import Outcome, run_solver
from ..difftest.solvers import SolverCmd
from ..smtlib import ParseError, SortError, check_script, parse_script
from ..termgen import DepthExhaustion, GrammarError, TheoryGrammar, load_grammar, probe_texts
from .backend import BackendError, LmBackend

log = logging.getLogger(__name__)


def template(name: str) -> str:
    return (resources.files("skelfuzz.foundry") / "prompts" / f"{name}.txt").read_text(encoding="utf-8")


def fill_template(text: str, **slots: str) -> str:
    # plain replacement: grammar text is full of braces and parentheses
    for key, value in slots.items():
        text = text.replace("{" + key + "}", value)
    return text


@dataclass(frozen=True)
class TheoryDoc:
    theory_name: str
    text: str
    source: str = ""

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError(f"documentation for {self.theory_name} is empty")


def load_docs(directory: str | Path) -> list[TheoryDoc]:
    """One document per ``*.md``/``*.txt`` file; the stem names the theory."""
    directory = Path(directory)
    paths = sorted(p for p in directory.iterdir() if p.suffix in (".md", ".txt") and p.is_file())
    if not paths:
        raise ValueError(f"no theory documentation in {directory}")
    return [TheoryDoc(p.stem, p.read_text(encoding="utf-8"), str(p)) for p in paths]


@dataclass(frozen=True)
class FoundryConfig:
    sample_num: int = 20
    max_iter: int = 10
    solvers: tuple[SolverCmd, ...] = ()
    seed: int = 0
    distill_with_lm: bool = False
    temperature: float = 0.2

    def __post_init__(self):
        if self.sample_num < 1:
            raise ValueError("sample_num must be at least 1")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")


@dataclass
class Iteration:
    valid_count: int
    errors: list[str]
    grammar_snapshot: str

    def to_json(self) -> dict:
        return {"valid_count": self.valid_count, "errors": self.errors, "grammar_snapshot": self.grammar_snapshot}


@dataclass
class CorrectionReport:
    iterations: list[Iteration] = field(default_factory=list)
    final_grammar: str | None = None
    best_iteration: int | None = None  # 1-based
    converged: bool = False
    refinements: int = 0

    @property
    def best_valid(self) -> int:
        return max((it.valid_count for it in self.iterations), default=0)

    def to_json(self) -> dict:
        return {
            "iterations": [it.to_json() for it in self.iterations],
            "final_grammar": self.final_grammar,
            "best_iteration": self.best_iteration,
            "best_valid": self.best_valid,
            "converged": self.converged,
            "refinements": self.refinements,
        }


# ---------------------------------------------------------------- LM steps


def summarize_cfg(doc: TheoryDoc, lm: LmBackend, temperature: float = 0.2) -> str:
    prompt = fill_template(template("summarize"), DOC=doc.text, FORMAT=template("grammar_format"))
    return lm.complete(prompt, temperature)


def synthesize_generator(cfg_text: str, lm: LmBackend, temperature: float = 0.2) -> str:
    prompt = fill_template(template("synthesize"), CFG=cfg_text, FORMAT=template("grammar_format"))
    return lm.complete(prompt, temperature)


_FENCE = re.compile(r"```[a-zA-Z0-9_-]*\n(.*?)```", re.S)


def extract_grammar_text(completion: str) -> str:
    """Grammar text from a completion; strips a Markdown code fence when the
    grammar is wrapped in one."""
    m = _FENCE.search(completion)
    return (m.group(1) if m else completion).strip()


# ---------------------------------------------------------------- scoring

_NORMALIZE = [
    (re.compile(r"line \d+ column \d+:?\s*"), ""),
    (re.compile(r"\b(int|real|str|bv|bool|arr)\d+\b"), r"\1<n>"),
    (re.compile(r"#b[01]+|#x[0-9a-fA-F]+"), "<bv>"),
    (re.compile(r"\"(?:[^\"]|\"\")*\""), "<str>"),
    (re.compile(r"\b\d+(\.\d+)?\b"), "<num>"),
    (re.compile(r"\s+"), " "),
]


def normalize_error(msg: str) -> str:
    for rx, rep in _NORMALIZE:
        msg = rx.sub(rep, msg)
    return msg.strip()


def dedup_errors(messages: Sequence[str]) -> list[str]:
    seen: dict[str, str] = {}
    for m in messages:
        seen.setdefault(normalize_error(m), m.strip())
    return list(seen.values())


def solver_accepts(probe_text: str, solvers: Sequence[SolverCmd]) -> tuple[bool, list[str]]:
    """At least one solver runs the probe without an error diagnostic."""
    errors = []
    for cmd in solvers:
        v = run_solver(cmd, probe_text)
        if v.outcome is not Outcome.PARSE_REJECTED:
            return True, []
        errors.append(f"{cmd.name}: {v.message}")
    return False, errors


def score(grammar_text: str, config: FoundryConfig) -> tuple[int, list[str], TheoryGrammar | None]:
    """Valid-term count over ``config.sample_num`` samples, the raw error
    messages, and the loaded grammar (``None`` when it does not load)."""
    try:
        g = load_grammar(extract_grammar_text(grammar_text))
    except GrammarError as e:
        return 0, [f"grammar rejected: {e}"], None
    valid = 0
    errors: list[str] = []
    for text in probe_texts(g, config.sample_num, config.seed):
        if isinstance(text, DepthExhaustion):
            errors.append(str(text))
            continue
        try:
            check_script(parse_script(text))
        except (ParseError, SortError) as e:
            errors.append(str(e))
            continue
        if config.solvers:
            ok, errs = solver_accepts(text, config.solvers)
            if not ok:
                errors.extend(errs)
                continue
        valid += 1
    return valid, errors, g


def distill(errors: list[str], lm: LmBackend | None, config: FoundryConfig) -> list[str]:
    unique = dedup_errors(errors)
    if lm is None or not config.distill_with_lm or len(unique) < 2:
        return unique
    reply = lm.complete(fill_template(template("distill"), ERRORS="\n".join(unique)), config.temperature)
    lines = [ln.strip(" -*\t") for ln in reply.splitlines()]
    return [ln for ln in lines if ln] or unique


# ---------------------------------------------------------------- correction loop


def correct(
    grammar_text: str, lm: LmBackend, config: FoundryConfig = FoundryConfig()
) -> tuple[TheoryGrammar | None, CorrectionReport]:
    """Check-and-correct loop.

    Each iteration scores the current grammar on ``sample_num`` samples; if
    some are invalid, the deduplicated errors go back to the model for a
    refined grammar. Stops when every sample is valid or after ``max_iter``
    iterations and returns the first grammar with the highest valid count.
    No refinement is requested after the last iteration.
    """
    report = CorrectionReport()
    current = grammar_text
    best_text, best_grammar, max_valid = grammar_text, None, 0
    it = 0
    try:
        while max_valid < config.sample_num and it < config.max_iter:
            it += 1
            valid, errors, g = score(current, config)
            unique = dedup_errors(errors)
            report.iterations.append(Iteration(valid, unique, current))
            # the first iteration scores the initial grammar, which is the
            # default best; later ones must be strictly better
            if valid > max_valid or report.best_iteration is None:
                max_valid = max(max_valid, valid)
                best_text, best_grammar = current, g
                report.best_iteration = it
            if valid < config.sample_num and it < config.max_iter:
                prompt = fill_template(
                    template("refine"),
                    CFG=extract_grammar_text(current),
                    ERRORS="\n".join(f"- {e}" for e in distill(errors, lm, config)),
                    FORMAT=template("grammar_format"),
                )
                current = lm.complete(prompt, config.temperature)
                report.refinements += 1
    except BackendError as e:
        report.final_grammar = best_text
        report.converged = max_valid == config.sample_num
        e.report = report
        raise
    report.final_grammar = best_text
    report.converged = max_valid == config.sample_num
    return best_grammar, report


# ---------------------------------------------------------------- pipeline


@dataclass
class TheoryOutcome:
    theory: str
    grammar_path: Path | None
    report: CorrectionReport | None
    error: str | None = None


def build_generator(doc: TheoryDoc, lm: LmBackend, config: FoundryConfig) -> tuple[TheoryGrammar | None, CorrectionReport]:
    cfg = summarize_cfg(doc, lm, config.temperature)
    gen = synthesize_generator(cfg, lm, config.temperature)
    return correct(gen, lm, config)


def build_generators(
    docs: Sequence[TheoryDoc],
    session: Callable[[str], LmBackend],
    config: FoundryConfig,
    out_dir: str | Path,
) -> list[TheoryOutcome]:
    """Run the whole construction per theory. Writes ``<theory>.smtg`` for
    every theory whose best grammar loads, plus ``report.json``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    outcomes = []
    for doc in docs:
        try:
            g, rep = build_generator(doc, session(doc.theory_name), config)
        except BackendError as e:
            log.error("%s: %s", doc.theory_name, e)
            outcomes.append(TheoryOutcome(doc.theory_name, None, e.report, str(e)))
            continue
        path = None
        if g is not None and rep.final_grammar is not None:
            path = out_dir / f"{doc.theory_name}.smtg"
            path.write_text(extract_grammar_text(rep.final_grammar) + "\n", encoding="utf-8")
        outcomes.append(TheoryOutcome(doc.theory_name, path, rep))
    summary = {
        o.theory: {
            "grammar": str(o.grammar_path) if o.grammar_path else None,
            "error": o.error,
            "report": o.report.to_json() if o.report else None,
        }
        for o in outcomes
    }
    (out_dir / "report.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return outcomes
