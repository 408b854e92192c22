"""Bug classification: crashes, soundness discrepancies and invalid models."""

from __future__ import annotations

import enum
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Sequence

from ..smtlib import (
    Assert,
    CheckSat,
    Command,
    DeclareConst,
    DeclareFun,
    DefineFun,
    GetModel,
    ParseError,
    Passthrough,
    Script,
    SortError,
    check_script,
    parse_command,
    parse_script,
    print_script,
    theories_of,
)
from ..smtlib.sexpr import Atom, SList, read_sexprs, to_text
from .run import Outcome, SolverVerdict, run_solver
from .solvers import DEFAULT_CRASH_PATTERNS, SolverCmd

log = logging.getLogger(__name__)


class BugKind(str, enum.Enum):
    CRASH = "crash"
    SOUNDNESS = "soundness"
    INVALID_MODEL = "invalid_model"


class ModelCheck(str, enum.Enum):
    CONFIRMED = "confirmed"
    REFUTED = "refuted"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class Fingerprint:
    kind: BugKind
    signature: str

    @property
    def key(self) -> str:
        return f"{self.kind.value}:{self.signature}"

    def __str__(self):
        return self.key

    @classmethod
    def parse(cls, key: str) -> "Fingerprint":
        kind, _, sig = key.partition(":")
        return cls(BugKind(kind), sig)


@dataclass
class BugReport:
    kind: BugKind
    script: Script
    verdicts: dict[str, SolverVerdict]
    fingerprint: Fingerprint
    implicated: str
    model_check: ModelCheck | None = None
    meta: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "kind": self.kind.value,
            "fingerprint": self.fingerprint.key,
            "implicated": self.implicated,
            "model_check": self.model_check.value if self.model_check else None,
            "verdicts": {k: v.to_json() for k, v in self.verdicts.items()},
            "script": print_script(self.script),
            "meta": self.meta,
        }

    @classmethod
    def from_json(cls, d: dict) -> "BugReport":
        return cls(
            BugKind(d["kind"]),
            parse_script(d["script"]),
            {k: SolverVerdict.from_json(v) for k, v in d["verdicts"].items()},
            Fingerprint.parse(d["fingerprint"]),
            d["implicated"],
            ModelCheck(d["model_check"]) if d.get("model_check") else None,
            d.get("meta", {}),
        )


# ---------------------------------------------------------------- models


def parse_model(text: str) -> list[Command]:
    """Model output as commands. Accepts ``(model ...)``, a bare
    parenthesized list, or a plain sequence of ``define-fun`` forms."""
    nodes = read_sexprs(text)
    if len(nodes) == 1 and isinstance(nodes[0], SList):
        items = nodes[0].items
        if items and isinstance(items[0], Atom) and items[0].text == "model":
            nodes = list(items[1:])
        elif all(isinstance(i, SList) for i in items) and not (items and isinstance(items[0], Atom)):
            nodes = list(items)
    out = []
    for n in nodes:
        cmd = parse_command(to_text(n))
        if isinstance(cmd, DefineFun) or (isinstance(cmd, Passthrough) and cmd.head == "define-fun-rec"):
            out.append(cmd)
        elif isinstance(cmd, (DeclareFun, DeclareConst)):
            out.append(cmd)  # abstract values of uninterpreted sorts
        elif isinstance(cmd, Passthrough) and cmd.head in ("declare-sort", "forall"):
            continue  # cardinality constraints are not needed for evaluation
        else:
            raise ParseError(f"unexpected model entry {to_text(n)[:60]}", 1, 1, to_text(n)[:20])
    return out


def model_script(s: Script, model: Sequence[Command]) -> Script:
    """``s`` with every declaration that the model defines replaced by the
    model's definition. Symbols the model omits stay declared."""
    defs = {c.name: c for c in model if isinstance(c, DefineFun)}
    extra = [c for c in model if not isinstance(c, DefineFun)]
    cmds: list[Command] = []
    inserted = False
    for c in s.commands:
        if isinstance(c, GetModel):
            continue
        if isinstance(c, (DeclareFun, DeclareConst)) and c.name in defs:
            if not inserted:
                cmds.extend(extra)
                inserted = True
            cmds.append(defs[c.name])
            continue
        cmds.append(c)
    if not any(isinstance(c, CheckSat) for c in cmds):
        cmds.append(CheckSat())
    return Script(tuple(cmds))


Runner = Callable[[SolverCmd, Script], SolverVerdict]


def _default_runner(crash_patterns):
    return lambda cmd, s: run_solver(cmd, s, False, crash_patterns)


def judge_model(results: Mapping[str, Outcome], producer: str | None) -> ModelCheck:
    """All sat confirms; unsat from the producer or from every validator
    refutes; anything else is inconclusive."""
    if not results:
        return ModelCheck.INCONCLUSIVE
    values = list(results.values())
    if all(v is Outcome.SAT for v in values):
        return ModelCheck.CONFIRMED
    if (producer is not None and results.get(producer) is Outcome.UNSAT) or all(v is Outcome.UNSAT for v in values):
        return ModelCheck.REFUTED
    return ModelCheck.INCONCLUSIVE


def validate_model(
    s: Script,
    model_text: str,
    solvers: Sequence[SolverCmd],
    producer: str | None = None,
    runner: Runner | None = None,
) -> ModelCheck:
    """Substitute the model into ``s`` and let every solver evaluate it."""
    try:
        model = parse_model(model_text)
        vs = model_script(s, model)
        check_script(parse_script(print_script(vs)))
    except (ParseError, SortError) as e:
        log.warning("unusable model from %s: %s", producer or "solver", e)
        return ModelCheck.INCONCLUSIVE
    runner = runner or _default_runner(DEFAULT_CRASH_PATTERNS)
    results = {cmd.name: runner(cmd, vs).outcome for cmd in solvers}
    return judge_model(results, producer)


# ---------------------------------------------------------------- decisions


def decide(
    verdicts: Mapping[str, SolverVerdict], model_checks: Mapping[str, ModelCheck]
) -> list[tuple[BugKind, str]]:
    """Pure classification.

    ``model_checks`` maps each sat-answering solver to the outcome of
    validating its model. Returns ``(kind, implicated solver)`` pairs in
    solver order; an empty list means no bug.
    """
    crashed = [n for n, v in verdicts.items() if v.outcome is Outcome.CRASH]
    if crashed:
        return [(BugKind.CRASH, n) for n in crashed]
    sat = [n for n, v in verdicts.items() if v.outcome is Outcome.SAT]
    unsat = [n for n, v in verdicts.items() if v.outcome is Outcome.UNSAT]
    if not sat or not unsat:
        return []
    out: list[tuple[BugKind, str]] = []
    checks = [model_checks.get(n, ModelCheck.INCONCLUSIVE) for n in sat]
    for n, check in zip(sat, checks):
        if check is ModelCheck.REFUTED:
            out.append((BugKind.INVALID_MODEL, n))
    if ModelCheck.CONFIRMED in checks:
        out.extend((BugKind.SOUNDNESS, n) for n in unsat)
    return out


def uses_extensions(s: Script) -> bool:
    """True when ``s`` relies on commands or symbols outside the modelled
    standard theories, so only versions of one solver are comparable."""
    if any(isinstance(c, Passthrough) for c in s.commands):
        return True
    ctx = s.decls
    return any(isinstance(c, Assert) and "Ext" in theories_of(c.term, ctx) for c in s.commands)


def comparison_groups(s: Script, solvers: Sequence[SolverCmd]) -> list[list[SolverCmd]]:
    """Cross-solver comparison for standard scripts; for scripts using
    extensions, one group per solver family with at least two versions."""
    if not uses_extensions(s):
        return [list(solvers)]
    families: dict[str, list[SolverCmd]] = {}
    for cmd in solvers:
        families.setdefault(cmd.group, []).append(cmd)
    return [g for g in families.values() if len(g) >= 2]


def run_all(
    s: Script, solvers: Sequence[SolverCmd], crash_patterns=DEFAULT_CRASH_PATTERNS, parallel: bool = True
) -> dict[str, SolverVerdict]:
    if parallel and len(solvers) > 1:
        with ThreadPoolExecutor(max_workers=len(solvers)) as pool:
            futs = {cmd.name: pool.submit(run_solver, cmd, s, False, crash_patterns) for cmd in solvers}
            return {name: f.result() for name, f in futs.items()}
    return {cmd.name: run_solver(cmd, s, False, crash_patterns) for cmd in solvers}


def classify(
    s: Script,
    verdicts: Mapping[str, SolverVerdict],
    solvers: Sequence[SolverCmd],
    crash_patterns=DEFAULT_CRASH_PATTERNS,
) -> list[BugReport]:
    """Turn verdicts on ``s`` into bug reports (one per implicated solver).

    Crashes are reported for every solver. Sat/unsat disagreements are only
    considered within comparison groups and are resolved by validating the
    models of the sat-answering solvers.
    """
    from ..triage.fingerprint import fingerprint_report

    by_name = {c.name: c for c in solvers}
    reports: list[BugReport] = []

    crashed = [(k, n) for k, n in decide(verdicts, {}) if k is BugKind.CRASH]
    pairs: list[tuple[BugKind, str, ModelCheck | None]] = [(k, n, None) for k, n in crashed]
    if not crashed:
        for group in comparison_groups(s, [by_name[n] for n in verdicts if n in by_name]):
            sub = {c.name: verdicts[c.name] for c in group}
            if not decide(sub, {n: ModelCheck.CONFIRMED for n in sub}):
                continue  # no sat/unsat split in this group
            checks: dict[str, ModelCheck] = {}
            for name, v in sub.items():
                if v.outcome is not Outcome.SAT:
                    continue
                model = v.model
                if model is None:
                    model = run_solver(by_name[name], s, True, crash_patterns).model
                if model is None:
                    checks[name] = ModelCheck.INCONCLUSIVE
                    continue
                checks[name] = validate_model(
                    s, model, group, name, _default_runner(crash_patterns)
                )
            for kind, name in decide(sub, checks):
                check = checks.get(name) if kind is BugKind.INVALID_MODEL else ModelCheck.CONFIRMED
                pairs.append((kind, name, check))

    for kind, name, check in pairs:
        fp = fingerprint_report(kind, s, verdicts[name], name)
        reports.append(BugReport(kind, s, dict(verdicts), fp, name, check))
    return reports


# ---------------------------------------------------------------- output


def write_bug(report: BugReport, out_dir: str | Path, solvers: Sequence[SolverCmd] = (), provenance: dict | None = None) -> Path:
    """Persist one report as ``<out>/<kind>-<fp>-<n>/{bug.smt2,verdicts.json,meta.json}``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = f"{report.kind.value}-{report.fingerprint.signature[:12].replace('|', '_').replace('+', '_')}"
    n = 0
    while True:
        d = out_dir / f"{stem}-{n}"
        try:
            d.mkdir()
            break
        except FileExistsError:
            n += 1
    (d / "bug.smt2").write_text(print_script(report.script) + "\n", encoding="utf-8")
    (d / "verdicts.json").write_text(
        json.dumps({k: v.to_json() for k, v in report.verdicts.items()}, indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    meta = {
        "kind": report.kind.value,
        "fingerprint": report.fingerprint.key,
        "implicated": report.implicated,
        "model_check": report.model_check.value if report.model_check else None,
        "solver_versions": {c.name: c.version for c in solvers},
        "provenance": provenance or {},
    }
    meta.update(report.meta)
    (d / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return d


def read_bug(path: str | Path) -> BugReport:
    """Inverse of :func:`write_bug`; also accepts a single report JSON file
    (as stored in the bug database)."""
    path = Path(path)
    if path.is_file():
        return BugReport.from_json(json.loads(path.read_text(encoding="utf-8")))
    meta = json.loads((path / "meta.json").read_text(encoding="utf-8"))
    verdicts = json.loads((path / "verdicts.json").read_text(encoding="utf-8"))
    known = {"kind", "fingerprint", "implicated", "model_check", "solver_versions", "provenance"}
    return BugReport(
        BugKind(meta["kind"]),
        parse_script((path / "bug.smt2").read_text(encoding="utf-8")),
        {k: SolverVerdict.from_json(v) for k, v in verdicts.items()},
        Fingerprint.parse(meta["fingerprint"]),
        meta["implicated"],
        ModelCheck(meta["model_check"]) if meta.get("model_check") else None,
        {"provenance": meta.get("provenance", {}), **{k: v for k, v in meta.items() if k not in known}},
    )
