"""Binary search for the first build in which a bug no longer shows."""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Sequence

from ..difftest.classify import BugKind, BugReport, ModelCheck, validate_model
from ..difftest.run import Outcome, run_solver
from ..difftest.solvers import DEFAULT_CRASH_PATTERNS, ConfigError, SolverCmd, resolve_executable
from .fingerprint import fingerprint_crash

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


class NotFixed(Exception):
    """The bug still triggers on the newest build."""

    def __init__(self, result: "BisectResult"):
        super().__init__(f"bug still triggers on the newest build ({result.runs} runs)")
        self.result = result


class NonMonotone(Exception):
    def __init__(self, witness: tuple[int, int, int]):
        super().__init__(f"trigger pattern is not monotone: triggers at {witness[0]}, fixed at {witness[1]}, "
                         f"triggers again at {witness[2]}")
        self.witness = witness


class NotTriggering(Exception):
    """The bug does not trigger on the oldest build."""


@dataclass(frozen=True)
class BisectResult:
    index: int | None  # first fixed build, None when never fixed
    runs: int
    observed: dict[int, bool]

    @property
    def fixed(self) -> bool:
        return self.index is not None


def run_budget(n: int) -> int:
    return math.ceil(math.log2(n)) + 2 if n > 1 else 1


def bisect_first_fixed(n: int, triggers: Callable[[int], bool], strict: bool = False) -> BisectResult:
    """First index in ``0..n-1`` where ``triggers`` is false, assuming
    builds are ordered oldest first and the bug triggers on build 0.

    Uses at most ``ceil(log2 n) + 2`` calls. With ``strict`` every build is
    tested and a trigger/fixed/trigger pattern raises :class:`NonMonotone`.
    """
    if n < 1:
        raise ValueError("no builds to bisect")
    seen: dict[int, bool] = {}

    def probe(i: int) -> bool:
        if i not in seen:
            seen[i] = bool(triggers(i))
        return seen[i]

    if strict:
        for i in range(n):
            probe(i)
        if not seen[0]:
            raise NotTriggering("bug does not trigger on the oldest build")
        first_fixed = next((i for i in range(n) if not seen[i]), None)
        if first_fixed is not None:
            again = next((i for i in range(first_fixed, n) if seen[i]), None)
            if again is not None:
                raise NonMonotone((first_fixed - 1, first_fixed, again))
        return BisectResult(first_fixed, len(seen), dict(seen))

    if not probe(0):
        raise NotTriggering("bug does not trigger on the oldest build")
    if n == 1 or probe(n - 1):
        return BisectResult(None, len(seen), dict(seen))
    lo, hi = 0, n - 1  # lo triggers, hi is fixed
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if probe(mid):
            lo = mid
        else:
            hi = mid
    return BisectResult(hi, len(seen), dict(seen))


def linear_first_fixed(flags: Sequence[bool]) -> int | None:
    return next((i for i, f in enumerate(flags) if not f), None)


# ---------------------------------------------------------------- solver builds


@dataclass(frozen=True)
class Build:
    commit: str
    cmd: SolverCmd


def load_manifest(path: str | Path, template: SolverCmd | None = None) -> list[Build]:
    """TOML manifest: ``[[build]] commit = "...", path = "..."`` oldest first.
    Arguments, timeout and memory limit come from ``template`` when given,
    or from per-build ``args``/``timeout_s``/``mem_mb`` keys."""
    path = Path(path)
    try:
        data = tomllib.loads(path.read_text(encoding="utf-8"))
    except (OSError, tomllib.TOMLDecodeError) as e:
        raise ConfigError(f"cannot read bisect manifest {path}: {e}") from None
    entries = data.get("build")
    if not entries:
        raise ConfigError(f"{path}: no [[build]] entries")
    builds = []
    for e in entries:
        if "commit" not in e or "path" not in e:
            raise ConfigError(f"{path}: each build needs commit and path")
        exe = resolve_executable(e["path"], path.parent)
        base = template or SolverCmd(name="build", path=exe)
        cmd = replace(
            base,
            name=f"{base.name}@{e['commit']}",
            path=exe,
            args=tuple(e.get("args", base.args)),
            timeout_s=float(e.get("timeout_s", base.timeout_s)),
            mem_mb=e.get("mem_mb", base.mem_mb),
            version=str(e["commit"]),
        )
        builds.append(Build(str(e["commit"]), cmd))
    return builds


def triggers_on(b: BugReport, cmd: SolverCmd, reference: Sequence[SolverCmd] = (), crash_patterns=DEFAULT_CRASH_PATTERNS) -> bool:
    """Does ``b`` still show on the solver build ``cmd``?"""
    if b.kind is BugKind.CRASH:
        v = run_solver(cmd, b.script, False, crash_patterns)
        return v.outcome is Outcome.CRASH and fingerprint_crash(v) == b.fingerprint
    if b.kind is BugKind.SOUNDNESS:
        # the formula was shown satisfiable when the report was filed
        return run_solver(cmd, b.script, False, crash_patterns).outcome is Outcome.UNSAT
    v = run_solver(cmd, b.script, True, crash_patterns)
    if v.outcome is not Outcome.SAT or v.model is None:
        return False
    return validate_model(b.script, v.model, [cmd, *reference], cmd.name) is ModelCheck.REFUTED


def bisect(
    b: BugReport,
    builds: Sequence[Build],
    reference: Sequence[SolverCmd] = (),
    crash_patterns=DEFAULT_CRASH_PATTERNS,
    strict: bool = False,
) -> tuple[str, BisectResult]:
    """Correcting commit of ``b``. Raises :class:`NotFixed` when the bug
    still triggers on the newest build."""
    res = bisect_first_fixed(len(builds), lambda i: triggers_on(b, builds[i].cmd, reference, crash_patterns), strict)
    if res.index is None:
        raise NotFixed(res)
    return builds[res.index].commit, res
