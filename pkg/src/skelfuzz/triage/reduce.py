"""Test-case reduction through an external delta debugger."""

from __future__ import annotations

import logging
import os
import shlex
import shutil
import stat
import subprocess
import sys
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from ..difftest.classify import BugKind, BugReport, Fingerprint, classify, run_all
from ..difftest.solvers import DEFAULT_CRASH_PATTERNS, SolverCmd
from ..smtlib import ParseError, Script, parse_script, print_script

log = logging.getLogger(__name__)


def reproduces(
    s: Script, kind: BugKind, fp: Fingerprint, solvers: Sequence[SolverCmd], crash_patterns=DEFAULT_CRASH_PATTERNS
) -> bool:
    verdicts = run_all(s, solvers, crash_patterns)
    return any(r.kind is kind and r.fingerprint == fp for r in classify(s, verdicts, solvers, crash_patterns))


@dataclass(frozen=True)
class ReduceResult:
    script: Script
    status: str  # reduced | unchanged | reducer-missing | reducer-failed | rejected
    message: str = ""

    @property
    def reduced(self) -> bool:
        return self.status == "reduced"


def write_interestingness_test(path: Path, solver_config: Path, b: BugReport, input_name: str) -> Path:
    """A POSIX shell script exiting 0 iff its candidate (``$1``, or the
    input file name in the working directory) still shows ``b``."""
    cmd = [
        sys.executable, "-m", "skelfuzz", "triage", "check",
        "--solvers", str(Path(solver_config).resolve()),
        "--kind", b.kind.value,
        "--fingerprint", b.fingerprint.key,
    ]
    body = (
        "#!/bin/sh\n"
        f'cand="${{1:-{input_name}}}"\n'
        f'exec {" ".join(shlex.quote(c) for c in cmd)} "$cand"\n'
    )
    path.write_text(body, encoding="utf-8")
    path.chmod(path.stat().st_mode | stat.S_IXUSR | stat.S_IXGRP | stat.S_IXOTH)
    return path


def reduce(
    b: BugReport,
    reducer: str | None,
    solver_config: str | Path,
    solvers: Sequence[SolverCmd],
    crash_patterns=DEFAULT_CRASH_PATTERNS,
    timeout_s: float | None = None,
    keep_dir: str | Path | None = None,
) -> ReduceResult:
    """Run the external reducer described by ``reducer``, a command template
    with ``{test}``, ``{input}`` and optionally ``{output}`` slots. Without
    ``{output}`` the reducer is expected to shrink ``{input}`` in place.
    The result is accepted only if it still reproduces ``b``'s kind and
    fingerprint."""
    original = b.script
    if not reducer:
        log.warning("no reducer configured; keeping the original script")
        return ReduceResult(original, "reducer-missing", "no reducer configured")
    argv0 = shlex.split(reducer)[0]
    if shutil.which(argv0) is None and not (os.path.isfile(argv0) and os.access(argv0, os.X_OK)):
        log.warning("reducer %s not found; keeping the original script", argv0)
        return ReduceResult(original, "reducer-missing", f"reducer {argv0} not found")

    work = Path(keep_dir) if keep_dir else Path(tempfile.mkdtemp(prefix="skelfuzz-reduce-"))
    work.mkdir(parents=True, exist_ok=True)
    try:
        inp = work / "bug.smt2"
        out = work / "reduced.smt2"
        inp.write_text(print_script(original) + "\n", encoding="utf-8")
        test = write_interestingness_test(work / "interesting.sh", Path(solver_config), b, inp.name)
        argv = [a.format(test=test, input=inp, output=out) for a in shlex.split(reducer)]
        try:
            proc = subprocess.run(argv, cwd=work, capture_output=True, text=True, timeout=timeout_s)
        except (OSError, subprocess.TimeoutExpired) as e:
            log.warning("reducer failed: %s", e)
            return ReduceResult(original, "reducer-failed", str(e))
        if proc.returncode != 0:
            log.warning("reducer exited with %d; keeping the original script", proc.returncode)
            return ReduceResult(original, "reducer-failed", (proc.stderr or proc.stdout)[-2000:])
        result_file = out if "{output}" in reducer else inp
        try:
            candidate = parse_script(result_file.read_text(encoding="utf-8"))
        except (OSError, ParseError) as e:
            log.warning("reducer output unusable: %s", e)
            return ReduceResult(original, "reducer-failed", str(e))
        if candidate == original:
            return ReduceResult(original, "unchanged")
        if not reproduces(candidate, b.kind, b.fingerprint, solvers, crash_patterns):
            log.warning("reduced script no longer reproduces %s; keeping the original", b.fingerprint)
            return ReduceResult(original, "rejected", "fingerprint changed")
        return ReduceResult(candidate, "reduced")
    finally:
        if keep_dir is None:
            shutil.rmtree(work, ignore_errors=True)
