"""Launching solver processes and normalizing what they print."""

from __future__ import annotations

import enum
import os
import shutil
import signal
import subprocess
import tempfile
import time
from dataclasses import dataclass, replace
from pathlib import Path

from ..smtlib import CheckSat, GetModel, Script, print_script
from .solvers import DEFAULT_CRASH_PATTERNS, SolverCmd

STDERR_EXCERPT = 4000


class Outcome(str, enum.Enum):
    SAT = "sat"
    UNSAT = "unsat"
    UNKNOWN = "unknown"
    TIMEOUT = "timeout"
    PARSE_REJECTED = "parse_rejected"
    CRASH = "crash"


@dataclass(frozen=True)
class SolverVerdict:
    outcome: Outcome
    wall_time: float = 0.0
    model: str | None = None
    message: str = ""
    exit_code: int | None = None
    signal: int | None = None
    stderr: str = ""

    @property
    def is_sat(self) -> bool:
        return self.outcome is Outcome.SAT

    def to_json(self) -> dict:
        d = {"outcome": self.outcome.value, "wall_time": round(self.wall_time, 4)}
        if self.model is not None:
            d["model"] = self.model
        if self.message:
            d["message"] = self.message
        if self.exit_code is not None:
            d["exit_code"] = self.exit_code
        if self.signal is not None:
            d["signal"] = self.signal
        if self.stderr:
            d["stderr"] = self.stderr
        return d

    @classmethod
    def from_json(cls, d: dict) -> "SolverVerdict":
        return cls(
            Outcome(d["outcome"]),
            d.get("wall_time", 0.0),
            d.get("model"),
            d.get("message", ""),
            d.get("exit_code"),
            d.get("signal"),
            d.get("stderr", ""),
        )


STATUS = {"sat": Outcome.SAT, "unsat": Outcome.UNSAT, "unknown": Outcome.UNKNOWN, "timeout": Outcome.TIMEOUT}


def _error_line(lines: list[str]) -> str | None:
    for line in lines:
        s = line.strip()
        if s.startswith("(error") or ("error" in s.lower() and not s.startswith("(")):
            return s
    return None


def interpret(
    returncode: int,
    stdout: str,
    stderr: str,
    wall_time: float = 0.0,
    crash_patterns=DEFAULT_CRASH_PATTERNS,
) -> SolverVerdict:
    """Map a finished process to a verdict.

    Signals, crash-pattern matches and nonzero exits without an error
    diagnostic are crashes; an error diagnostic is a parse rejection;
    otherwise the first status token decides.
    """
    excerpt = stderr[-STDERR_EXCERPT:]
    lines = stdout.splitlines()
    if returncode < 0:
        return SolverVerdict(Outcome.CRASH, wall_time, exit_code=returncode, signal=-returncode, stderr=excerpt,
                             message=f"killed by signal {-returncode}")
    for pat in crash_patterns:
        if pat in stderr or pat in stdout:
            return SolverVerdict(Outcome.CRASH, wall_time, exit_code=returncode, stderr=excerpt or stdout[-STDERR_EXCERPT:],
                                 message=pat)
    error = _error_line(lines) or _error_line(stderr.splitlines())
    status_idx = next((i for i, ln in enumerate(lines) if ln.strip() in STATUS), None)
    if error is not None:
        return SolverVerdict(Outcome.PARSE_REJECTED, wall_time, message=error, exit_code=returncode, stderr=excerpt)
    if returncode != 0:
        return SolverVerdict(Outcome.CRASH, wall_time, exit_code=returncode, stderr=excerpt,
                             message=f"exit status {returncode}")
    if status_idx is None:
        return SolverVerdict(Outcome.UNKNOWN, wall_time, message="no status line", exit_code=0, stderr=excerpt)
    outcome = STATUS[lines[status_idx].strip()]
    model = None
    if outcome is Outcome.SAT:
        rest = "\n".join(lines[status_idx + 1:]).strip()
        model = rest or None
    return SolverVerdict(outcome, wall_time, model=model, exit_code=0, stderr=excerpt)


def _limit_memory(mem_mb: int | None):
    if not mem_mb:
        return None

    def apply():
        import resource

        limit = mem_mb * 1024 * 1024
        resource.setrlimit(resource.RLIMIT_AS, (limit, limit))

    return apply


def _kill_group(proc: subprocess.Popen):
    try:
        os.killpg(proc.pid, signal.SIGKILL)
    except (ProcessLookupError, PermissionError):
        pass


def _launch(cmd: SolverCmd, text: str, crash_patterns) -> SolverVerdict:
    workdir = tempfile.mkdtemp(prefix=f"skelfuzz-{cmd.name}-")
    try:
        file = Path(workdir) / "input.smt2"
        file.write_text(text, encoding="utf-8")
        start = time.monotonic()
        try:
            proc = subprocess.Popen(
                cmd.argv(file),
                cwd=workdir,
                stdin=subprocess.DEVNULL,
                stdout=subprocess.PIPE,
                stderr=subprocess.PIPE,
                text=True,
                errors="replace",
                start_new_session=True,
                preexec_fn=_limit_memory(cmd.mem_mb),
            )
        except OSError as e:
            return SolverVerdict(Outcome.CRASH, 0.0, exit_code=-1, message=f"spawn failure: {e}", stderr=str(e))
        try:
            out, err = proc.communicate(timeout=cmd.timeout_s)
        except subprocess.TimeoutExpired:
            _kill_group(proc)
            proc.communicate()
            return SolverVerdict(Outcome.TIMEOUT, time.monotonic() - start, message=f"exceeded {cmd.timeout_s}s")
        finally:
            if proc.poll() is None:
                _kill_group(proc)
                proc.wait()
        elapsed = time.monotonic() - start
        return interpret(proc.returncode, out, err, elapsed, crash_patterns)
    finally:
        shutil.rmtree(workdir, ignore_errors=True)


def _with_get_model(s: Script) -> Script:
    cmds = [c for c in s.commands if not isinstance(c, GetModel)]
    last = max((i for i, c in enumerate(cmds) if isinstance(c, CheckSat)), default=None)
    if last is None:
        cmds.append(CheckSat())
        last = len(cmds) - 1
    cmds.insert(last + 1, GetModel())
    return Script(tuple(cmds))


def run_solver(
    cmd: SolverCmd, s: Script | str, want_model: bool = False, crash_patterns=DEFAULT_CRASH_PATTERNS
) -> SolverVerdict:
    """Run one solver on ``s`` in a private temp directory.

    With ``want_model`` a sat answer triggers a second run with
    ``(get-model)`` appended after the last ``(check-sat)``; the model text
    is attached to the verdict. If the second run disagrees, the first
    verdict is returned without a model.
    """
    text = s if isinstance(s, str) else print_script(s) + "\n"
    first = _launch(cmd, text, crash_patterns)
    first = replace(first, model=None)
    if not want_model or not first.is_sat or isinstance(s, str):
        return first
    second = _launch(cmd, print_script(_with_get_model(s)) + "\n", crash_patterns)
    if not second.is_sat or second.model is None:
        return first
    return replace(first, model=second.model)
