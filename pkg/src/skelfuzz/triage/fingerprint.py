"""Bug fingerprints: normalized crash signatures and theory-set keys."""

from __future__ import annotations

import hashlib
import re

from ..difftest.classify import BugKind, Fingerprint
from ..difftest.run import SolverVerdict
from ..smtlib import Assert, Script, theories_of

CRASH_LINE = re.compile(
    r"ASSERTION VIOLATION|Assertion .*failed|assertion failed|Fatal failure|Segmentation fault|"
    r"INTERNAL ERROR|AddressSanitizer|UNREACHABLE|Unreachable|terminate called|panicked at|Check failure",
    re.IGNORECASE,
)
_FILE = re.compile(r"^\s*File:\s*(\S+)")
_LINE = re.compile(r"^\s*Line:\s*(\d+)")
_HEX = re.compile(r"0x[0-9a-fA-F]+")
_DIRS = re.compile(r"[^\s'\"()\[\]<>,]*/")
_BIGNUM = re.compile(r"(?<![:\w])\d{4,}")
_SPACE = re.compile(r"\s+")


def _clean(line: str) -> str:
    line = _HEX.sub("<addr>", line)
    line = _DIRS.sub("", line)
    line = _BIGNUM.sub("N", line)
    return _SPACE.sub(" ", line).strip()


def normalize_stderr(text: str) -> str:
    """Reduce a crash log to one canonical line.

    Takes the first line matching a crash pattern (else the first non-empty
    line), folds directly following ``File:``/``Line:`` lines in as
    ``file:line``, drops directory prefixes, replaces hex addresses and long
    decimal numbers. Idempotent.
    """
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        return ""
    idx = next((i for i, ln in enumerate(lines) if CRASH_LINE.search(ln)), 0)
    head = lines[idx].strip()
    file = line_no = None
    for ln in lines[idx + 1: idx + 4]:
        m = _FILE.match(ln)
        if m:
            file = m.group(1)
            continue
        m = _LINE.match(ln)
        if m:
            line_no = m.group(1)
    if file is not None:
        head = f"{head} {file}:{line_no}" if line_no else f"{head} {file}"
    return _clean(head)


def crash_signature(v: SolverVerdict) -> str:
    norm = normalize_stderr(v.stderr)
    if not norm:
        if v.signal is not None:
            return f"signal:{v.signal}"
        return f"exit:{v.exit_code}"
    return hashlib.sha1(norm.encode("utf-8")).hexdigest()[:16]


def fingerprint_crash(v: SolverVerdict) -> Fingerprint:
    return Fingerprint(BugKind.CRASH, crash_signature(v))


def script_theories(s: Script) -> set[str]:
    ctx = s.decls
    out: set[str] = set()
    for c in s.commands:
        if isinstance(c, Assert):
            out |= theories_of(c.term, ctx)
    return out


def fingerprint_report(kind: BugKind, s: Script, verdict: SolverVerdict, implicated: str) -> Fingerprint:
    if kind is BugKind.CRASH:
        return fingerprint_crash(verdict)
    return Fingerprint(kind, f"{implicated}|{'+'.join(sorted(script_theories(s)))}")
