"""Append-only JSONL bug database with fingerprint deduplication."""

from __future__ import annotations

import fcntl
import json
import threading
import time
from dataclasses import dataclass
from pathlib import Path

from ..difftest.classify import BugReport, Fingerprint


@dataclass(frozen=True)
class New:
    fingerprint: Fingerprint


@dataclass(frozen=True)
class Duplicate:
    of: Fingerprint
    count: int


class BugDatabase:
    """One canonical report per fingerprint plus a duplicate counter.

    Every insertion appends one JSON line (``new`` or ``dup`` event); the
    in-memory view is rebuilt by replaying the file, so the first-seen
    report always stays canonical.
    """

    def __init__(self, path: str | Path | None = None):
        self.path = Path(path) if path is not None else None
        self._lock = threading.Lock()
        self.canonical: dict[str, dict] = {}
        self.duplicates: dict[str, int] = {}
        if self.path is not None and self.path.exists():
            self._replay()

    def _replay(self):
        with open(self.path, encoding="utf-8") as f:
            for n, line in enumerate(f, 1):
                line = line.strip()
                if not line:
                    continue
                try:
                    ev = json.loads(line)
                except json.JSONDecodeError as e:
                    raise ValueError(f"{self.path}:{n}: corrupt record: {e}") from None
                self._apply(ev)

    def _apply(self, ev: dict):
        fp = ev["fingerprint"]
        if ev["event"] == "new" and fp not in self.canonical:
            self.canonical[fp] = ev["report"]
            self.duplicates.setdefault(fp, 0)
        else:
            self.duplicates[fp] = self.duplicates.get(fp, 0) + 1

    def _append(self, ev: dict):
        if self.path is None:
            return
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with open(self.path, "a", encoding="utf-8") as f:
            fcntl.flock(f, fcntl.LOCK_EX)
            try:
                f.write(json.dumps(ev, sort_keys=True) + "\n")
            finally:
                fcntl.flock(f, fcntl.LOCK_UN)

    def __contains__(self, fp) -> bool:
        return str(fp) in self.canonical

    def __len__(self):
        return len(self.canonical)

    def report(self, fp) -> BugReport:
        return BugReport.from_json(self.canonical[str(fp)])

    def count(self, fp) -> int:
        return self.duplicates.get(str(fp), 0)

    def insert(self, b: BugReport) -> New | Duplicate:
        key = b.fingerprint.key
        with self._lock:
            if key in self.canonical:
                ev = {"event": "dup", "fingerprint": key, "ts": time.time()}
                self._apply(ev)
                self._append(ev)
                return Duplicate(b.fingerprint, self.duplicates[key])
            ev = {"event": "new", "fingerprint": key, "ts": time.time(), "report": b.to_json()}
            self._apply(ev)
            self._append(ev)
            return New(b.fingerprint)

    def summary(self) -> list[dict]:
        return [
            {"fingerprint": k, "kind": r["kind"], "implicated": r["implicated"], "duplicates": self.duplicates.get(k, 0)}
            for k, r in self.canonical.items()
        ]


def dedup(b: BugReport, db: BugDatabase) -> New | Duplicate:
    return db.insert(b)
