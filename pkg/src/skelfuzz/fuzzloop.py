"""Seed-driven mutate/validate loop."""

from __future__ import annotations

import json
import logging
import queue
import random
import threading
import time
from collections import Counter
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Iterator, Sequence

from .difftest import BugReport, SolverCmd, classify, run_all, write_bug
from .difftest.solvers import DEFAULT_CRASH_PATTERNS
from .skeleton import NoAtoms, SortMismatch, fill, skeletonize
from .smtlib import (
    GetModel,
    ParseError,
    Passthrough,
    Script,
    SortError,
    check_script,
    enumerate_atoms,
    parse_script,
    print_script,
)
from .termgen import DepthExhaustion, GeneratorSet, adapt_variables, generate
from .triage import BugDatabase, New

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class FuzzConfig:
    mutations_per_seed: int = 10
    timeout_s: float = 10.0
    p_remove: float = 0.5
    p_adapt: float = 0.75
    seed: int = 0
    workers: int = 1
    out_dir: Path | None = None
    independent: bool = False
    keep_all: bool = False
    max_mutants: int | None = None
    max_seconds: float | None = None
    stats_interval: float = 10.0

    def __post_init__(self):
        if self.mutations_per_seed < 1:
            raise ValueError("mutations_per_seed must be at least 1")
        if self.timeout_s <= 0:
            raise ValueError("timeout must be positive")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")
        for name in ("p_remove", "p_adapt"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")


# ---------------------------------------------------------------- corpus

_QUERY_HEADS = ("get-", "echo")


def strip_queries(s: Script) -> Script:
    """Drop output-only commands (``get-model``, ``get-value``, ``echo``,
    ...) whose responses would be mistaken for solver diagnostics."""
    keep = tuple(
        c
        for c in s.commands
        if not isinstance(c, GetModel) and not (isinstance(c, Passthrough) and c.head.startswith(_QUERY_HEADS))
    )
    return s if len(keep) == len(s.commands) else Script(keep)


class EmptyCorpus(ValueError):
    pass


@dataclass(frozen=True)
class SeedCorpus:
    entries: tuple[tuple[str, Script], ...]

    def __post_init__(self):
        if not self.entries:
            raise EmptyCorpus("empty corpus")

    def __len__(self):
        return len(self.entries)

    def __getitem__(self, i: int) -> tuple[str, Script]:
        return self.entries[i]

    @classmethod
    def from_scripts(cls, scripts: Sequence[tuple[str, Script]]) -> "SeedCorpus":
        return cls(tuple(scripts))

    @classmethod
    def from_dir(
        cls,
        directory: str | Path,
        prefilter: Callable[[Script], bool] | None = None,
    ) -> "SeedCorpus":
        """Load every ``.smt2`` file below ``directory`` (sorted by path).
        Files that do not parse or sort-check, or that have nothing to
        mutate, are skipped with a warning. ``prefilter`` returning False
        also drops a seed (used to exclude seeds that already show a bug)."""
        directory = Path(directory)
        if not directory.is_dir():
            raise EmptyCorpus(f"seed directory {directory} does not exist")
        entries = []
        for path in sorted(directory.rglob("*.smt2")):
            try:
                s = strip_queries(parse_script(path.read_text(encoding="utf-8", errors="replace")))
                check_script(s)
            except (ParseError, SortError) as e:
                log.warning("skipping seed %s: %s", path, e)
                continue
            if not enumerate_atoms(s):
                log.warning("skipping seed %s: no atoms to mutate", path)
                continue
            if prefilter is not None and not prefilter(s):
                log.warning("skipping seed %s: already triggers a discrepancy", path)
                continue
            entries.append((str(path), s))
        if not entries:
            raise EmptyCorpus(f"empty corpus: no usable .smt2 seeds in {directory}")
        return cls(tuple(entries))


# ---------------------------------------------------------------- mutation


def mutate_once(f: Script, gens: GeneratorSet, rng: random.Random, cfg: FuzzConfig = FuzzConfig()) -> Script:
    """Skeletonize ``f``, fill every hole with a term from a uniformly chosen
    grammar, adapted to the hole's scope, and return the filled script.

    Per hole the master ``rng`` draws the grammar index and a 64-bit seed
    for the hole's own stream, which drives generation and adaptation.
    """
    sk = skeletonize(f, rng, cfg.p_remove)
    assignment = {}
    for hole in sk.holes:
        g = gens.grammars[rng.randrange(len(gens.grammars))]
        hrng = random.Random(rng.getrandbits(64))
        t = generate(g, hrng)
        assignment[hole.id] = adapt_variables(t, hole.scope_vars, hrng, cfg.p_adapt)
    return fill(sk, assignment)


@dataclass(frozen=True)
class Mutant:
    seed_path: str
    seed_index: int
    iteration: int
    input: Script
    script: Script
    text: str


def worker_rng(master: int, worker: int) -> random.Random:
    return random.Random(f"skelfuzz:{master}:{worker}")


def iter_mutants(
    corpus: SeedCorpus,
    gens: GeneratorSet,
    cfg: FuzzConfig = FuzzConfig(),
    worker: int = 0,
    on_failure: Callable[[Exception], None] | None = None,
) -> Iterator[Mutant]:
    """Endless stream of validated mutants for one worker.

    A seed is chosen uniformly, then mutated ``mutations_per_seed`` times;
    by default each mutant is the next iteration's input. Mutants that fail
    to generate or re-check are skipped (reported to ``on_failure``).
    """
    rng = worker_rng(cfg.seed, worker)
    while True:
        idx = rng.randrange(len(corpus))
        path, original = corpus[idx]
        current = original
        for k in range(cfg.mutations_per_seed):
            source = original if cfg.independent else current
            try:
                m = mutate_once(source, gens, rng, cfg)
                check_script(m)
                text = print_script(m)
            except NoAtoms as e:
                if on_failure:
                    on_failure(e)
                break
            except (SortMismatch, SortError, ParseError, DepthExhaustion, RecursionError) as e:
                if on_failure:
                    on_failure(e)
                continue
            yield Mutant(path, idx, k, source, m, text)
            current = m


# ---------------------------------------------------------------- campaign


@dataclass
class Stats:
    started: float = field(default_factory=time.monotonic)
    mutants: int = 0
    invalid: int = 0
    bugs: int = 0
    new_bugs: int = 0
    verdicts: Counter = field(default_factory=Counter)
    lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def line(self) -> str:
        with self.lock:
            elapsed = max(time.monotonic() - self.started, 1e-9)
            v = self.verdicts
            return (
                f"mutants={self.mutants} rate={self.mutants / elapsed:.1f}/s "
                f"sat={v['sat']} unsat={v['unsat']} unknown={v['unknown']} timeout={v['timeout']} "
                f"crash={v['crash']} rejected={v['parse_rejected']} invalid={self.invalid} "
                f"bugs={self.bugs} unique={self.new_bugs}"
            )

    def to_json(self) -> dict:
        with self.lock:
            return {
                "mutants": self.mutants,
                "invalid": self.invalid,
                "bugs": self.bugs,
                "unique_bugs": self.new_bugs,
                "verdicts": dict(self.verdicts),
                "elapsed_s": round(time.monotonic() - self.started, 3),
            }


def _with_timeout(solvers: Sequence[SolverCmd], timeout_s: float) -> list[SolverCmd]:
    return [replace(s, timeout_s=min(s.timeout_s, timeout_s)) for s in solvers]


def fuzz(
    gens: GeneratorSet,
    corpus: SeedCorpus,
    solvers: Sequence[SolverCmd],
    cfg: FuzzConfig = FuzzConfig(),
    stop: threading.Event | None = None,
    stats: Stats | None = None,
    report_stats: Callable[[str], None] | None = None,
    crash_patterns=DEFAULT_CRASH_PATTERNS,
    trace: Callable[[Mutant], None] | None = None,
) -> Iterator[BugReport]:
    """Run the campaign and yield every bug report as it is found.

    Each worker thread owns an rng stream derived from (master seed, worker
    id). Reports are persisted under ``cfg.out_dir`` (a bug directory per
    new fingerprint plus ``bugs.jsonl``). Stops when ``stop`` is set or a
    mutant/time budget from ``cfg`` is exhausted.
    """
    stop = stop or threading.Event()
    stats = stats or Stats()
    solvers = _with_timeout(solvers, cfg.timeout_s)
    out = Path(cfg.out_dir) if cfg.out_dir else None
    db = BugDatabase(out / "bugs.jsonl" if out else None)
    sink: queue.Queue = queue.Queue()
    budget = threading.Semaphore(cfg.max_mutants) if cfg.max_mutants is not None else None
    deadline = time.monotonic() + cfg.max_seconds if cfg.max_seconds else None

    def failed(_e: Exception):
        with stats.lock:
            stats.invalid += 1

    def work(wid: int):
        try:
            for m in iter_mutants(corpus, gens, cfg, wid, failed):
                if stop.is_set() or (deadline and time.monotonic() > deadline):
                    break
                if budget is not None and not budget.acquire(blocking=False):
                    break
                if trace:
                    trace(m)
                with stats.lock:
                    stats.mutants += 1
                if out and cfg.keep_all:
                    d = out / "mutants"
                    d.mkdir(parents=True, exist_ok=True)
                    (d / f"w{wid}-{stats.mutants}.smt2").write_text(m.text + "\n", encoding="utf-8")
                if not solvers:
                    continue
                try:
                    check_script(parse_script(m.text))
                except (ParseError, SortError) as e:
                    failed(e)
                    continue
                verdicts = run_all(m.script, solvers, crash_patterns)
                with stats.lock:
                    stats.verdicts.update(v.outcome.value for v in verdicts.values())
                for r in classify(m.script, verdicts, solvers, crash_patterns):
                    r.meta["provenance"] = {
                        "master_seed": cfg.seed,
                        "worker": wid,
                        "seed_file": m.seed_path,
                        "iteration": m.iteration,
                    }
                    res = db.insert(r)
                    with stats.lock:
                        stats.bugs += 1
                        if isinstance(res, New):
                            stats.new_bugs += 1
                    if out and isinstance(res, New):
                        write_bug(r, out / "bugs", solvers, r.meta["provenance"])
                    sink.put(r)
        except Exception as e:  # surface worker failures to the caller
            sink.put(e)
        finally:
            sink.put(None)

    threads = [threading.Thread(target=work, args=(w,), daemon=True, name=f"fuzz-{w}") for w in range(cfg.workers)]
    for t in threads:
        t.start()
    alive = len(threads)
    last_report = time.monotonic()
    try:
        while alive:
            try:
                item = sink.get(timeout=0.2)
            except queue.Empty:
                item = ...
            if report_stats and time.monotonic() - last_report >= cfg.stats_interval:
                report_stats(stats.line())
                last_report = time.monotonic()
            if item is ...:
                continue
            if item is None:
                alive -= 1
            elif isinstance(item, Exception):
                stop.set()
                raise item
            else:
                yield item
    finally:
        stop.set()
        for t in threads:
            t.join(timeout=max(s.timeout_s for s in solvers) + 5 if solvers else 5)
        if out:
            out.mkdir(parents=True, exist_ok=True)
            (out / "stats.json").write_text(json.dumps(stats.to_json(), indent=2, sort_keys=True) + "\n")
        if report_stats:
            report_stats(stats.line())
