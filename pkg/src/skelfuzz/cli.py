"""Command-line entry point.

Exit codes: 0 clean, 1 usage or configuration error, 2 bug found.
Machine-readable results go to stdout as JSON; diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import signal
import sys
import threading
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Sequence

from . import __version__
from .difftest import (
    BugReport,
    ConfigError,
    SolverConfig,
    classify,
    load_solver_config,
    read_bug,
    run_all,
)
from .difftest.classify import BugKind, Fingerprint
from .foundry import BackendError, FoundryConfig, HttpBackend, StubScript, build_generators, load_docs
from .fuzzloop import EmptyCorpus, FuzzConfig, SeedCorpus, Stats, fuzz
from .smtlib import ParseError, SortError, check_script, parse_script
from .termgen import DepthExhaustion, GeneratorSet, GrammarError, builtin_grammars, load_grammar, load_grammar_dir, probe_texts, select
from .triage import BugDatabase, NonMonotone, NotFixed, NotTriggering, bisect, load_manifest, reduce, reproduces

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

log = logging.getLogger("skelfuzz")

EXIT_OK, EXIT_USAGE, EXIT_BUG = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(obj, indent=2, sort_keys=True) + "\n")
    sys.stdout.flush()


# ---------------------------------------------------------------- configuration


@dataclass
class CampaignConfig:
    """Merged campaign settings from ``--config`` and command-line flags."""

    solvers: SolverConfig | None = None
    fuzz: FuzzConfig = field(default_factory=FuzzConfig)
    foundry: FoundryConfig = field(default_factory=FoundryConfig)
    grammar_dir: Path | None = None
    seed_dir: Path | None = None
    out_dir: Path | None = None
    lm: dict = field(default_factory=dict)
    triage: dict = field(default_factory=dict)


_PATH_KEYS = {"seeds": "seed_dir", "grammars": "grammar_dir", "out": "out_dir"}


def _dataclass_kwargs(cls, table: dict, section: str) -> dict:
    known = {f.name for f in fields(cls)}
    unknown = set(table) - known
    if unknown:
        raise ConfigError(f"[{section}]: unknown keys {sorted(unknown)}")
    return dict(table)


def load_campaign_config(path: str | Path | None) -> CampaignConfig:
    """TOML with optional ``[paths]`` (seeds, grammars, solvers, out),
    ``[fuzz]``, ``[foundry]``, ``[lm]`` and ``[triage]`` tables."""
    cfg = CampaignConfig()
    if path is None:
        return cfg
    path = Path(path)
    try:
        data = tomllib.loads(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from None
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"{path}: {e}") from None
    base = path.parent
    paths = data.get("paths", {})
    for key, value in paths.items():
        p = Path(value) if Path(value).is_absolute() else base / value
        if key == "solvers":
            cfg.solvers = load_solver_config(p)
        elif key in _PATH_KEYS:
            if key != "out" and not p.exists():
                raise ConfigError(f"[paths] {key}: {p} does not exist")
            setattr(cfg, _PATH_KEYS[key], p)
        else:
            raise ConfigError(f"[paths]: unknown key {key!r}")
    try:
        if "fuzz" in data:
            cfg.fuzz = FuzzConfig(**_dataclass_kwargs(FuzzConfig, data["fuzz"], "fuzz"))
        if "foundry" in data:
            cfg.foundry = FoundryConfig(**_dataclass_kwargs(FoundryConfig, data["foundry"], "foundry"))
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{path}: {e}") from None
    cfg.lm = dict(data.get("lm", {}))
    cfg.triage = dict(data.get("triage", {}))
    return cfg


def _solvers(args, cfg: CampaignConfig, required: bool = True) -> SolverConfig | None:
    if getattr(args, "solvers", None):
        return load_solver_config(args.solvers)
    if cfg.solvers is None and required:
        raise UsageError("no solver configuration (use --solvers or [paths] solvers)")
    return cfg.solvers


def _read_script(path: str):
    p = Path(path)
    try:
        s = parse_script(p.read_text(encoding="utf-8"))
        check_script(s)
    except OSError as e:
        raise UsageError(f"cannot read {p}: {e}") from None
    except (ParseError, SortError) as e:
        raise UsageError(f"{p}: {e}") from None
    return s


# ---------------------------------------------------------------- corpus


def discrepancy_filter(solvers: SolverConfig):
    """Seed prefilter that drops seeds on which the solvers already disagree."""

    def keep(s) -> bool:
        verdicts = run_all(s, solvers.solvers, solvers.crash_patterns)
        return not classify(s, verdicts, solvers.solvers, solvers.crash_patterns)

    return keep


def ingest_seeds(directory: str | Path, prefilter: SolverConfig | None = None) -> SeedCorpus:
    """Recursively load ``.smt2`` seeds, dropping unusable ones with a
    warning and, given solvers, those that already show a discrepancy."""
    return SeedCorpus.from_dir(directory, discrepancy_filter(prefilter) if prefilter else None)


# ---------------------------------------------------------------- commands


def cmd_gen_sample(args, cfg: CampaignConfig) -> int:
    if args.n < 0:
        raise UsageError("-n must be non-negative")
    path = Path(args.grammar)
    if not path.exists() and args.grammar in builtin_grammars():
        g = builtin_grammars()[args.grammar]
    else:
        g = load_grammar(path)
    for text in probe_texts(g, args.n, args.seed):
        if isinstance(text, DepthExhaustion):
            log.warning("%s", text)
            continue
        sys.stdout.write(text)
    return EXIT_OK


def _lm_session(args, cfg: CampaignConfig):
    if args.stub:
        stub = StubScript.load(args.stub)
        return stub.session
    lm = cfg.lm
    if not lm.get("url") or not lm.get("model"):
        raise UsageError("no language model configured (use --stub or an [lm] table with url and model)")
    backend = HttpBackend(
        lm["url"],
        lm["model"],
        token_env=lm.get("token_env", "SKELFUZZ_LM_TOKEN"),
        timeout_s=float(lm.get("timeout_s", 120.0)),
        retries=int(lm.get("retries", 3)),
    )
    return lambda _theory: backend


def cmd_foundry_build(args, cfg: CampaignConfig) -> int:
    try:
        docs = load_docs(args.docs)
    except (OSError, ValueError) as e:
        raise UsageError(str(e)) from None
    conf = cfg.foundry
    solvers = _solvers(args, cfg, required=False)
    if solvers is not None:
        conf = replace(conf, solvers=solvers.solvers)
    conf = replace(conf, seed=args.seed)
    if args.sample_num is not None:
        conf = replace(conf, sample_num=args.sample_num)
    if args.max_iter is not None:
        conf = replace(conf, max_iter=args.max_iter)
    outcomes = build_generators(docs, _lm_session(args, cfg), conf, args.out)
    _emit(
        {
            o.theory: {
                "grammar": str(o.grammar_path) if o.grammar_path else None,
                "error": o.error,
                "iterations": len(o.report.iterations) if o.report else 0,
                "best_iteration": o.report.best_iteration if o.report else None,
                "best_valid": o.report.best_valid if o.report else 0,
                "converged": o.report.converged if o.report else False,
            }
            for o in outcomes
        }
    )
    return EXIT_USAGE if any(o.error for o in outcomes) else EXIT_OK


def _generators(args, cfg: CampaignConfig) -> GeneratorSet:
    directory = args.grammars or cfg.grammar_dir
    gens = load_grammar_dir(directory) if directory else builtin_grammars()
    if args.theories:
        try:
            gens = select(gens, [t.strip() for t in args.theories.split(",") if t.strip()])
        except KeyError as e:
            raise UsageError(f"unknown theory {e.args[0]}") from None
    return gens


def cmd_fuzz_run(args, cfg: CampaignConfig) -> int:
    seeds = args.seeds or cfg.seed_dir
    if not seeds:
        raise UsageError("no seed directory (use --seeds or [paths] seeds)")
    out = args.out or cfg.out_dir
    solvers = _solvers(args, cfg, required=False)
    if solvers is None or not solvers.solvers:
        log.warning("no solvers configured: mutants are generated but not checked")
    gens = _generators(args, cfg)
    overrides = {
        "seed": args.seed,
        "out_dir": Path(out) if out else None,
        "mutations_per_seed": args.iterations,
        "timeout_s": args.timeout,
        "workers": args.workers,
        "p_remove": args.p_remove,
        "p_adapt": args.p_adapt,
        "max_mutants": args.max_mutants,
        "max_seconds": args.max_seconds,
        "stats_interval": args.stats_interval,
    }
    try:
        conf = replace(cfg.fuzz, **{k: v for k, v in overrides.items() if v is not None})
        if args.independent:
            conf = replace(conf, independent=True)
        if args.keep_all:
            conf = replace(conf, keep_all=True)
    except ValueError as e:
        raise UsageError(str(e)) from None
    corpus = ingest_seeds(seeds, solvers if args.prefilter and solvers else None)
    log.info("corpus: %d seeds, grammars: %s", len(corpus), ", ".join(gens.names()))

    stop = threading.Event()
    stats = Stats()
    previous = signal.getsignal(signal.SIGINT)
    if threading.current_thread() is threading.main_thread():
        signal.signal(signal.SIGINT, lambda *_: stop.set())
    try:
        for report in fuzz(
            gens,
            corpus,
            solvers.solvers if solvers else (),
            conf,
            stop=stop,
            stats=stats,
            report_stats=lambda line: print(line, file=sys.stderr, flush=True),
            crash_patterns=solvers.crash_patterns if solvers else (),
        ):
            log.info("bug: %s (%s)", report.fingerprint, report.implicated)
    finally:
        if threading.current_thread() is threading.main_thread():
            signal.signal(signal.SIGINT, previous)
    _emit(stats.to_json())
    return EXIT_BUG if stats.bugs else EXIT_OK


def _report_json(r: BugReport) -> dict:
    return {
        "kind": r.kind.value,
        "implicated": r.implicated,
        "fingerprint": r.fingerprint.key,
        "model_check": r.model_check.value if r.model_check else None,
    }


def cmd_replay(args, cfg: CampaignConfig) -> int:
    s = _read_script(args.file)
    sc = _solvers(args, cfg)
    verdicts = run_all(s, sc.solvers, sc.crash_patterns)
    reports = classify(s, verdicts, sc.solvers, sc.crash_patterns)
    _emit(
        {
            "file": args.file,
            "verdicts": {k: v.to_json() for k, v in verdicts.items()},
            "kind": reports[0].kind.value if reports else None,
            "bugs": [_report_json(r) for r in reports],
        }
    )
    return EXIT_BUG if reports else EXIT_OK


def _load_bug(path: str) -> BugReport:
    try:
        return read_bug(path)
    except (OSError, KeyError, ValueError, ParseError) as e:
        raise UsageError(f"cannot load bug report {path}: {e}") from None


def cmd_triage_dedup(args, cfg: CampaignConfig) -> int:
    db = BugDatabase(args.db)
    results = []
    for path in args.reports:
        res = db.insert(_load_bug(path))
        entry = {"report": path, "fingerprint": res.fingerprint.key if hasattr(res, "fingerprint") else res.of.key}
        entry["status"] = "new" if hasattr(res, "fingerprint") else "duplicate"
        if entry["status"] == "duplicate":
            entry["count"] = res.count
        results.append(entry)
    _emit({"inserted": results, "bugs": db.summary()})
    return EXIT_OK


def cmd_triage_reduce(args, cfg: CampaignConfig) -> int:
    b = _load_bug(args.bug)
    solver_path = args.solvers or cfg.triage.get("solvers")
    if not solver_path:
        raise UsageError("reduce needs --solvers (the interestingness test re-runs them)")
    sc = load_solver_config(solver_path)
    reducer = args.reducer or cfg.triage.get("reducer")
    res = reduce(b, reducer, solver_path, sc.solvers, sc.crash_patterns, args.timeout)
    from .smtlib import print_script

    text = print_script(res.script) + "\n"
    out = Path(args.out) if args.out else (Path(args.bug) / "reduced.smt2" if Path(args.bug).is_dir() else None)
    if out is not None:
        out.write_text(text, encoding="utf-8")
    if res.status not in ("reduced", "unchanged"):
        log.warning("reduction %s: %s", res.status, res.message)
    _emit(
        {
            "status": res.status,
            "message": res.message,
            "original_bytes": len(print_script(b.script)) + 1,
            "reduced_bytes": len(text),
            "output": str(out) if out else None,
        }
    )
    return EXIT_OK


def cmd_triage_bisect(args, cfg: CampaignConfig) -> int:
    b = _load_bug(args.bug)
    manifest = args.manifest or cfg.triage.get("manifest")
    if not manifest:
        raise UsageError("bisect needs --manifest")
    builds = load_manifest(manifest)
    ref = _solvers(args, cfg, required=False)
    patterns = ref.crash_patterns if ref else SolverConfig(()).crash_patterns
    try:
        commit, res = bisect(b, builds, ref.solvers if ref else (), patterns, args.strict)
    except NotFixed as e:
        _emit({"status": "not-fixed", "commit": None, "runs": e.result.runs})
        return EXIT_OK
    except NonMonotone as e:
        _emit({"status": "non-monotone", "witness": [builds[i].commit for i in e.witness]})
        return EXIT_USAGE
    except NotTriggering as e:
        raise UsageError(str(e)) from None
    _emit({"status": "fixed", "commit": commit, "index": res.index, "runs": res.runs})
    return EXIT_OK


def cmd_triage_check(args, cfg: CampaignConfig) -> int:
    """Interestingness test: exit 0 iff the file still shows the bug."""
    try:
        s = parse_script(Path(args.file).read_text(encoding="utf-8"))
        check_script(s)
    except (OSError, ParseError, SortError):
        return EXIT_USAGE
    sc = _solvers(args, cfg)
    fp = Fingerprint.parse(args.fingerprint)
    return EXIT_OK if reproduces(s, BugKind(args.kind), fp, sc.solvers, sc.crash_patterns) else EXIT_USAGE


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="skelfuzz", description="Skeleton-guided, grammar-driven SMT solver fuzzer.")
    p.add_argument("--version", action="version", version=f"skelfuzz {__version__}")
    p.add_argument("--config", help="campaign TOML ([paths], [fuzz], [foundry], [lm], [triage])")
    p.add_argument("--seed", type=int, default=0, help="master rng seed (default 0)")
    p.add_argument("--verbose", "-v", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def seed_opt(sp):
        sp.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="overrides the global --seed")

    foundry = sub.add_parser("foundry", help="build theory grammars with a language model")
    fsub = foundry.add_subparsers(dest="action", required=True, parser_class=_Parser)
    fb = fsub.add_parser("build")
    fb.add_argument("--docs", required=True, help="directory of theory documentation (*.md, *.txt)")
    fb.add_argument("--out", required=True)
    fb.add_argument("--solvers", help="solver TOML used to validate sampled terms")
    fb.add_argument("--stub", help="JSON file of scripted completions instead of a live model")
    fb.add_argument("--sample-num", type=int)
    fb.add_argument("--max-iter", type=int)
    seed_opt(fb)
    fb.set_defaults(func=cmd_foundry_build)

    gen = sub.add_parser("gen", help="sample terms from a grammar")
    gsub = gen.add_subparsers(dest="action", required=True, parser_class=_Parser)
    gs = gsub.add_parser("sample")
    gs.add_argument("grammar", help=".smtg file or builtin theory name")
    gs.add_argument("-n", type=int, default=20)
    seed_opt(gs)
    gs.set_defaults(func=cmd_gen_sample)

    fz = sub.add_parser("fuzz", help="run a fuzzing campaign")
    zsub = fz.add_subparsers(dest="action", required=True, parser_class=_Parser)
    fr = zsub.add_parser("run")
    fr.add_argument("--seeds")
    fr.add_argument("--grammars", help="directory of .smtg grammars (default: builtin)")
    fr.add_argument("--theories", help="comma-separated subset of grammar names")
    fr.add_argument("--solvers")
    fr.add_argument("--out")
    fr.add_argument("--workers", type=int)
    fr.add_argument("--iterations", type=int, help="mutations per seed (default 10)")
    fr.add_argument("--timeout", type=float, help="per-solver timeout in seconds (default 10)")
    fr.add_argument("--p-remove", type=float)
    fr.add_argument("--p-adapt", type=float)
    fr.add_argument("--independent", action="store_true", help="mutate the original seed every iteration")
    fr.add_argument("--keep-all", action="store_true", help="write every mutant under OUT/mutants")
    fr.add_argument("--max-mutants", type=int)
    fr.add_argument("--max-seconds", type=float)
    fr.add_argument("--stats-interval", type=float)
    fr.add_argument("--prefilter", action="store_true", help="drop seeds that already show a discrepancy")
    seed_opt(fr)
    fr.set_defaults(func=cmd_fuzz_run)

    rp = sub.add_parser("replay", help="classify one script")
    rp.add_argument("file")
    rp.add_argument("--solvers")
    rp.set_defaults(func=cmd_replay)

    tr = sub.add_parser("triage", help="deduplicate, reduce and bisect bug reports")
    tsub = tr.add_subparsers(dest="action", required=True, parser_class=_Parser)
    td = tsub.add_parser("dedup")
    td.add_argument("--db", required=True, help="JSONL bug database")
    td.add_argument("reports", nargs="*", help="bug directories or report JSON files")
    td.set_defaults(func=cmd_triage_dedup)
    trd = tsub.add_parser("reduce")
    trd.add_argument("bug")
    trd.add_argument("--solvers")
    trd.add_argument("--reducer", help="command template with {test}, {input} and optional {output}")
    trd.add_argument("--out")
    trd.add_argument("--timeout", type=float)
    trd.set_defaults(func=cmd_triage_reduce)
    tb = tsub.add_parser("bisect")
    tb.add_argument("bug")
    tb.add_argument("--manifest", help="TOML list of [[build]] commit/path, oldest first")
    tb.add_argument("--solvers", help="reference solvers for model validation")
    tb.add_argument("--strict", action="store_true", help="test every build and reject non-monotone series")
    tb.set_defaults(func=cmd_triage_bisect)
    tc = tsub.add_parser("check", help="interestingness test used by reduce")
    tc.add_argument("file")
    tc.add_argument("--solvers")
    tc.add_argument("--kind", required=True, choices=[k.value for k in BugKind])
    tc.add_argument("--fingerprint", required=True)
    tc.set_defaults(func=cmd_triage_check)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose > 1 else logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        cfg = load_campaign_config(args.config)
        return args.func(args, cfg)
    except (UsageError, ConfigError, GrammarError, EmptyCorpus, BackendError) as e:
        print(f"skelfuzz: error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
