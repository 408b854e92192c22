"""End-to-end acceptance checks, one test per criterion.

Each test carries a ``criterion`` marker; conftest turns the outcome into a
single pass/fail line printed at the end of the run.
"""

import itertools
import math
import random
import re
import time
import warnings

import pytest

from conftest import WORKED, worked_text
from corpus import build_corpus
from goldens import INTS_SEED, PIPELINE_RESULT, PIPELINE_SEED, SEQ_SKELETON, STRINGS_SEED, Forced
from skelfuzz.difftest import BugKind, ModelCheck, Outcome, SolverCmd, classify, run_all, run_solver
from skelfuzz.foundry import FoundryConfig, StubBackend, correct
from skelfuzz.fuzzloop import FuzzConfig, SeedCorpus, iter_mutants, mutate_once
from skelfuzz.skeleton import fill, skeletonize
from skelfuzz.smtlib import INT, Sort, check_script, parse_script, print_script
from skelfuzz.termgen import BUILTIN_THEORIES, DepthExhaustion, GeneratedTerm, builtin_grammars, probe_texts, select
from skelfuzz.triage import bisect_first_fixed, fingerprint_crash, linear_first_fixed, normalize_stderr
from test_difftest import EVAL, KINDS, SCRIPT, expected
from test_foundry import DRIFT_SCORES, drift, text
from test_triage import LOGS, crash

criterion = pytest.mark.criterion


@criterion(1, "worked-example pipeline reproduces the golden mutant")
def test_pipeline_golden(record_property):
    gens = select(builtin_grammars(), ["Ints", "Strings"])
    t0 = time.perf_counter()
    out = mutate_once(parse_script(PIPELINE_SEED), gens, Forced([INTS_SEED, STRINGS_SEED], [0, 1]), FuzzConfig(p_remove=1.0, p_adapt=1.0))
    elapsed = time.perf_counter() - t0
    record_property("detail", f"{elapsed * 1000:.1f} ms")
    assert print_script(out) == PIPELINE_RESULT
    assert out == parse_script(PIPELINE_RESULT)
    assert elapsed < 1.0


@criterion(2, "sequence example keeps its quantifier and scope")
def test_seq_skeleton():
    sk = skeletonize(parse_script(worked_text("seq_exists.smt2")), random.Random(0), 1.0)
    assert print_script(sk.base, holes=True) == SEQ_SKELETON
    (hole,) = sk.holes
    assert {("s", Sort("Seq", (INT,))), ("f", INT)} <= set(hole.scope_vars)


@criterion(3, "parse/print and skeleton/fill round trips")
def test_round_trips(record_property):
    texts = [p.read_text() for p in sorted(WORKED.glob("*.smt2"))]
    texts += [t for _, t in build_corpus(500)]
    scripts = []
    for t in texts:
        s = parse_script(t)
        assert parse_script(print_script(s)) == s
        scripts.append(s)
    rng = random.Random(7)
    pairs = 0
    for i in range(1000):
        s = scripts[i % len(scripts)]
        sk = skeletonize(s, random.Random(rng.getrandbits(32)), rng.random())
        assert fill(sk, {h.id: GeneratedTerm(h.original, (), ()) for h in sk.holes}) == s
        pairs += 1
    record_property("detail", f"{len(texts)} scripts, {pairs} fill pairs")


@criterion(4, "builtin grammars produce well-sorted probes")
def test_grammar_validity(record_property):
    rates = []
    for name in BUILTIN_THEORIES:
        texts = probe_texts(builtin_grammars()[name], 1000, 0)
        ok = 0
        for t in texts:
            if isinstance(t, DepthExhaustion):
                continue
            check_script(parse_script(t))
            ok += 1
        rates.append(f"{name} {ok / 10:.1f}%")
        assert ok == 1000, name
    record_property("detail", ", ".join(rates))


Z3_SAMPLES = 200


@pytest.mark.z3
@pytest.mark.slow
@criterion("4z", "probes accepted by an installed solver (z3 integration)")
def test_grammar_validity_z3(z3_path, record_property):
    z3 = SolverCmd("z3", z3_path, ("-t:200", "{file}"), timeout_s=5)
    rates = {}
    reasons = {}
    for name in BUILTIN_THEORIES:
        texts = [t for t in probe_texts(builtin_grammars()[name], Z3_SAMPLES, 0) if isinstance(t, str)]
        rejected = [v for v in (run_solver(z3, t) for t in texts) if v.outcome is Outcome.PARSE_REJECTED]
        rates[name] = 1 - len(rejected) / len(texts)
        reasons[name] = {re.sub(r"line \d+ column \d+: ", "", v.message) for v in rejected}
    record_property("detail", ", ".join(f"{n} {r:.1%}" for n, r in rates.items()))
    low = {n for n, r in rates.items() if r < 0.95}
    # the divisibility indexed operator is standard Ints syntax, but some z3
    # builds do not know it; that is a property of the binary, not the grammar
    divisible_only = all(reasons[n] and all("divisible" in m for m in reasons[n]) for n in low)
    if low and divisible_only and run_solver(z3, "(assert ((_ divisible 2) 4))\n(check-sat)\n").outcome is Outcome.PARSE_REJECTED:
        pytest.xfail(f"installed z3 rejects (_ divisible n); below 95%: {sorted(low)}")
    assert not low


@criterion(5, "correction loop converges and keeps the best snapshot")
def test_correction_loop():
    lm = StubBackend([text("bv_v2.smtg")])
    _, rep = correct(text("bv_v1.smtg"), lm, FoundryConfig())
    assert [it.valid_count for it in rep.iterations] == [12, 20]
    assert rep.converged and len(rep.iterations) == 2 and rep.final_grammar == text("bv_v2.smtg")

    lm = StubBackend([drift(i) for i in range(2, 11)])
    _, rep = correct(drift(1), lm, FoundryConfig(max_iter=10))
    assert len(rep.iterations) == 10 and not rep.converged
    assert [it.valid_count for it in rep.iterations] == DRIFT_SCORES
    assert rep.best_iteration == 3 and rep.best_valid == 9
    assert rep.final_grammar == drift(3)


@criterion(6, "verdict-pair classification matrix with mock solvers")
def test_classification_matrix(mocks, record_property):
    cells = list(itertools.product(KINDS, repeat=2))
    seen = set()
    for a, b in cells:
        solvers = [mocks.cmd(n, EVAL + [KINDS[k]], timeout_s=0.5) for n, k in (("A", a), ("B", b))]
        reports = classify(SCRIPT, run_all(SCRIPT, solvers), solvers)
        assert [(r.kind, r.implicated) for r in reports] == expected(a, b), (a, b)
        for r in reports:
            seen.add(r.kind)
            if r.kind is BugKind.SOUNDNESS:
                assert r.model_check is ModelCheck.CONFIRMED
            elif r.kind is BugKind.INVALID_MODEL:
                assert r.model_check is ModelCheck.REFUTED
    assert seen == set(BugKind)
    record_property("detail", f"{len(cells)} cells")


@criterion(7, "crash fingerprints and bisection")
def test_triage_oracles():
    logs = [x for pair in LOGS for x in pair]
    assert len(logs) == 20
    for log in logs:
        once = normalize_stderr(log)
        assert normalize_stderr(once) == once
    for a, b in LOGS:
        assert fingerprint_crash(crash(a)) == fingerprint_crash(crash(b))
    assert len({fingerprint_crash(crash(a)).key for a, _ in LOGS}) == len(LOGS)

    rng = random.Random(99)
    for _ in range(50):
        n = rng.randint(1, 64)
        k = rng.randint(1, n)
        flags = [i < k for i in range(n)]
        calls = []
        res = bisect_first_fixed(n, lambda i: calls.append(i) or flags[i])
        assert res.index == linear_first_fixed(flags)
        assert len(calls) <= math.ceil(math.log2(n)) + 2


def _stream(corpus, seed, n):
    return b"".join(m.text.encode() + b"\0" for m in itertools.islice(iter_mutants(corpus, builtin_grammars(), FuzzConfig(seed=seed)), n))


@pytest.mark.slow
@criterion(8, "deterministic mutant streams and throughput")
def test_determinism_and_throughput(record_property):
    corpus = SeedCorpus.from_scripts([(name, parse_script(t)) for name, t in build_corpus(100, seed=8)])
    assert len(corpus) == 100
    assert _stream(corpus, 1234, 300) == _stream(corpus, 1234, 300)
    assert _stream(corpus, 1234, 50) != _stream(corpus, 1235, 50)

    t0 = time.perf_counter()
    count = sum(1 for _ in itertools.islice(iter_mutants(corpus, builtin_grammars(), FuzzConfig(seed=1)), 10_000))
    elapsed = time.perf_counter() - t0
    assert count == 10_000
    record_property("detail", f"10000 mutants in {elapsed:.1f} s")
    if elapsed >= 60:
        warnings.warn(f"throughput below target: 10000 mutants took {elapsed:.1f} s")
