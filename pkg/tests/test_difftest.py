import itertools
import json
import signal
import sys
import tempfile
import time

import pytest

from conftest import CRASH, MOCK, REJECT, SAT, UNKNOWN, UNSAT
from skelfuzz.difftest import (
    BugKind,
    ConfigError,
    ModelCheck,
    Outcome,
    SolverCmd,
    SolverVerdict,
    classify,
    comparison_groups,
    decide,
    interpret,
    judge_model,
    load_solver_config,
    model_script,
    parse_model,
    read_bug,
    run_all,
    run_solver,
    uses_extensions,
    validate_model,
    write_bug,
)
from skelfuzz.smtlib import parse_script, print_script

SCRIPT = parse_script("(declare-fun x () Int)\n(assert (> x 0))\n(check-sat)")

# every mock evaluates model scripts faithfully: x = 1 satisfies (> x 0), x = 0 does not
EVAL = [
    {"match": r"define-fun x \(\) Int 1\)", "stdout": "sat"},
    {"match": r"define-fun x \(\) Int 0\)", "stdout": "unsat"},
]
GOOD_MODEL = "(model (define-fun x () Int 1))"
BAD_MODEL = "(model (define-fun x () Int 0))"

KINDS = {
    "sat_good": {"stdout": "sat", "model": GOOD_MODEL},
    "sat_bad": {"stdout": "sat", "model": BAD_MODEL},
    "unsat": UNSAT,
    "unknown": UNKNOWN,
    "timeout": {"stdout": "sat", "sleep": 3},
    "rejected": REJECT,
    "crash": CRASH,
}


def expected(a: str, b: str) -> list[tuple[BugKind, str]]:
    """The taxonomy written out independently of ``decide``."""
    pair = {"A": a, "B": b}
    crashed = [n for n, k in pair.items() if k == "crash"]
    if crashed:
        return [(BugKind.CRASH, n) for n in crashed]
    sat = [n for n, k in pair.items() if k.startswith("sat")]
    unsat = [n for n, k in pair.items() if k == "unsat"]
    if not sat or not unsat:
        return []
    if pair[sat[0]] == "sat_good":
        return [(BugKind.SOUNDNESS, unsat[0])]
    return [(BugKind.INVALID_MODEL, sat[0])]


@pytest.mark.parametrize("a, b", list(itertools.product(KINDS, repeat=2)), ids=lambda k: k)
def test_classification_matrix(mocks, a, b):
    solvers = [mocks.cmd(n, EVAL + [KINDS[k]], timeout_s=0.5) for n, k in (("A", a), ("B", b))]
    verdicts = run_all(SCRIPT, solvers)
    reports = classify(SCRIPT, verdicts, solvers)
    assert [(r.kind, r.implicated) for r in reports] == expected(a, b)
    for r in reports:
        if r.kind is BugKind.SOUNDNESS:
            assert r.model_check is ModelCheck.CONFIRMED
            assert {v.outcome for v in r.verdicts.values()} == {Outcome.SAT, Outcome.UNSAT}
        elif r.kind is BugKind.INVALID_MODEL:
            assert r.model_check is ModelCheck.REFUTED


O = Outcome
ALL = [O.SAT, O.UNSAT, O.UNKNOWN, O.TIMEOUT, O.PARSE_REJECTED, O.CRASH]


@pytest.mark.parametrize("a, b", list(itertools.product(ALL, repeat=2)))
@pytest.mark.parametrize("check", list(ModelCheck))
def test_decide_is_pure_and_total(a, b, check):
    v = {"A": SolverVerdict(a), "B": SolverVerdict(b)}
    checks = {n: check for n, x in v.items() if x.outcome is O.SAT}
    got = decide(v, checks)
    if O.CRASH in (a, b):
        assert {k for k, _ in got} == {BugKind.CRASH}
    elif {a, b} == {O.SAT, O.UNSAT}:
        sat = "A" if a is O.SAT else "B"
        unsat = "B" if sat == "A" else "A"
        want = {
            ModelCheck.CONFIRMED: [(BugKind.SOUNDNESS, unsat)],
            ModelCheck.REFUTED: [(BugKind.INVALID_MODEL, sat)],
            ModelCheck.INCONCLUSIVE: [],
        }[check]
        assert got == want
    else:
        assert got == []


def test_interpret_statuses():
    assert interpret(0, "sat\n", "").outcome is O.SAT
    assert interpret(0, "unsat\n", "").outcome is O.UNSAT
    assert interpret(0, "", "").outcome is O.UNKNOWN
    assert interpret(0, "success\nunknown\n", "").outcome is O.UNKNOWN
    v = interpret(0, "sat\n(\n (define-fun x () Int 1)\n)\n", "")
    assert v.model.startswith("(") and "define-fun" in v.model
    r = interpret(1, '(error "line 3 column 9: unknown constant foo")\n', "")
    assert r.outcome is O.PARSE_REJECTED and "unknown constant" in r.message
    c = interpret(134, "", "ASSERTION VIOLATION\nFile: a.cpp\nLine: 12\n")
    assert c.outcome is O.CRASH and c.exit_code == 134 and "ASSERTION" in c.stderr
    assert interpret(-11, "", "").signal == 11
    assert interpret(3, "sat\n", "").outcome is O.CRASH


def test_run_solver_verdicts(mocks):
    assert run_solver(mocks.cmd("s", SAT), SCRIPT).outcome is O.SAT
    v = run_solver(mocks.cmd("c", CRASH), SCRIPT)
    assert v.outcome is O.CRASH and v.exit_code == 134 and "ASSERTION VIOLATION" in v.stderr
    seg = run_solver(mocks.cmd("g", {"signal": signal.SIGSEGV}), SCRIPT)
    assert seg.outcome is O.CRASH and seg.signal == signal.SIGSEGV
    rej = run_solver(mocks.cmd("r", REJECT), SCRIPT)
    assert rej.outcome is O.PARSE_REJECTED


def test_timeout_kills_process_group(mocks, tmp_path):
    marker = tmp_path / "child-survived"
    child = f"import time; time.sleep(1.5); open({str(marker)!r}, 'w').write('x')"
    script = tmp_path / "spawner.py"
    script.write_text(
        "import subprocess, sys, time\n"
        f"subprocess.Popen([sys.executable, '-c', {child!r}])\n"
        "time.sleep(60)\n"
    )
    cmd = SolverCmd("slow", sys.executable, (str(script), "{file}"), timeout_s=0.5)
    v = run_solver(cmd, SCRIPT)
    assert v.outcome is O.TIMEOUT and v.wall_time < 5
    time.sleep(2.0)
    assert not marker.exists()


def test_spawn_failure_is_crash():
    v = run_solver(SolverCmd("ghost", "/nonexistent/solver"), SCRIPT)
    assert v.outcome is O.CRASH and v.exit_code == -1 and v.message.startswith("spawn failure")


def test_model_fetch_appends_get_model(mocks, tmp_path, monkeypatch):
    log = tmp_path / "calls.log"
    monkeypatch.setenv("MOCK_SOLVER_LOG", str(log))
    v = run_solver(mocks.cmd("m", {"stdout": "sat", "model": GOOD_MODEL}), SCRIPT, want_model=True)
    assert v.model == GOOD_MODEL
    assert len(log.read_text().splitlines()) == 2
    u = run_solver(mocks.cmd("u", UNSAT), SCRIPT, want_model=True)
    assert u.model is None
    assert len(log.read_text().splitlines()) == 3


def test_temp_files_removed(mocks, tmp_path, monkeypatch):
    monkeypatch.setattr(tempfile, "tempdir", str(tmp_path / "tmp"))
    (tmp_path / "tmp").mkdir()
    run_solver(mocks.cmd("s", SAT), SCRIPT)
    run_solver(mocks.cmd("c", CRASH), SCRIPT)
    assert list((tmp_path / "tmp").iterdir()) == []


def test_parse_model_forms():
    assert [c.name for c in parse_model(GOOD_MODEL)] == ["x"]
    assert [c.name for c in parse_model("((define-fun x () Int 1) (define-fun y () Bool true))")] == ["x", "y"]
    assert [c.name for c in parse_model("(define-fun x () Int 1)\n(define-fun y () Int (- 2))")] == ["x", "y"]


def test_model_script_keeps_unmodelled_symbols():
    s = parse_script("(declare-fun x () Int)\n(declare-fun y () Int)\n(assert (> x y))\n(check-sat)")
    out = print_script(model_script(s, parse_model("(model (define-fun x () Int 1))")))
    assert "(define-fun x () Int 1)" in out and "(declare-fun y () Int)" in out


def test_validate_model_with_real_evaluator(mocks):
    solvers = [mocks.cmd("A", EVAL), mocks.cmd("B", EVAL)]
    assert validate_model(SCRIPT, GOOD_MODEL, solvers, "A") is ModelCheck.CONFIRMED
    assert validate_model(SCRIPT, BAD_MODEL, solvers, "A") is ModelCheck.REFUTED
    assert validate_model(SCRIPT, "(model (oops", solvers, "A") is ModelCheck.INCONCLUSIVE


def test_judge_model_rules():
    assert judge_model({"A": O.SAT, "B": O.SAT}, "A") is ModelCheck.CONFIRMED
    assert judge_model({"A": O.UNSAT, "B": O.SAT}, "A") is ModelCheck.REFUTED
    assert judge_model({"A": O.SAT, "B": O.UNSAT}, "A") is ModelCheck.INCONCLUSIVE
    assert judge_model({"A": O.UNKNOWN, "B": O.UNSAT}, "C") is ModelCheck.INCONCLUSIVE
    assert judge_model({"A": O.UNSAT, "B": O.UNSAT}, "C") is ModelCheck.REFUTED
    assert judge_model({}, "A") is ModelCheck.INCONCLUSIVE


def test_version_differential_grouping():
    ext = parse_script("(declare-const v (_ FiniteField 3))\n(assert (= v (ff.mul v v)))\n(check-sat)")
    assert uses_extensions(ext) and not uses_extensions(SCRIPT)
    cmds = [
        SolverCmd("cvc5-1.0", "x", family="cvc5"),
        SolverCmd("cvc5-1.1", "x", family="cvc5"),
        SolverCmd("z3", "x"),
    ]
    assert [[c.name for c in g] for g in comparison_groups(ext, cmds)] == [["cvc5-1.0", "cvc5-1.1"]]
    assert len(comparison_groups(SCRIPT, cmds)) == 1


def test_extension_scripts_not_compared_across_families(mocks):
    ext = parse_script("(declare-const x Int)\n(assert (> x (ff.weird 1)))\n(check-sat)")
    a = mocks.cmd("A", EVAL + [{"stdout": "sat", "model": GOOD_MODEL}], family="a")
    b = mocks.cmd("B", EVAL + [UNSAT], family="b")
    verdicts = run_all(ext, [a, b])
    assert classify(ext, verdicts, [a, b]) == []


def test_solver_config_loading(tmp_path, mocks):
    cfg = mocks.config({"A": SAT, "B": UNSAT})
    sc = load_solver_config(cfg)
    assert [s.name for s in sc.solvers] == ["A", "B"]
    assert sc.solvers[0].argv("f.smt2")[-1] == "f.smt2"
    bad = tmp_path / "bad.toml"
    bad.write_text('[[solver]]\nname = "z"\ncmd = "/no/such/solver"\n')
    with pytest.raises(ConfigError, match="not found"):
        load_solver_config(bad)
    dup = tmp_path / "dup.toml"
    dup.write_text(f'[[solver]]\nname = "a"\ncmd = {json.dumps(sys.executable)}\n' * 2)
    with pytest.raises(ConfigError, match="unique"):
        load_solver_config(dup)
    extra = tmp_path / "extra.toml"
    extra.write_text(f'crash_patterns = ["PANIC"]\n[[solver]]\nname = "a"\ncmd = {json.dumps(sys.executable)}\n')
    assert "PANIC" in load_solver_config(extra).crash_patterns
    assert MOCK.exists()


def test_custom_crash_pattern(mocks):
    cmd = mocks.cmd("p", {"stdout": "sat", "stderr": "PANIC at the disco"})
    assert run_solver(cmd, SCRIPT).outcome is O.SAT
    assert run_solver(cmd, SCRIPT, crash_patterns=("PANIC",)).outcome is O.CRASH


def test_write_and_read_bug(mocks, tmp_path):
    solvers = [mocks.cmd("A", EVAL + [KINDS["sat_good"]]), mocks.cmd("B", EVAL + [UNSAT])]
    (r,) = classify(SCRIPT, run_all(SCRIPT, solvers), solvers)
    d = write_bug(r, tmp_path / "bugs", solvers, {"master_seed": 1})
    assert (d / "bug.smt2").read_text() == print_script(SCRIPT) + "\n"
    meta = json.loads((d / "meta.json").read_text())
    assert meta["kind"] == "soundness" and meta["provenance"] == {"master_seed": 1}
    back = read_bug(d)
    assert back.fingerprint == r.fingerprint and back.script == SCRIPT and back.implicated == "B"
    d2 = write_bug(r, tmp_path / "bugs", solvers)
    assert d2 != d
