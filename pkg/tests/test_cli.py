import json
import subprocess
import sys

import pytest

from conftest import CRASH, FIXTURES, UNSAT
from goldens import PIPELINE_SEED
from skelfuzz.cli import ingest_seeds, load_campaign_config, main
from skelfuzz.difftest import ConfigError
from skelfuzz.foundry import FoundryConfig, score
from skelfuzz.fuzzloop import EmptyCorpus
from skelfuzz.termgen import load_grammar, probe_texts

GRAMMARS = FIXTURES.parent.parent / "src" / "skelfuzz" / "termgen" / "grammars"
SCRIPT = "(declare-fun x () Int)\n(assert (> x 0))\n(check-sat)\n"
EVAL = [{"match": r"define-fun x \(\) Int 1\)", "stdout": "sat"}]


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def script_file(tmp_path):
    p = tmp_path / "f.smt2"
    p.write_text(SCRIPT)
    return p


def test_gen_sample_matches_scoring_path(capsys):
    g = GRAMMARS / "Ints.smtg"
    code, out, _ = run(capsys, "--seed", "7", "gen", "sample", str(g), "-n", "20")
    assert code == 0
    assert out == "".join(probe_texts(load_grammar(g), 20, 7))
    # scoring with the same seed sees exactly these scripts
    assert score(g.read_text(), FoundryConfig(seed=7))[0] == 20
    code2, out2, _ = run(capsys, "gen", "sample", str(g), "-n", "20", "--seed", "7")
    assert out2 == out
    code3, out3, _ = run(capsys, "gen", "sample", "Ints", "-n", "20", "--seed", "7")
    assert code3 == 0 and out3 == out


def test_gen_sample_zero_and_invalid(capsys, tmp_path):
    code, out, _ = run(capsys, "gen", "sample", str(GRAMMARS / "Core.smtg"), "-n", "0")
    assert code == 0 and out == ""
    bad = tmp_path / "bad.smtg"
    bad.write_text("(grammar :theory X :start B (rule B ((\"not\" C) 1)))")
    code, out, err = run(capsys, "gen", "sample", str(bad))
    assert code == 1 and out == "" and "no rule" in err


def test_usage_errors_exit_one(capsys):
    with pytest.raises(SystemExit) as e:
        main(["frobnicate"])
    assert e.value.code == 1
    with pytest.raises(SystemExit) as e:
        main(["gen", "sample", "x.smtg", "-n", "many"])
    assert e.value.code == 1


def test_replay_agreeing_mocks(capsys, mocks, script_file):
    cfg = mocks.config({"A": {"stdout": "sat"}, "B": {"stdout": "sat"}})
    code, out, _ = run(capsys, "replay", str(script_file), "--solvers", str(cfg))
    assert code == 0
    data = json.loads(out)
    assert data["kind"] is None and data["verdicts"]["A"]["outcome"] == "sat"


def test_replay_soundness(capsys, mocks, script_file):
    cfg = mocks.config({"A": EVAL + [{"stdout": "sat", "model": "(model (define-fun x () Int 1))"}], "B": EVAL + [UNSAT]})
    code, out, _ = run(capsys, "replay", str(script_file), "--solvers", str(cfg))
    assert code == 2
    data = json.loads(out)
    assert data["kind"] == "soundness" and data["bugs"][0]["implicated"] == "B"


def test_replay_crash(capsys, mocks, script_file):
    cfg = mocks.config({"A": CRASH, "B": {"stdout": "sat"}})
    code, out, _ = run(capsys, "replay", str(script_file), "--solvers", str(cfg))
    assert code == 2 and json.loads(out)["kind"] == "crash"


def test_replay_bad_input(capsys, mocks, tmp_path):
    cfg = mocks.config({"A": {"stdout": "sat"}})
    bad = tmp_path / "bad.smt2"
    bad.write_text("(assert (> x")
    code, _, err = run(capsys, "replay", str(bad), "--solvers", str(cfg))
    assert code == 1 and "unbalanced" in err
    code, _, err = run(capsys, "replay", str(bad))
    assert code == 1


def test_ingest_seeds(tmp_path, caplog):
    one = tmp_path / "one"
    one.mkdir()
    (one / "seed.smt2").write_text(PIPELINE_SEED)
    (one / "broken.smt2").write_text("(assert")
    assert len(ingest_seeds(one)) == 1
    assert any("broken.smt2" in r.message for r in caplog.records)
    empty = tmp_path / "empty"
    empty.mkdir()
    with pytest.raises(EmptyCorpus, match="empty corpus"):
        ingest_seeds(empty)


def test_ingest_prefilter_drops_discrepant_seeds(tmp_path, mocks):
    from skelfuzz.difftest import load_solver_config

    d = tmp_path / "seeds"
    d.mkdir()
    (d / "fine.smt2").write_text(PIPELINE_SEED)
    (d / "crashy.smt2").write_text("(declare-fun boom () Int)\n(assert (> boom 0))\n(check-sat)")
    cfg = load_solver_config(mocks.config({"A": [{"match": "boom", **CRASH}, {"stdout": "sat"}], "B": {"stdout": "sat"}}))
    corpus = ingest_seeds(d, cfg)
    assert [p.rsplit("/", 1)[-1] for p, _ in corpus.entries] == ["fine.smt2"]


def test_fuzz_run_without_solvers(capsys, tmp_path):
    out = tmp_path / "out"
    code, stdout, err = run(
        capsys, "fuzz", "run", "--seeds", str(FIXTURES / "seeds"), "--out", str(out), "--max-mutants", "15",
        "--keep-all", "--seed", "3",
    )
    assert code == 0
    assert json.loads(stdout)["mutants"] == 15
    assert "mutants=15" in err
    assert len(list((out / "mutants").glob("*.smt2"))) == 15


def test_fuzz_run_reports_bugs(capsys, mocks, tmp_path):
    cfg = mocks.config({"A": CRASH, "B": {"stdout": "sat"}})
    code, stdout, _ = run(
        capsys, "fuzz", "run", "--seeds", str(FIXTURES / "seeds"), "--solvers", str(cfg),
        "--out", str(tmp_path / "o"), "--max-mutants", "3", "--theories", "Ints,Core",
    )
    assert code == 2
    assert json.loads(stdout)["bugs"] == 3
    assert (tmp_path / "o" / "bugs.jsonl").exists()


def test_fuzz_run_errors(capsys, tmp_path):
    code, _, err = run(capsys, "fuzz", "run", "--seeds", str(tmp_path))
    assert code == 1 and "empty corpus" in err
    code, _, err = run(capsys, "fuzz", "run", "--seeds", str(FIXTURES / "seeds"), "--theories", "Nope")
    assert code == 1 and "Nope" in err
    code, _, err = run(capsys, "fuzz", "run", "--seeds", str(FIXTURES / "seeds"), "--p-remove", "2")
    assert code == 1


def test_foundry_build_with_stub(capsys, tmp_path):
    docs = tmp_path / "docs"
    docs.mkdir()
    (docs / "FixedSizeBitVectors.md").write_text("# Bit-vectors\nbvadd, bvmul, ...")
    foundry = FIXTURES / "foundry"
    stub = tmp_path / "stub.json"
    stub.write_text(json.dumps(["summary", (foundry / "bv_v1.smtg").read_text(), (foundry / "bv_v2.smtg").read_text()]))
    out = tmp_path / "gens"
    code, stdout, _ = run(capsys, "foundry", "build", "--docs", str(docs), "--out", str(out), "--stub", str(stub))
    assert code == 0
    data = json.loads(stdout)["FixedSizeBitVectors"]
    assert data["converged"] and data["iterations"] == 2
    assert (out / "FixedSizeBitVectors.smtg").exists() and (out / "report.json").exists()


def test_foundry_build_without_backend(capsys, tmp_path):
    docs = tmp_path / "docs"
    docs.mkdir()
    (docs / "Ints.md").write_text("ints")
    code, _, err = run(capsys, "foundry", "build", "--docs", str(docs), "--out", str(tmp_path / "o"))
    assert code == 1 and "language model" in err


def test_triage_dedup_and_check(capsys, mocks, tmp_path):
    cfg = mocks.config({"A": CRASH, "B": {"stdout": "sat"}})
    code, out, _ = run(
        capsys, "fuzz", "run", "--seeds", str(FIXTURES / "seeds"), "--solvers", str(cfg),
        "--out", str(tmp_path / "o"), "--max-mutants", "2",
    )
    bug = sorted((tmp_path / "o" / "bugs").iterdir())[0]
    db = tmp_path / "db.jsonl"
    code, out, _ = run(capsys, "triage", "dedup", "--db", str(db), str(bug), str(bug))
    data = json.loads(out)
    assert code == 0 and [e["status"] for e in data["inserted"]] == ["new", "duplicate"]
    fp = data["inserted"][0]["fingerprint"]
    code, _, _ = run(capsys, "triage", "check", str(bug / "bug.smt2"), "--solvers", str(cfg), "--kind", "crash", "--fingerprint", fp)
    assert code == 0
    code, _, _ = run(capsys, "triage", "check", str(bug / "bug.smt2"), "--solvers", str(cfg), "--kind", "crash", "--fingerprint", "crash:other")
    assert code == 1


def test_triage_reduce_and_bisect(capsys, mocks, tmp_path):
    text = "(declare-fun x () Int)\n(assert (> x 0))\n(assert (< x (bad_op x)))\n(check-sat)\n"
    f = tmp_path / "bug_in.smt2"
    f.write_text(text)
    rules = [{"match": "bad_op", **CRASH}, {"stdout": "sat"}]
    cfg = mocks.config({"A": rules, "B": {"stdout": "sat"}})
    from skelfuzz.difftest import classify, load_solver_config, run_all, write_bug
    from skelfuzz.smtlib import parse_script

    sc = load_solver_config(cfg)
    s = parse_script(text)
    (report,) = classify(s, run_all(s, sc.solvers), sc.solvers)
    bug = write_bug(report, tmp_path / "bugs", sc.solvers)
    reducer = FIXTURES / "bin" / "mock_reducer.py"
    code, stdout, _ = run(capsys, "triage", "reduce", str(bug), "--solvers", str(cfg), "--reducer", f"{reducer} {{test}} {{input}}")
    data = json.loads(stdout)
    assert code == 0 and data["status"] == "reduced" and data["reduced_bytes"] < data["original_bytes"]
    assert "(> x 0)" not in (bug / "reduced.smt2").read_text()

    crash_rules = mocks.rules("crashy", rules)
    fixed_rules = mocks.rules("fixed", {"stdout": "sat"})
    manifest = tmp_path / "builds.toml"
    entries = []
    for i in range(6):
        entries.append(f'[[build]]\ncommit = "c{i}"\npath = {json.dumps(sys.executable)}\n'
                       f'args = {json.dumps([str(FIXTURES / "bin" / "mock_solver.py"), str(crash_rules if i < 4 else fixed_rules), "{file}"])}\n')
    manifest.write_text("\n".join(entries))
    code, stdout, _ = run(capsys, "triage", "bisect", str(bug), "--manifest", str(manifest))
    data = json.loads(stdout)
    assert code == 0 and data["commit"] == "c4" and data["runs"] <= 5


def test_campaign_config(tmp_path, mocks):
    cfg = mocks.config({"A": {"stdout": "sat"}})
    p = tmp_path / "campaign.toml"
    p.write_text(f'[paths]\nsolvers = "{cfg}"\nseeds = "{FIXTURES / "seeds"}"\n[fuzz]\nmutations_per_seed = 3\n[foundry]\nsample_num = 5\n')
    c = load_campaign_config(p)
    assert c.fuzz.mutations_per_seed == 3 and c.foundry.sample_num == 5 and c.solvers.solvers[0].name == "A"
    p.write_text('[paths]\nseeds = "/definitely/missing"\n')
    with pytest.raises(ConfigError, match="does not exist"):
        load_campaign_config(p)
    p.write_text("[fuzz]\nmutations_per_seed = 0\n")
    with pytest.raises(ConfigError):
        load_campaign_config(p)
    p.write_text("[fuzz]\nbogus = 1\n")
    with pytest.raises(ConfigError, match="unknown"):
        load_campaign_config(p)


def test_config_drives_fuzz_run(capsys, tmp_path):
    p = tmp_path / "campaign.toml"
    p.write_text(f'[paths]\nseeds = "{FIXTURES / "seeds"}"\n[fuzz]\nmax_mutants = 4\n')
    code, out, _ = run(capsys, "--config", str(p), "fuzz", "run")
    assert code == 0 and json.loads(out)["mutants"] == 4


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "skelfuzz", "gen", "sample", str(GRAMMARS / "Core.smtg"), "-n", "1"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0 and proc.stdout.startswith("(set-logic ALL)")
