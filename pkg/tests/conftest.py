import json
import shutil
import sys
from pathlib import Path

import pytest

from skelfuzz.difftest import SolverCmd

HERE = Path(__file__).parent
FIXTURES = HERE / "fixtures"
MOCK = FIXTURES / "bin" / "mock_solver.py"
WORKED = FIXTURES / "worked"

sys.path.insert(0, str(HERE))

SAT = {"stdout": "sat"}
UNSAT = {"stdout": "unsat"}
UNKNOWN = {"stdout": "unknown"}
TIMEOUT = {"stdout": "sat", "sleep": 5}
REJECT = {"stdout": '(error "line 1 column 2: unknown constant foo")'}
CRASH = {"stderr": "ASSERTION VIOLATION\nFile: /src/theory/arith.cpp\nLine: 1234", "exit": 134}

# model scripts (declarations replaced by define-fun) are recognisable by
# the define-fun of the variable the mocks solve for
MODEL_X = "(model (define-fun x () Int 1))"


def worked_text(name: str) -> str:
    return (WORKED / name).read_text(encoding="utf-8")


class MockFactory:
    """Writes rule files for the scripted solver and builds commands."""

    def __init__(self, root: Path):
        self.root = root
        self.root.mkdir(parents=True, exist_ok=True)

    def rules(self, name: str, rules) -> Path:
        if isinstance(rules, dict):
            rules = [rules]
        p = self.root / f"{name}.json"
        p.write_text(json.dumps(rules), encoding="utf-8")
        return p

    def cmd(self, name: str, rules, timeout_s: float = 3.0, family: str = "", version: str = "") -> SolverCmd:
        rp = self.rules(name, rules)
        return SolverCmd(name, sys.executable, (str(MOCK), str(rp), "{file}"), timeout_s, None, version, family)

    def config(self, solvers: dict, name: str = "solvers.toml", timeout_s: float = 3.0) -> Path:
        lines = []
        for sname, rules in solvers.items():
            rp = self.rules(sname, rules)
            lines += [
                "[[solver]]",
                f'name = "{sname}"',
                f"cmd = {json.dumps(sys.executable)}",
                f"args = {json.dumps([str(MOCK), str(rp), '{file}'])}",
                f"timeout_s = {timeout_s}",
                "",
            ]
        p = self.root / name
        p.write_text("\n".join(lines), encoding="utf-8")
        return p


@pytest.fixture
def mocks(tmp_path) -> MockFactory:
    return MockFactory(tmp_path / "mocks")


@pytest.fixture(scope="session")
def z3_path():
    path = shutil.which("z3")
    if path is None:
        pytest.skip("z3 not installed")
    return path


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion this test decides")
    config._acceptance_lines = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or (rep.when != "call" and not (rep.skipped or rep.failed)):
        return
    n, title = mark.args
    if rep.skipped and hasattr(rep, "wasxfail"):
        verdict = "FAIL (expected)"
    else:
        verdict = "PASS" if rep.passed else "SKIP" if rep.skipped else "FAIL"
    details = "; ".join(str(v) for k, v in item.user_properties if k == "detail")
    line = f"criterion {n}: {verdict:<15} {title}" + (f"  [{details}]" if details else "")
    item.config._acceptance_lines.append(line)
    print("\n" + line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
