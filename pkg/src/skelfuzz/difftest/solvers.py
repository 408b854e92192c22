"""Solver command descriptions and the TOML solver configuration."""

from __future__ import annotations

import os
import shutil
import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

DEFAULT_CRASH_PATTERNS = (
    "ASSERTION VIOLATION",
    "Segmentation fault",
    "Fatal failure",
    "INTERNAL ERROR",
    "AddressSanitizer",
)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SolverCmd:
    name: str
    path: str
    args: tuple[str, ...] = ("{file}",)
    timeout_s: float = 10.0
    mem_mb: int | None = 4096
    version: str = ""
    family: str = ""

    @property
    def group(self) -> str:
        return self.family or self.name

    def argv(self, file: str | Path) -> list[str]:
        return [self.path, *(a.replace("{file}", str(file)) for a in self.args)]

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "cmd": self.path,
            "args": list(self.args),
            "timeout_s": self.timeout_s,
            "mem_mb": self.mem_mb,
            "version": self.version,
            "family": self.family,
        }


@dataclass(frozen=True)
class SolverConfig:
    solvers: tuple[SolverCmd, ...]
    crash_patterns: tuple[str, ...] = DEFAULT_CRASH_PATTERNS
    extra: dict = field(default_factory=dict, compare=False)


def resolve_executable(cmd: str, base: Path | None = None) -> str:
    p = Path(cmd).expanduser()
    if not p.is_absolute() and base is not None and (os.sep in cmd or cmd.startswith(".")):
        p = base / p
    if p.is_file():
        if not os.access(p, os.X_OK):
            raise ConfigError(f"solver executable {p} is not executable")
        return str(p.resolve())
    found = shutil.which(cmd)
    if found is None:
        raise ConfigError(f"solver executable {cmd!r} not found")
    return found


def solver_from_table(t: dict, base: Path | None = None, check: bool = True) -> SolverCmd:
    try:
        name, cmd = t["name"], t["cmd"]
    except KeyError as e:
        raise ConfigError(f"[[solver]] entry missing {e.args[0]!r}") from None
    args = t.get("args", ["{file}"])
    if not isinstance(args, list) or not all(isinstance(a, str) for a in args):
        raise ConfigError(f"solver {name}: args must be a list of strings")
    timeout = float(t.get("timeout_s", 10.0))
    if timeout <= 0:
        raise ConfigError(f"solver {name}: timeout_s must be positive")
    mem = t.get("mem_mb", 4096)
    if mem is not None and (not isinstance(mem, int) or mem <= 0):
        raise ConfigError(f"solver {name}: mem_mb must be a positive integer")
    path = resolve_executable(cmd, base) if check else cmd
    return SolverCmd(name, path, tuple(args), timeout, mem or None, str(t.get("version", "")), str(t.get("family", "")))


def parse_solver_config(data: dict, base: Path | None = None, check: bool = True) -> SolverConfig:
    tables = data.get("solver", [])
    if not isinstance(tables, list):
        raise ConfigError("expected [[solver]] array of tables")
    solvers = tuple(solver_from_table(t, base, check) for t in tables)
    names = [s.name for s in solvers]
    if len(set(names)) != len(names):
        raise ConfigError("solver names must be unique")
    patterns = data.get("crash_patterns")
    if patterns is None:
        patterns = DEFAULT_CRASH_PATTERNS
    else:
        patterns = tuple(DEFAULT_CRASH_PATTERNS) + tuple(p for p in patterns if p not in DEFAULT_CRASH_PATTERNS)
    extra = {k: v for k, v in data.items() if k not in ("solver", "crash_patterns")}
    return SolverConfig(solvers, tuple(patterns), extra)


def load_solver_config(path: str | Path, check: bool = True) -> SolverConfig:
    """Read ``[[solver]]`` tables (name, cmd, args, timeout_s, mem_mb,
    version, family) and an optional top-level ``crash_patterns`` list.
    Relative executable paths resolve against the config file's directory."""
    path = Path(path)
    try:
        data = tomllib.loads(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise ConfigError(f"cannot read solver config {path}: {e}") from None
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"{path}: {e}") from None
    return parse_solver_config(data, path.parent, check)
