"""Skeleton extraction (atoms -> placeholders) and re-synthesis."""

from __future__ import annotations

import random
import re
from dataclasses import dataclass
from typing import TYPE_CHECKING, Mapping

from .smtlib import (
    OPAQUE,
    Assert,
    DeclareConst,
    DeclareFun,
    Hole,
    Let,
    Quant,
    Script,
    SetLogic,
    Sort,
    SortError,
    Term,
    children,
    enumerate_atoms,
    fresh_name,
    rename_free,
    replace_at,
    sort_of,
    theories_of,
)
from .smtlib.ast import BOOL, Sym
from .smtlib.atoms import Path, _replace
from .smtlib.sorts import compatible

if TYPE_CHECKING:
    from .termgen import GeneratedTerm

__all__ = [
    "MissingAssignment",
    "NoAtoms",
    "Placeholder",
    "Skeleton",
    "SortMismatch",
    "fill",
    "logic_theories",
    "skeletonize",
]


class NoAtoms(ValueError):
    """The script has no assertion with a Boolean atom to abstract."""


class MissingAssignment(KeyError):
    def __init__(self, hole_id: int):
        super().__init__(hole_id)
        self.hole_id = hole_id

    def __str__(self):
        return f"no term assigned to placeholder {self.hole_id}"


class SortMismatch(TypeError):
    def __init__(self, hole_id: int, sort: Sort):
        super().__init__(f"term for placeholder {hole_id} has sort {sort}, expected Bool")
        self.hole_id = hole_id
        self.sort = sort


@dataclass(frozen=True)
class Placeholder:
    id: int
    path: Path
    scope_vars: tuple[tuple[str, Sort], ...]
    original: Term


@dataclass(frozen=True)
class Skeleton:
    base: Script
    holes: tuple[Placeholder, ...]

    def hole(self, hole_id: int) -> Placeholder:
        return self.holes[hole_id]


def _global_vars(s: Script) -> list[tuple[int, str, Sort]]:
    """Zero-arity declarations as (command index, name, sort)."""
    out = []
    for i, c in enumerate(s.commands):
        if isinstance(c, DeclareFun) and not c.args:
            out.append((i, c.name, c.result))
        elif isinstance(c, DeclareConst):
            out.append((i, c.name, c.sort))
    return out


def _scope_at(s: Script, path: Path, globals_: list[tuple[int, str, Sort]] | None = None) -> tuple[tuple[str, Sort], ...]:
    """Global zero-arity symbols declared before the assertion plus the
    binder variables enclosing ``path``; inner bindings shadow outer ones."""
    if globals_ is None:
        globals_ = _global_vars(s)
    scope: dict[str, Sort] = {name: sort for i, name, sort in globals_ if i < path[0]}
    bound: dict[str, Sort] = {}
    node = s.commands[path[0]].term
    for i in path[1:]:
        if isinstance(node, Quant):
            for name, sort in node.vars:
                scope.pop(name, None)
                scope[name] = sort
                bound[name] = sort
        elif isinstance(node, Let) and i == len(node.bindings):
            typed = []
            for name, value in node.bindings:
                try:
                    typed.append((name, sort_of(value, s.decls, bound)))
                except SortError:
                    typed.append((name, OPAQUE))
            for name, sort in typed:
                scope.pop(name, None)
                scope[name] = sort
                bound[name] = sort
        node = children(node)[i]
    return tuple(scope.items())


def skeletonize(s: Script, rng: random.Random, p_remove: float = 0.5) -> Skeleton:
    """Replace a random subset of atoms with placeholders.

    Each atom is removed independently with probability ``p_remove``; when
    the draw removes nothing, one atom chosen uniformly is removed instead.
    """
    atoms = enumerate_atoms(s)
    if not atoms:
        raise NoAtoms("script has no Boolean atoms to abstract")
    chosen = [a for a in atoms if rng.random() < p_remove]
    if not chosen:
        chosen = [atoms[rng.randrange(len(atoms))]]
    holes = []
    base = s
    globals_ = _global_vars(s)
    for hid, (path, atom) in enumerate(chosen):
        holes.append(Placeholder(hid, path, _scope_at(s, path, globals_), atom))
        base = replace_at(base, path, Hole(hid))
    return Skeleton(base, tuple(holes))


# ---------------------------------------------------------------- logics

_LOGIC = re.compile(
    r"^(?P<qf>QF_)?(?P<ax>AX|A)?(?P<uf>UF)?(?P<dt>DT)?(?P<bv>BV)?(?P<fp>FP)?(?P<ff>FF)?(?P<s>S)?"
    r"(?P<arith>LIRA|NIRA|IRA|LIA|NIA|IA|IDL|LRA|NRA|RA|RDL)?$"
)


def logic_theories(logic: str) -> set[str] | None:
    """Theory tags admitted by an SMT-LIB logic name; ``None`` means
    anything goes (``ALL`` or a name we cannot decode)."""
    if logic == "ALL":
        return None
    m = _LOGIC.match(logic)
    if m is None or not logic:
        return None
    tags = {"Core"}
    if not m["qf"]:
        tags.add("Quantifiers")
    if m["ax"]:
        tags.add("Arrays")
    if m["uf"]:
        tags.add("UF")
    if m["dt"]:
        tags.add("Datatypes")
    if m["bv"]:
        tags.add("BV")
    if m["s"]:
        tags.update({"Strings", "Ints"})
    arith = m["arith"] or ""
    if "I" in arith:
        tags.add("Ints")
    if "R" in arith:
        tags.add("Reals")
    if "IR" in arith:
        tags.add("Reals_Ints")
    return tags


# ---------------------------------------------------------------- fill


def _renamed_decl(cmd, new_name: str):
    if isinstance(cmd, DeclareFun):
        return DeclareFun(new_name, cmd.args, cmd.result)
    if isinstance(cmd, DeclareConst):
        return DeclareConst(new_name, cmd.sort)
    return cmd


def _decl_name(cmd) -> str | None:
    return cmd.name if isinstance(cmd, (DeclareFun, DeclareConst)) else None


def fill(sk: Skeleton, assignment: Mapping[int, GeneratedTerm]) -> Script:
    """Replace every placeholder with its assigned term.

    Generated declarations are inserted immediately before the first
    assertion. Every generated symbol is re-allocated with
    :func:`fresh_name` against the skeleton's symbols, all hole scopes and
    all incoming generated names, so symbols from different holes never
    merge and binders never capture them.
    """
    for hole in sk.holes:
        if hole.id not in assignment:
            raise MissingAssignment(hole.id)

    base = sk.base
    base_ctx = base.decls
    reserved = set(base_ctx.symbols())
    for hole in sk.holes:
        reserved.update(name for name, _ in hole.scope_vars)
    for hole in sk.holes:
        for cmd in assignment[hole.id].decls:
            name = _decl_name(cmd)
            if name:
                reserved.add(name)

    new_decls = []
    filled: dict[int, Term] = {}
    ctx = base_ctx.copy()
    for hole in sk.holes:
        gt = assignment[hole.id]
        mapping = {}
        for cmd in gt.decls:
            name = _decl_name(cmd)
            if name is None:
                new_decls.append(cmd)
                ctx.add(cmd)
                continue
            new = fresh_name(name, reserved)
            reserved.add(new)
            if new != name:
                mapping[name] = Sym(new)
            renamed = _renamed_decl(cmd, new)
            new_decls.append(renamed)
            ctx.add(renamed)
        term = rename_free(gt.term, mapping)
        sort = sort_of(term, ctx, hole.scope_vars)
        if not compatible(sort, BOOL):
            raise SortMismatch(hole.id, sort)
        filled[hole.id] = term

    # the logic only needs widening for terms that are not the removed atoms
    needs_all = False
    logic_cmd = next((c for c in base.commands if isinstance(c, SetLogic)), None)
    if logic_cmd is not None and logic_cmd.logic != "ALL":
        allowed = logic_theories(logic_cmd.logic)
        for hole in sk.holes:
            term = filled[hole.id]
            if term == hole.original:
                continue
            if allowed is None or not theories_of(term, ctx) <= allowed:
                needs_all = True
                break

    commands = list(base.commands)
    for hole in sk.holes:
        path = hole.path
        commands[path[0]] = Assert(_replace(commands[path[0]].term, path[1:], filled[hole.id]))
    if needs_all:
        commands = [SetLogic("ALL") if isinstance(c, SetLogic) else c for c in commands]
    first_assert = next(i for i, c in enumerate(commands) if isinstance(c, Assert))
    commands[first_assert:first_assert] = new_decls
    return Script(tuple(commands))
