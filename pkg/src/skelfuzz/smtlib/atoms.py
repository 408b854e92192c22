"""Atom enumeration, free variables, paths and renaming over terms."""

from __future__ import annotations

import re
from typing import Iterable

from .ast import (
    App,
    Assert,
    Annot,
    DeclContext,
    Hole,
    Let,
    Opaque,
    Quant,
    Script,
    Sort,
    SortError,
    Sym,
    Term,
    children,
    with_children,
)
from .sorts import CONNECTIVES, CONSTANTS

__all__ = [
    "Path",
    "enumerate_atoms",
    "free_vars",
    "fresh_name",
    "get_at",
    "replace_at",
    "binders_on_path",
    "rename_free",
    "symbols_in",
]

# (command index, child index, child index, ...)
Path = tuple[int, ...]


def _is_connective(t: Term) -> bool:
    return isinstance(t, App) and t.plain and t.name in CONNECTIVES


def _atoms_of(t: Term, prefix: Path, out: list):
    stack = [(t, prefix)]
    found = []
    while stack:
        node, path = stack.pop()
        if _is_connective(node):
            for i in reversed(range(len(node.args))):
                stack.append((node.args[i], path + (i,)))
        elif isinstance(node, (Quant, Annot)):
            stack.append((node.body, path + (0,)))
        elif isinstance(node, Let):
            stack.append((node.body, path + (len(node.bindings),)))
        elif isinstance(node, (Hole, Opaque)):
            continue
        else:
            found.append((path, node))
    out.extend(found)


def enumerate_atoms(s: Script) -> list[tuple[Path, Term]]:
    """Maximal non-connective Boolean subterms of every assertion.

    Descends through and/or/not/=>/xor, quantifier bodies, let bodies and
    annotations; quantifiers themselves are never atoms. Paths start with the
    index of the assert command inside ``s.commands``.
    """
    out: list[tuple[Path, Term]] = []
    for ci, cmd in enumerate(s.commands):
        if isinstance(cmd, Assert):
            _atoms_of(cmd.term, (ci,), out)
    return out


def get_at(s: Script, path: Path) -> Term:
    node = s.commands[path[0]].term
    for i in path[1:]:
        node = children(node)[i]
    return node


def _replace(t: Term, rel: Path, new: Term) -> Term:
    if not rel:
        return new
    kids = list(children(t))
    kids[rel[0]] = _replace(kids[rel[0]], rel[1:], new)
    return with_children(t, tuple(kids))


def replace_at(s: Script, path: Path, new: Term) -> Script:
    cmds = list(s.commands)
    cmds[path[0]] = Assert(_replace(cmds[path[0]].term, path[1:], new))
    return Script(tuple(cmds))


def binders_on_path(s: Script, path: Path) -> list[tuple[str, Sort | None]]:
    """Variables bound by quantifiers and lets enclosing ``path``, outermost
    first. Let-bound names carry ``None``; callers type them on demand."""
    out: list[tuple[str, Sort | None]] = []
    node = s.commands[path[0]].term
    for i in path[1:]:
        if isinstance(node, Quant):
            out.extend(node.vars)
        elif isinstance(node, Let) and i == len(node.bindings):
            out.extend((name, None) for name, _ in node.bindings)
        node = children(node)[i]
    return out


def free_vars(t: Term, ctx: DeclContext) -> set[tuple[str, Sort]]:
    """Declared zero-arity symbols occurring free in ``t``, with sorts."""
    out: set[tuple[str, Sort]] = set()
    stack: list[tuple[Term, frozenset]] = [(t, frozenset())]
    while stack:
        node, bound = stack.pop()
        if isinstance(node, Sym) or (isinstance(node, App) and node.plain and not node.args):
            name = node.name
            if name in bound:
                continue
            if ctx.is_variable(name):
                out.add((name, ctx.funs[name].result))
            elif ctx.lookup(name) is None and name not in CONSTANTS and name not in ctx.opaque:
                raise SortError(f"unresolved symbol {name}", node)
        elif isinstance(node, Quant):
            stack.append((node.body, bound | {n for n, _ in node.vars}))
        elif isinstance(node, Let):
            for _, v in node.bindings:
                stack.append((v, bound))
            stack.append((node.body, bound | {n for n, _ in node.bindings}))
        else:
            for c in children(node):
                stack.append((c, bound))
    return out


_TRAILING_DIGITS = re.compile(r"[0-9]+$")


def fresh_name(base: str, taken: Iterable[str]) -> str:
    """``base`` if unused, otherwise ``base`` with its trailing digits
    replaced by the smallest positive integer giving an unused name."""
    taken = taken if isinstance(taken, (set, frozenset, dict)) else set(taken)
    if base not in taken:
        return base
    stem = _TRAILING_DIGITS.sub("", base) or base
    i = 1
    while f"{stem}{i}" in taken:
        i += 1
    return f"{stem}{i}"


def rename_free(t: Term, mapping: dict[str, Term]) -> Term:
    """Substitute free occurrences of symbols; bound occurrences are kept."""
    if not mapping:
        return t
    return _subst(t, mapping)


def _subst(t: Term, mapping: dict[str, Term]) -> Term:
    if isinstance(t, Sym):
        return mapping.get(t.name, t)
    if isinstance(t, Quant):
        inner = {k: v for k, v in mapping.items() if all(k != n for n, _ in t.vars)}
        return Quant(t.quantifier, t.vars, _subst(t.body, inner)) if inner else t
    if isinstance(t, Let):
        binds = tuple((n, _subst(v, mapping)) for n, v in t.bindings)
        inner = {k: v for k, v in mapping.items() if all(k != n for n, _ in t.bindings)}
        return Let(binds, _subst(t.body, inner) if inner else t.body)
    kids = children(t)
    if not kids:
        return t
    return with_children(t, tuple(_subst(c, mapping) for c in kids))


def symbols_in(t: Term) -> set[str]:
    """Every symbol name occurring in ``t`` (heads, references, binders)."""
    out: set[str] = set()
    stack = [t]
    while stack:
        node = stack.pop()
        if isinstance(node, Sym):
            out.add(node.name)
        elif isinstance(node, App):
            out.add(node.name)
        elif isinstance(node, Quant):
            out.update(n for n, _ in node.vars)
        elif isinstance(node, Let):
            out.update(n for n, _ in node.bindings)
        stack.extend(children(node))
    return out
