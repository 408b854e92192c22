"""Canonical SMT-LIB rendering: one command per line, single spaces."""

from __future__ import annotations

from .ast import (
    Annot,
    App,
    Assert,
    CheckSat,
    Command,
    Const,
    DeclareConst,
    DeclareDatatypes,
    DeclareFun,
    DeclareSort,
    DefineFun,
    GetModel,
    Hole,
    Let,
    Opaque,
    Passthrough,
    Qual,
    Quant,
    Script,
    SetLogic,
    SetOption,
    Sym,
    Term,
    children,
)

__all__ = ["PlaceholderError", "print_term", "print_command", "print_script"]


class PlaceholderError(ValueError):
    """A script handed to the printer still contains placeholder holes."""


def _ident(name: str, indices: tuple[str, ...]) -> str:
    return f"(_ {name} {' '.join(indices)})" if indices else name


def _head(t: App | Qual) -> str:
    ident = _ident(t.name, t.indices)
    return f"(as {ident} {t.sort})" if t.sort is not None else ident


def print_term(t: Term, holes: bool = False) -> str:
    """Render ``t``. Holes print as ``<pN>`` when ``holes`` is set and raise
    :class:`PlaceholderError` otherwise."""
    out: list[str] = []
    # (node, expanded) pairs; iterative so deep terms print without recursion
    stack: list = [t]
    while stack:
        node = stack.pop()
        if isinstance(node, str):
            out.append(node)
        elif isinstance(node, Sym):
            out.append(node.name)
        elif isinstance(node, Const):
            out.append(node.text)
        elif isinstance(node, App):
            if not node.args:
                out.append(f"({_head(node)})")
                continue
            out.append(f"({_head(node)}")
            stack.append(")")
            for a in reversed(node.args):
                stack.append(a)
                stack.append(" ")
        elif isinstance(node, Qual):
            out.append(_head(node))
        elif isinstance(node, Quant):
            vs = " ".join(f"({n} {s})" for n, s in node.vars)
            out.append(f"({node.quantifier} ({vs}) ")
            stack.append(")")
            stack.append(node.body)
        elif isinstance(node, Let):
            out.append("(let (")
            stack.append(")")
            stack.append(node.body)
            stack.append(") ")
            for i in reversed(range(len(node.bindings))):
                name, value = node.bindings[i]
                stack.append(")")
                stack.append(value)
                stack.append(f"({name} ")
                if i:
                    stack.append(" ")
        elif isinstance(node, Annot):
            attrs = " ".join(k if v is None else f"{k} {v}" for k, v in node.attrs)
            out.append("(! ")
            stack.append(f" {attrs})" if attrs else ")")
            stack.append(node.body)
        elif isinstance(node, Hole):
            if not holes:
                raise PlaceholderError(f"placeholder <p{node.id}> cannot be printed into a solver script")
            out.append(f"<p{node.id}>")
        elif isinstance(node, Opaque):
            out.append(node.text)
        else:  # pragma: no cover - exhaustive over Term subclasses
            raise TypeError(f"not a term: {node!r}")
    return "".join(out)


def print_command(c: Command, holes: bool = False) -> str:
    if isinstance(c, Assert):
        return f"(assert {print_term(c.term, holes)})"
    if isinstance(c, DeclareFun):
        return f"(declare-fun {c.name} ({' '.join(str(s) for s in c.args)}) {c.result})"
    if isinstance(c, DeclareConst):
        return f"(declare-const {c.name} {c.sort})"
    if isinstance(c, CheckSat):
        return "(check-sat)"
    if isinstance(c, GetModel):
        return "(get-model)"
    if isinstance(c, SetLogic):
        return f"(set-logic {c.logic})"
    if isinstance(c, SetOption):
        return f"(set-option {c.option} {c.value})" if c.value is not None else f"(set-option {c.option})"
    if isinstance(c, DeclareSort):
        return f"(declare-sort {c.name} {c.arity})"
    if isinstance(c, DefineFun):
        params = " ".join(f"({n} {s})" for n, s in c.params)
        return f"(define-fun {c.name} ({params}) {c.result} {print_term(c.body, holes)})"
    if isinstance(c, DeclareDatatypes):
        return c.text
    if isinstance(c, Passthrough):
        return c.text
    raise TypeError(f"not a command: {c!r}")


def print_script(s: Script, holes: bool = False) -> str:
    return "\n".join(print_command(c, holes) for c in s.commands)


def term_size(t: Term) -> int:
    n = 0
    stack = [t]
    while stack:
        node = stack.pop()
        n += 1
        stack.extend(children(node))
    return n
