"""Immutable abstract syntax for SMT-LIB v2 scripts."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterator, Union


class SortError(Exception):
    """A term is ill-sorted or refers to an unresolved symbol."""

    def __init__(self, message: str, term: "Term | None" = None):
        super().__init__(message)
        self.term = term


@dataclass(frozen=True)
class Sort:
    name: str
    params: tuple["Sort", ...] = ()
    indices: tuple[Union[int, str], ...] = ()

    def __str__(self) -> str:
        if self.indices:
            return f"(_ {self.name} {' '.join(str(i) for i in self.indices)})"
        if self.params:
            return f"({self.name} {' '.join(str(p) for p in self.params)})"
        return self.name


BOOL = Sort("Bool")
INT = Sort("Int")
REAL = Sort("Real")
STRING = Sort("String")
REGLAN = Sort("RegLan")
# Result of terms headed by symbols outside the supported theories; compatible
# with every sort so that solver extensions survive checking.
OPAQUE = Sort("?")


def bitvec(width: int) -> Sort:
    return Sort("BitVec", indices=(width,))


def array(index: Sort, elem: Sort) -> Sort:
    return Sort("Array", params=(index, elem))


class Term:
    __slots__ = ()


@dataclass(frozen=True, slots=True)
class Const(Term):
    """Literal kept as its exact source text (numerals are never converted)."""

    kind: str  # num, dec, str, bin, hex
    text: str


@dataclass(frozen=True, slots=True)
class Sym(Term):
    name: str


@dataclass(frozen=True, slots=True)
class Qual(Term):
    """Indexed and/or sort-qualified identifier used without arguments,
    e.g. ``(_ bv5 32)`` or ``(as seq.empty (Seq Int))``."""

    name: str
    indices: tuple[str, ...] = ()
    sort: Sort | None = None


@dataclass(frozen=True, slots=True)
class App(Term):
    name: str
    args: tuple[Term, ...]
    indices: tuple[str, ...] = ()
    sort: Sort | None = None

    @property
    def plain(self) -> bool:
        return not self.indices and self.sort is None


@dataclass(frozen=True, slots=True)
class Let(Term):
    bindings: tuple[tuple[str, Term], ...]
    body: Term


@dataclass(frozen=True, slots=True)
class Quant(Term):
    quantifier: str  # forall | exists
    vars: tuple[tuple[str, Sort], ...]
    body: Term


@dataclass(frozen=True, slots=True)
class Annot(Term):
    body: Term
    attrs: tuple[tuple[str, str | None], ...]


@dataclass(frozen=True, slots=True)
class Hole(Term):
    """Placeholder for a removed atom; only ever inside a skeleton."""

    id: int


@dataclass(frozen=True, slots=True)
class Opaque(Term):
    """Term form we do not model (match, lambda, ...), kept verbatim."""

    text: str


def children(t: Term) -> tuple[Term, ...]:
    """Child terms in path order. For ``let`` the bound values come first and
    the body is last."""
    if isinstance(t, App):
        return t.args
    if isinstance(t, Let):
        return tuple(v for _, v in t.bindings) + (t.body,)
    if isinstance(t, (Quant, Annot)):
        return (t.body,)
    return ()


def with_children(t: Term, kids: tuple[Term, ...]) -> Term:
    if isinstance(t, App):
        return App(t.name, tuple(kids), t.indices, t.sort)
    if isinstance(t, Let):
        n = len(t.bindings)
        return Let(tuple((name, kids[i]) for i, (name, _) in enumerate(t.bindings)), kids[n])
    if isinstance(t, Quant):
        return Quant(t.quantifier, t.vars, kids[0])
    if isinstance(t, Annot):
        return Annot(kids[0], t.attrs)
    if kids:
        raise ValueError(f"{type(t).__name__} has no children")
    return t


def walk(t: Term) -> Iterator[Term]:
    """Pre-order traversal."""
    stack = [t]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(children(node)))


def has_holes(t: Term) -> bool:
    return any(isinstance(n, Hole) for n in walk(t))


# ---------------------------------------------------------------- commands


class Command:
    __slots__ = ()


@dataclass(frozen=True, slots=True)
class SetLogic(Command):
    logic: str


@dataclass(frozen=True, slots=True)
class SetOption(Command):
    option: str
    value: str | None = None


@dataclass(frozen=True, slots=True)
class DeclareSort(Command):
    name: str
    arity: int = 0


@dataclass(frozen=True, slots=True)
class DeclareFun(Command):
    name: str
    args: tuple[Sort, ...]
    result: Sort


@dataclass(frozen=True, slots=True)
class DeclareConst(Command):
    name: str
    sort: Sort


@dataclass(frozen=True, slots=True)
class Constructor:
    name: str
    fields: tuple[tuple[str, Sort], ...] = ()


@dataclass(frozen=True, slots=True)
class Datatype:
    name: str
    arity: int
    # empty for parametric datatypes, whose constructors we do not type
    constructors: tuple[Constructor, ...] = ()


@dataclass(frozen=True, slots=True)
class DeclareDatatypes(Command):
    text: str
    datatypes: tuple[Datatype, ...] = field(default=(), compare=False)


@dataclass(frozen=True, slots=True)
class DefineFun(Command):
    name: str
    params: tuple[tuple[str, Sort], ...]
    result: Sort
    body: Term


@dataclass(frozen=True, slots=True)
class Assert(Command):
    term: Term


@dataclass(frozen=True, slots=True)
class CheckSat(Command):
    pass


@dataclass(frozen=True, slots=True)
class GetModel(Command):
    pass


@dataclass(frozen=True, slots=True)
class Passthrough(Command):
    """Unmodelled command, kept as canonical source text."""

    text: str

    @property
    def head(self) -> str:
        return self.text[1:].split(None, 1)[0].rstrip(")") if self.text.startswith("(") else ""


# ---------------------------------------------------------------- context


@dataclass(frozen=True)
class Rank:
    args: tuple[Sort, ...]
    result: Sort


class DeclContext:
    """Symbol table derived from a script's declaration commands."""

    def __init__(self):
        self.funs: dict[str, Rank] = {}  # declare-fun / declare-const
        self.defs: dict[str, Rank] = {}  # define-fun
        self.sorts: dict[str, int] = {}
        self.constructors: dict[str, Rank] = {}
        self.selectors: dict[str, Rank] = {}
        self.opaque: set[str] = set()

    def copy(self) -> "DeclContext":
        ctx = DeclContext()
        ctx.funs = dict(self.funs)
        ctx.defs = dict(self.defs)
        ctx.sorts = dict(self.sorts)
        ctx.constructors = dict(self.constructors)
        ctx.selectors = dict(self.selectors)
        ctx.opaque = set(self.opaque)
        return ctx

    def lookup(self, name: str) -> Rank | None:
        return self.funs.get(name) or self.defs.get(name) or self.constructors.get(name)

    def is_variable(self, name: str) -> bool:
        rank = self.funs.get(name)
        return rank is not None and not rank.args

    def variables(self) -> list[tuple[str, Sort]]:
        return [(n, r.result) for n, r in self.funs.items() if not r.args]

    def symbols(self) -> set[str]:
        return (
            set(self.funs)
            | set(self.defs)
            | set(self.constructors)
            | set(self.selectors)
            | set(self.sorts)
            | self.opaque
        )

    def _bind(self, table: dict, name: str, rank: Rank):
        old = self.lookup(name)
        if old is not None and old != rank:
            raise SortError(f"symbol {name} redeclared with conflicting rank")
        table[name] = rank

    def add(self, cmd: Command) -> None:
        if isinstance(cmd, DeclareFun):
            self._bind(self.funs, cmd.name, Rank(cmd.args, cmd.result))
        elif isinstance(cmd, DeclareConst):
            self._bind(self.funs, cmd.name, Rank((), cmd.sort))
        elif isinstance(cmd, DefineFun):
            self._bind(self.defs, cmd.name, Rank(tuple(s for _, s in cmd.params), cmd.result))
        elif isinstance(cmd, DeclareSort):
            self.sorts[cmd.name] = cmd.arity
        elif isinstance(cmd, DeclareDatatypes):
            for dt in cmd.datatypes:
                self.sorts[dt.name] = dt.arity
                if dt.arity:
                    self.opaque.add(dt.name)
                    continue
                dt_sort = Sort(dt.name)
                for ctor in dt.constructors:
                    self.constructors[ctor.name] = Rank(tuple(s for _, s in ctor.fields), dt_sort)
                    for sel, s in ctor.fields:
                        self.selectors[sel] = Rank((dt_sort,), s)
            if not cmd.datatypes:
                self.opaque.add(cmd.text)
        elif isinstance(cmd, Passthrough):
            # define-const, define-fun-rec, declare-codatatypes, ...: remember
            # the introduced name so references are not reported as unresolved
            parts = cmd.text[1:-1].split()
            if len(parts) > 1 and parts[0].startswith(("define", "declare")):
                self.opaque.add(parts[1].strip("()"))


@dataclass(frozen=True)
class Script:
    commands: tuple[Command, ...]

    @cached_property
    def decls(self) -> DeclContext:
        ctx = DeclContext()
        for cmd in self.commands:
            ctx.add(cmd)
        return ctx

    @property
    def asserts(self) -> list[Assert]:
        return [c for c in self.commands if isinstance(c, Assert)]

    def has_holes(self) -> bool:
        return any(isinstance(c, Assert) and has_holes(c.term) for c in self.commands)


def decls_before(script: Script, index: int) -> DeclContext:
    """Context built from the commands preceding ``commands[index]``."""
    ctx = DeclContext()
    for cmd in script.commands[:index]:
        ctx.add(cmd)
    return ctx
