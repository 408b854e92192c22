"""Declarative weighted theory grammars (``.smtg`` files).

Format::

    (grammar :theory Ints :start B [:max-depth 6]
      (rule B ((">=" I I) 2) (("(_ divisible 3)" I) 1))
      (rule I (("+" I I) 2) ((var Int) 3) ((lit Int) 2))
      [(decl Int "(declare-const {name} {sort})")])

A production is ``(form weight)``. ``form`` is either an operator string
followed by child nonterminals (the string is spliced verbatim as the
application head), ``(var SORT)`` for a fresh variable or ``(lit SORT)``
for a literal.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from ..smtlib import ParseError, Sort
from ..smtlib.parser import _qual_identifier, sort_from
from ..smtlib.sexpr import Atom, SList, read_sexprs, to_text

DEFAULT_MAX_DEPTH = 6
DEFAULT_DECL = "(declare-fun {name} () {sort})"


class GrammarError(ValueError):
    """A grammar file is malformed or fails validation."""


@dataclass(frozen=True)
class Production:
    kind: str  # op | var | lit
    weight: float
    op: str = ""
    children: tuple[str, ...] = ()
    sort: Sort | None = None
    # parsed head of ``op``: name, indices, qualifying sort
    head: tuple[str, tuple[str, ...], Sort | None] | None = field(default=None, compare=False)

    @property
    def terminal(self) -> bool:
        return self.kind != "op" or not self.children


@dataclass(frozen=True)
class TheoryGrammar:
    theory_name: str
    start: str
    rules: dict[str, tuple[Production, ...]]
    decl_templates: dict[Sort, str] = field(default_factory=dict)
    max_depth: int = DEFAULT_MAX_DEPTH
    source: str = field(default="", compare=False)

    def __hash__(self):
        return hash((self.theory_name, self.start, self.source))

    def decl_template(self, sort: Sort) -> str:
        return self.decl_templates.get(sort, DEFAULT_DECL)


# sorts for which literal generators exist; variables additionally exclude RegLan
_LIT_SORTS = {"Bool", "Int", "Real", "String", "RegLan", "BitVec", "Array"}


def supported_sort(s: Sort, for_var: bool = False) -> bool:
    if s.name == "BitVec":
        return len(s.indices) == 1 and isinstance(s.indices[0], int) and s.indices[0] > 0
    if s.name == "Array":
        return len(s.params) == 2 and all(supported_sort(p, for_var) for p in s.params)
    if s.params or s.indices:
        return False
    if for_var and s.name == "RegLan":
        return False
    return s.name in _LIT_SORTS


def _err(node, msg: str):
    if node is not None and hasattr(node, "line"):
        msg = f"{node.line}:{node.column}: {msg}"
    raise GrammarError(msg)


def _weight(node) -> float:
    if not isinstance(node, Atom) or node.kind not in ("num", "dec"):
        _err(node, f"weight must be a number, got {to_text(node)!r}")
    w = float(node.text)
    if w <= 0:
        _err(node, f"weight must be positive, got {node.text}")
    return w


def _production(node) -> Production:
    if not isinstance(node, SList) or len(node.items) != 2:
        _err(node, "production must be (form weight)")
    form, weight = node.items
    w = _weight(weight)
    if not isinstance(form, SList) or not form.items:
        _err(form, "production form must be a non-empty list")
    head = form.items[0]
    if isinstance(head, Atom) and head.kind == "str":
        op = head.text[1:-1].replace('""', '"')
        try:
            nodes = read_sexprs(op)
            if len(nodes) != 1:
                raise ParseError("expected one identifier", 1, 1, op)
            parsed = _qual_identifier(nodes[0])
        except ParseError as e:
            raise GrammarError(f"operator {op!r} is not an SMT-LIB identifier: {e}") from None
        kids = []
        for c in form.items[1:]:
            if not isinstance(c, Atom) or c.kind != "sym":
                _err(c, "operator children must be nonterminal names")
            kids.append(c.text)
        return Production("op", w, op=op, children=tuple(kids), head=parsed)
    if isinstance(head, Atom) and head.text in ("var", "lit"):
        if len(form.items) != 2:
            _err(form, f"({head.text} SORT) takes exactly one sort")
        try:
            sort = sort_from(form.items[1])
        except ParseError as e:
            raise GrammarError(f"bad sort in {to_text(form)}: {e}") from None
        if not supported_sort(sort, for_var=head.text == "var"):
            _err(form, f"unknown or unsupported sort {sort} in {head.text} slot")
        return Production(head.text, w, sort=sort)
    _err(form, f"production must start with an operator string, var or lit: {to_text(form)}")


def parse_grammar(text: str, source: str = "<string>") -> TheoryGrammar:
    """Parse and validate grammar text."""
    try:
        nodes = read_sexprs(text)
    except ParseError as e:
        raise GrammarError(f"{source}: {e}") from None
    if len(nodes) != 1 or not isinstance(nodes[0], SList):
        raise GrammarError(f"{source}: expected a single (grammar ...) form")
    items = nodes[0].items
    if not items or not isinstance(items[0], Atom) or items[0].text != "grammar":
        raise GrammarError(f"{source}: expected a (grammar ...) form")
    theory = start = None
    max_depth = DEFAULT_MAX_DEPTH
    rules: dict[str, tuple[Production, ...]] = {}
    decls: dict[Sort, str] = {}
    i = 1
    while i < len(items):
        it = items[i]
        if isinstance(it, Atom) and it.kind == "kw":
            if i + 1 >= len(items):
                _err(it, f"keyword {it.text} without a value")
            value = items[i + 1]
            if it.text == ":theory":
                theory = to_text(value)
            elif it.text == ":start":
                start = to_text(value)
            elif it.text == ":max-depth":
                if not isinstance(value, Atom) or value.kind != "num" or int(value.text) < 1:
                    _err(value, ":max-depth must be a positive numeral")
                max_depth = int(value.text)
            else:
                _err(it, f"unknown grammar attribute {it.text}")
            i += 2
            continue
        if not isinstance(it, SList) or not it.items or not isinstance(it.items[0], Atom):
            _err(it, "expected (rule ...) or (decl ...)")
        kind = it.items[0].text
        if kind == "rule":
            if len(it.items) < 2 or not isinstance(it.items[1], Atom):
                _err(it, "rule needs a nonterminal name")
            nt = it.items[1].text
            if nt in rules:
                _err(it, f"duplicate rule for {nt}")
            rules[nt] = tuple(_production(p) for p in it.items[2:])
        elif kind == "decl":
            if len(it.items) != 3 or not isinstance(it.items[2], Atom) or it.items[2].kind != "str":
                _err(it, '(decl SORT "template") expected')
            decls[sort_from(it.items[1])] = it.items[2].text[1:-1].replace('""', '"')
        else:
            _err(it, f"unknown grammar form {kind}")
        i += 1
    if theory is None:
        raise GrammarError(f"{source}: missing :theory")
    if start is None:
        raise GrammarError(f"{source}: missing :start")
    g = TheoryGrammar(theory, start, rules, decls, max_depth, source)
    validate(g)
    return g


def validate(g: TheoryGrammar) -> None:
    if g.start not in g.rules:
        raise GrammarError(f"start nonterminal {g.start} has no rule")
    for nt, prods in g.rules.items():
        if not prods:
            raise GrammarError(f"nonterminal {nt} has no productions")
        for p in prods:
            for c in p.children:
                if c not in g.rules:
                    raise GrammarError(f"nonterminal {c} used in {nt} has no rule")
    reachable = {g.start}
    todo = [g.start]
    while todo:
        nt = todo.pop()
        for p in g.rules[nt]:
            for c in p.children:
                if c not in reachable:
                    reachable.add(c)
                    todo.append(c)
    unreachable = sorted(set(g.rules) - reachable)
    if unreachable:
        raise GrammarError(f"unreachable nonterminals: {', '.join(unreachable)}")


def load_grammar(path_or_text: str | Path) -> TheoryGrammar:
    """Load a grammar from a ``.smtg`` path or directly from grammar text."""
    if isinstance(path_or_text, Path) or "(" not in path_or_text:
        p = Path(path_or_text)
        try:
            text = p.read_text(encoding="utf-8")
        except OSError as e:
            raise GrammarError(f"cannot read grammar {p}: {e.strerror or e}") from None
        return parse_grammar(text, str(p))
    return parse_grammar(str(path_or_text))
