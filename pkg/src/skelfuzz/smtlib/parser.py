"""Build :mod:`skelfuzz.smtlib.ast` scripts from SMT-LIB text."""

from __future__ import annotations

from .ast import (
    Annot,
    App,
    Assert,
    CheckSat,
    Command,
    Const,
    Constructor,
    Datatype,
    DeclareConst,
    DeclareDatatypes,
    DeclareFun,
    DeclareSort,
    DefineFun,
    GetModel,
    Let,
    Opaque,
    Passthrough,
    Qual,
    Quant,
    Script,
    SetLogic,
    SetOption,
    Sort,
    Sym,
    Term,
)
from .sexpr import Atom, ParseError, SList, read_sexprs, to_text

__all__ = ["parse_script", "parse_term", "parse_sort", "parse_command", "ParseError"]

_DROPPED = {"set-info"}
_OPAQUE_TERMS = {"match", "lambda"}


def _fail(node, message: str):
    if isinstance(node, Atom):
        raise ParseError(message, node.line, node.column, node.text)
    raise ParseError(message, node.line, node.column, to_text(node)[:40])


def _symbol(node) -> str:
    if not isinstance(node, Atom) or node.kind != "sym":
        _fail(node, "expected a symbol")
    return node.text


def _numeral(node) -> int:
    if not isinstance(node, Atom) or node.kind != "num":
        _fail(node, "expected a numeral")
    return int(node.text)


def _index(node) -> str:
    if not isinstance(node, Atom) or node.kind not in ("num", "sym", "hex", "bin"):
        _fail(node, "expected an index")
    return node.text


def sort_from(node) -> Sort:
    if isinstance(node, Atom):
        return Sort(_symbol(node))
    items = node.items
    if not items:
        _fail(node, "empty sort")
    head = items[0]
    if isinstance(head, Atom) and head.text == "_":
        if len(items) < 3:
            _fail(node, "indexed sort needs a name and at least one index")
        indices = tuple(int(i.text) if i.kind == "num" else i.text for i in items[2:] if isinstance(i, Atom))
        if len(indices) != len(items) - 2:
            _fail(node, "malformed sort index")
        return Sort(_symbol(items[1]), indices=indices)
    if len(items) < 2:
        _fail(node, "parametric sort needs parameters")
    return Sort(_symbol(head), params=tuple(sort_from(p) for p in items[1:]))


def _identifier(node) -> tuple[str, tuple[str, ...]]:
    """Parse ``sym`` or ``(_ sym idx+)``."""
    if isinstance(node, Atom):
        return _symbol(node), ()
    items = node.items
    if len(items) >= 3 and isinstance(items[0], Atom) and items[0].text == "_":
        return _symbol(items[1]), tuple(_index(i) for i in items[2:])
    _fail(node, "expected an identifier")


def _qual_identifier(node) -> tuple[str, tuple[str, ...], Sort | None]:
    if isinstance(node, SList) and node.items and isinstance(node.items[0], Atom) and node.items[0].text == "as":
        if len(node.items) != 3:
            _fail(node, "malformed (as ...) qualifier")
        name, idx = _identifier(node.items[1])
        return name, idx, sort_from(node.items[2])
    name, idx = _identifier(node)
    return name, idx, None


def _sorted_vars(node) -> tuple[tuple[str, Sort], ...]:
    if not isinstance(node, SList):
        _fail(node, "expected a sorted variable list")
    out = []
    for item in node.items:
        if not isinstance(item, SList) or len(item.items) != 2:
            _fail(item, "expected (symbol sort)")
        out.append((_symbol(item.items[0]), sort_from(item.items[1])))
    return tuple(out)


def term_from(node) -> Term:
    if isinstance(node, Atom):
        if node.kind == "sym":
            return Sym(node.text)
        if node.kind == "kw":
            _fail(node, "keyword in term position")
        return Const(node.kind, node.text)
    items = node.items
    if not items:
        _fail(node, "empty application")
    head = items[0]
    if isinstance(head, Atom):
        h = head.text
        if head.kind != "sym":
            _fail(head, "literal in head position")
        if h == "_":
            name, idx = _identifier(node)
            return Qual(name, idx, None)
        if h == "as":
            name, idx, sort = _qual_identifier(node)
            return Qual(name, idx, sort)
        if h == "let":
            if len(items) != 3 or not isinstance(items[1], SList):
                _fail(node, "malformed let")
            binds = []
            for b in items[1].items:
                if not isinstance(b, SList) or len(b.items) != 2:
                    _fail(b, "expected (symbol term) binding")
                binds.append((_symbol(b.items[0]), term_from(b.items[1])))
            return Let(tuple(binds), term_from(items[2]))
        if h in ("forall", "exists"):
            if len(items) != 3:
                _fail(node, f"malformed {h}")
            return Quant(h, _sorted_vars(items[1]), term_from(items[2]))
        if h == "!":
            if len(items) < 2:
                _fail(node, "annotation without a term")
            return Annot(term_from(items[1]), _attributes(items[2:]))
        if h in _OPAQUE_TERMS:
            return Opaque(to_text(node))
        return App(h, tuple(term_from(a) for a in items[1:]))
    try:
        name, idx, sort = _qual_identifier(head)
    except ParseError:
        # higher-order application and other forms we do not model
        return Opaque(to_text(node))
    return App(name, tuple(term_from(a) for a in items[1:]), idx, sort)


def _attributes(items) -> tuple[tuple[str, str | None], ...]:
    attrs = []
    i = 0
    while i < len(items):
        kw = items[i]
        if not isinstance(kw, Atom) or kw.kind != "kw":
            _fail(kw, "expected an attribute keyword")
        value = None
        if i + 1 < len(items) and not (isinstance(items[i + 1], Atom) and items[i + 1].kind == "kw"):
            value = to_text(items[i + 1])
            i += 1
        attrs.append((kw.text, value))
        i += 1
    return tuple(attrs)


def _datatypes(node) -> tuple[Datatype, ...]:
    """Both the 2.6 form ``((D 0)) (((c (s S))))`` and the legacy Z3 form
    ``() ((D (c (s S))))`` are understood; anything else yields ``()``."""
    items = node.items
    try:
        if len(items) == 3 and isinstance(items[1], SList) and isinstance(items[2], SList):
            heads, bodies = items[1].items, items[2].items
            if heads and all(isinstance(h, SList) and len(h.items) == 2 for h in heads):
                out = []
                for h, body in zip(heads, bodies):
                    name, arity = _symbol(h.items[0]), _numeral(h.items[1])
                    if arity or _is_par(body):
                        out.append(Datatype(name, arity))
                    else:
                        out.append(Datatype(name, 0, tuple(_constructor(c) for c in body.items)))
                return tuple(out)
            if not heads:
                return tuple(
                    Datatype(_symbol(d.items[0]), 0, tuple(_constructor(c) for c in d.items[1:])) for d in bodies
                )
        if len(items) == 3 and isinstance(items[1], Atom):
            # (declare-datatype D (ctors))
            body = items[2]
            if _is_par(body):
                return (Datatype(_symbol(items[1]), 1),)
            return (Datatype(_symbol(items[1]), 0, tuple(_constructor(c) for c in body.items)),)
    except (ParseError, AttributeError):
        pass
    return ()


def _is_par(node) -> bool:
    return isinstance(node, SList) and bool(node.items) and isinstance(node.items[0], Atom) and node.items[0].text == "par"


def _constructor(node) -> Constructor:
    if isinstance(node, Atom):
        return Constructor(_symbol(node))
    fields = []
    for f in node.items[1:]:
        fields.append((_symbol(f.items[0]), sort_from(f.items[1])))
    return Constructor(_symbol(node.items[0]), tuple(fields))


def command_from(node) -> Command | None:
    """Convert one top-level form; returns ``None`` for dropped commands."""
    if not isinstance(node, SList) or not node.items or not isinstance(node.items[0], Atom):
        _fail(node, "expected a command")
    items = node.items
    head = items[0].text
    n = len(items)
    if head in _DROPPED:
        return None
    if head == "set-logic":
        if n != 2:
            _fail(node, "set-logic takes one symbol")
        return SetLogic(_symbol(items[1]))
    if head == "set-option":
        if n < 2 or not isinstance(items[1], Atom) or items[1].kind != "kw":
            _fail(node, "set-option needs a keyword")
        return SetOption(items[1].text, " ".join(to_text(v) for v in items[2:]) or None)
    if head == "declare-sort":
        if n not in (2, 3):
            _fail(node, "malformed declare-sort")
        return DeclareSort(_symbol(items[1]), _numeral(items[2]) if n == 3 else 0)
    if head == "declare-fun":
        if n != 4 or not isinstance(items[2], SList):
            _fail(node, "malformed declare-fun")
        return DeclareFun(_symbol(items[1]), tuple(sort_from(s) for s in items[2].items), sort_from(items[3]))
    if head == "declare-const":
        if n != 3:
            _fail(node, "malformed declare-const")
        return DeclareConst(_symbol(items[1]), sort_from(items[2]))
    if head in ("declare-datatypes", "declare-datatype"):
        return DeclareDatatypes(to_text(node), _datatypes(node))
    if head == "define-fun":
        if n != 5:
            _fail(node, "malformed define-fun")
        return DefineFun(_symbol(items[1]), _sorted_vars(items[2]), sort_from(items[3]), term_from(items[4]))
    if head == "assert":
        if n != 2:
            _fail(node, "assert takes exactly one term")
        return Assert(term_from(items[1]))
    if head == "check-sat" and n == 1:
        return CheckSat()
    if head == "get-model" and n == 1:
        return GetModel()
    return Passthrough(to_text(node))


def parse_script(text: str) -> Script:
    """Parse SMT-LIB text. Comments and ``set-info`` are discarded; commands
    outside the modelled subset are kept as passthrough."""
    commands = []
    for node in read_sexprs(text):
        cmd = command_from(node)
        if cmd is not None:
            commands.append(cmd)
    return Script(tuple(commands))


def _single(text: str):
    nodes = read_sexprs(text)
    if len(nodes) != 1:
        raise ParseError(f"expected exactly one expression, got {len(nodes)}", 1, 1, text[:40])
    return nodes[0]


def parse_term(text: str) -> Term:
    return term_from(_single(text))


def parse_sort(text: str) -> Sort:
    return sort_from(_single(text))


def parse_command(text: str) -> Command | None:
    return command_from(_single(text))
