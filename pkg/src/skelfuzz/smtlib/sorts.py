"""Well-sortedness checking for the supported theories.

Covered: Core, Ints, Reals, Reals_Ints, Strings (incl. regular expressions),
FixedSizeBitVectors, Arrays, plus declared functions and datatypes. Terms
headed by anything else get the :data:`OPAQUE` sort, which is compatible
with every sort.

Int and Real mix freely in arithmetic and equality (the result is Real), as
Z3 and cvc5 accept; seed formulas from bug trackers rely on it.
"""

from __future__ import annotations

import re
from typing import Callable, Iterable, Mapping

from .ast import (
    BOOL,
    INT,
    OPAQUE,
    REAL,
    REGLAN,
    STRING,
    Annot,
    App,
    Assert,
    Const,
    DeclContext,
    DefineFun,
    Hole,
    Let,
    Opaque,
    Qual,
    Quant,
    Script,
    Sort,
    SortError,
    Sym,
    Term,
    bitvec,
)

__all__ = ["sort_of", "check_script", "theories_of", "is_builtin", "SortError", "CONNECTIVES"]

CONNECTIVES = frozenset({"and", "or", "not", "=>", "xor"})

Checker = Callable[[list, tuple], Sort]


def _err(msg: str):
    raise SortError(msg)


def _is(s: Sort, *names: str) -> bool:
    return s is OPAQUE or s == OPAQUE or s.name in names


def compatible(a: Sort, b: Sort) -> bool:
    if a == b or a == OPAQUE or b == OPAQUE:
        return True
    return {a.name, b.name} == {"Int", "Real"} and not a.params and not b.params


def _expect(args, n_min: int, n_max: int | None = None):
    if len(args) < n_min or (n_max is not None and len(args) > n_max):
        want = str(n_min) if n_max == n_min else f"{n_min}..{n_max if n_max is not None else 'n'}"
        _err(f"expected {want} arguments, got {len(args)}")


def _all(sort: Sort, args, n_min=1, n_max=None):
    _expect(args, n_min, n_max)
    for i, a in enumerate(args):
        if not compatible(a, sort):
            _err(f"argument {i + 1} has sort {a}, expected {sort}")


def _fixed(arg_sorts: tuple[Sort, ...], result: Sort) -> Checker:
    def check(args, idx):
        _expect(args, len(arg_sorts), len(arg_sorts))
        for i, (a, want) in enumerate(zip(args, arg_sorts)):
            if not compatible(a, want):
                _err(f"argument {i + 1} has sort {a}, expected {want}")
        return result

    return check


def _nary(sort: Sort, result: Sort, n_min: int = 1) -> Checker:
    def check(args, idx):
        _all(sort, args, n_min)
        return result

    return check


# ---------------------------------------------------------------- Core


def _eq(args, idx):
    _expect(args, 2)
    first = next((a for a in args if a != OPAQUE), OPAQUE)
    for i, a in enumerate(args):
        if not compatible(a, first):
            _err(f"argument {i + 1} has sort {a}, expected {first}")
    return BOOL


def _ite(args, idx):
    _expect(args, 3, 3)
    if not compatible(args[0], BOOL):
        _err(f"ite condition has sort {args[0]}")
    if not compatible(args[1], args[2]):
        _err(f"ite branches have sorts {args[1]} and {args[2]}")
    return _join(args[1], args[2])


def _join(a: Sort, b: Sort) -> Sort:
    if a == OPAQUE:
        return b
    if b == OPAQUE or a == b:
        return a
    return REAL  # Int/Real mix


# ---------------------------------------------------------------- arithmetic


def _arith_operands(args, n_min=1):
    _expect(args, n_min)
    for i, a in enumerate(args):
        if not _is(a, "Int", "Real") or a.params or a.indices:
            _err(f"argument {i + 1} has sort {a}, expected Int or Real")
    return REAL if any(a == REAL for a in args) else INT


def _arith(n_min=1):
    def check(args, idx):
        return _arith_operands(args, n_min)

    return check


def _compare(args, idx):
    _arith_operands(args, 2)
    return BOOL


def _real_div(args, idx):
    _arith_operands(args, 2)
    return REAL


def _int_only(n_min, n_max, result):
    def check(args, idx):
        _expect(args, n_min, n_max)
        for i, a in enumerate(args):
            if not _is(a, "Int"):
                _err(f"argument {i + 1} has sort {a}, expected Int")
        return result

    return check


def _divisible(args, idx):
    if len(idx) != 1 or not idx[0].isdigit() or int(idx[0]) < 1:
        _err("divisible needs one positive numeral index")
    return _int_only(1, 1, BOOL)(args, idx)


def _to_real(args, idx):
    _arith_operands(args, 1)
    _expect(args, 1, 1)
    return REAL


def _to_int(args, idx):
    _arith_operands(args, 1)
    _expect(args, 1, 1)
    return INT


def _is_int(args, idx):
    _arith_operands(args, 1)
    _expect(args, 1, 1)
    return BOOL


def _abs(args, idx):
    _expect(args, 1, 1)
    return _arith_operands(args, 1)


# ---------------------------------------------------------------- bit-vectors


def _width(s: Sort) -> int | None:
    if s == OPAQUE:
        return None
    if s.name != "BitVec" or len(s.indices) != 1 or not isinstance(s.indices[0], int):
        _err(f"expected a bit-vector, got {s}")
    return s.indices[0]


def _same_width(args) -> int | None:
    widths = {w for w in (_width(a) for a in args) if w is not None}
    if len(widths) > 1:
        _err(f"bit-vector operands of different widths {sorted(widths)}")
    return widths.pop() if widths else None


def _bv_op(n_min: int, n_max: int | None, pred: bool = False) -> Checker:
    def check(args, idx):
        _expect(args, n_min, n_max)
        w = _same_width(args)
        if pred:
            return BOOL
        return bitvec(w) if w is not None else OPAQUE

    return check


def _bv_comp(args, idx):
    _expect(args, 2, 2)
    _same_width(args)
    return bitvec(1)


def _int_indices(idx, n) -> list[int]:
    if len(idx) != n or not all(i.isdigit() for i in idx):
        _err(f"expected {n} numeral indices")
    return [int(i) for i in idx]


def _concat(args, idx):
    _expect(args, 2)
    ws = [_width(a) for a in args]
    return OPAQUE if None in ws else bitvec(sum(ws))


def _extract(args, idx):
    hi, lo = _int_indices(idx, 2)
    _expect(args, 1, 1)
    w = _width(args[0])
    if hi < lo or (w is not None and hi >= w):
        _err(f"extract [{hi}:{lo}] out of range for width {w}")
    return bitvec(hi - lo + 1)


def _extend(args, idx):
    (k,) = _int_indices(idx, 1)
    _expect(args, 1, 1)
    w = _width(args[0])
    return OPAQUE if w is None else bitvec(w + k)


def _repeat(args, idx):
    (k,) = _int_indices(idx, 1)
    _expect(args, 1, 1)
    if k < 1:
        _err("repeat count must be positive")
    w = _width(args[0])
    return OPAQUE if w is None else bitvec(w * k)


def _rotate(args, idx):
    _int_indices(idx, 1)
    _expect(args, 1, 1)
    w = _width(args[0])
    return OPAQUE if w is None else bitvec(w)


def _bv2nat(args, idx):
    _expect(args, 1, 1)
    _width(args[0])
    return INT


def _nat2bv(args, idx):
    (w,) = _int_indices(idx, 1)
    _int_only(1, 1, INT)(args, idx)
    if w < 1:
        _err("bit-vector width must be positive")
    return bitvec(w)


# ---------------------------------------------------------------- arrays


def _array_parts(s: Sort) -> tuple[Sort, Sort]:
    if s == OPAQUE:
        return OPAQUE, OPAQUE
    if s.name != "Array" or len(s.params) != 2:
        _err(f"expected an array, got {s}")
    return s.params


def _select(args, idx):
    _expect(args, 2, 2)
    i, e = _array_parts(args[0])
    if not compatible(args[1], i):
        _err(f"select index has sort {args[1]}, expected {i}")
    return e


def _store(args, idx):
    _expect(args, 3, 3)
    i, e = _array_parts(args[0])
    if not compatible(args[1], i):
        _err(f"store index has sort {args[1]}, expected {i}")
    if not compatible(args[2], e):
        _err(f"store value has sort {args[2]}, expected {e}")
    return args[0]


# ---------------------------------------------------------------- strings


def _re_loop(args, idx):
    if len(idx) not in (1, 2) or not all(i.isdigit() for i in idx):
        _err("re.loop needs one or two numeral indices")
    return _fixed((REGLAN,), REGLAN)(args, idx)


def _re_power(args, idx):
    _int_indices(idx, 1)
    return _fixed((REGLAN,), REGLAN)(args, idx)


S, I, B, R = STRING, INT, BOOL, REGLAN

# name -> (theory, checker)
SIGNATURES: dict[str, tuple[str, Checker]] = {
    "not": ("Core", _fixed((B,), B)),
    "and": ("Core", _nary(B, B)),
    "or": ("Core", _nary(B, B)),
    "xor": ("Core", _nary(B, B)),
    "=>": ("Core", _nary(B, B)),
    "=": ("Core", _eq),
    "distinct": ("Core", _eq),
    "ite": ("Core", _ite),
    "+": ("Ints", _arith(1)),
    "-": ("Ints", _arith(1)),
    "*": ("Ints", _arith(1)),
    "<": ("Ints", _compare),
    "<=": ("Ints", _compare),
    ">": ("Ints", _compare),
    ">=": ("Ints", _compare),
    "div": ("Ints", _int_only(2, None, I)),
    "mod": ("Ints", _int_only(2, 2, I)),
    "abs": ("Ints", _abs),
    "divisible": ("Ints", _divisible),
    "/": ("Reals", _real_div),
    "to_real": ("Reals_Ints", _to_real),
    "to_int": ("Reals_Ints", _to_int),
    "is_int": ("Reals_Ints", _is_int),
    "str.++": ("Strings", _nary(S, S, 2)),
    "str.len": ("Strings", _fixed((S,), I)),
    "str.<": ("Strings", _nary(S, B, 2)),
    "str.<=": ("Strings", _nary(S, B, 2)),
    "str.at": ("Strings", _fixed((S, I), S)),
    "str.substr": ("Strings", _fixed((S, I, I), S)),
    "str.prefixof": ("Strings", _fixed((S, S), B)),
    "str.suffixof": ("Strings", _fixed((S, S), B)),
    "str.contains": ("Strings", _fixed((S, S), B)),
    "str.indexof": ("Strings", _fixed((S, S, I), I)),
    "str.replace": ("Strings", _fixed((S, S, S), S)),
    "str.replace_all": ("Strings", _fixed((S, S, S), S)),
    "str.replace_re": ("Strings", _fixed((S, R, S), S)),
    "str.replace_re_all": ("Strings", _fixed((S, R, S), S)),
    "str.is_digit": ("Strings", _fixed((S,), B)),
    "str.to_code": ("Strings", _fixed((S,), I)),
    "str.from_code": ("Strings", _fixed((I,), S)),
    "str.to_int": ("Strings", _fixed((S,), I)),
    "str.to.int": ("Strings", _fixed((S,), I)),
    "str.from_int": ("Strings", _fixed((I,), S)),
    "int.to.str": ("Strings", _fixed((I,), S)),
    "str.to_re": ("Strings", _fixed((S,), R)),
    "str.to.re": ("Strings", _fixed((S,), R)),
    "str.in_re": ("Strings", _fixed((S, R), B)),
    "str.in.re": ("Strings", _fixed((S, R), B)),
    "re.*": ("Strings", _fixed((R,), R)),
    "re.+": ("Strings", _fixed((R,), R)),
    "re.opt": ("Strings", _fixed((R,), R)),
    "re.comp": ("Strings", _fixed((R,), R)),
    "re.union": ("Strings", _nary(R, R, 2)),
    "re.inter": ("Strings", _nary(R, R, 2)),
    "re.++": ("Strings", _nary(R, R, 2)),
    "re.diff": ("Strings", _fixed((R, R), R)),
    "re.range": ("Strings", _fixed((S, S), R)),
    "re.loop": ("Strings", _re_loop),
    "re.^": ("Strings", _re_power),
    "concat": ("BV", _concat),
    "extract": ("BV", _extract),
    "zero_extend": ("BV", _extend),
    "sign_extend": ("BV", _extend),
    "repeat": ("BV", _repeat),
    "rotate_left": ("BV", _rotate),
    "rotate_right": ("BV", _rotate),
    "bvcomp": ("BV", _bv_comp),
    "bv2nat": ("BV", _bv2nat),
    "nat2bv": ("BV", _nat2bv),
    "int2bv": ("BV", _nat2bv),
    "select": ("Arrays", _select),
    "store": ("Arrays", _store),
}
for _op in ("bvnot", "bvneg"):
    SIGNATURES[_op] = ("BV", _bv_op(1, 1))
for _op in ("bvand", "bvor", "bvxor", "bvadd", "bvmul"):
    SIGNATURES[_op] = ("BV", _bv_op(2, None))
for _op in ("bvnand", "bvnor", "bvxnor", "bvsub", "bvudiv", "bvurem", "bvsdiv", "bvsrem", "bvsmod", "bvshl", "bvlshr", "bvashr"):
    SIGNATURES[_op] = ("BV", _bv_op(2, 2))
for _op in ("bvult", "bvule", "bvugt", "bvuge", "bvslt", "bvsle", "bvsgt", "bvsge"):
    SIGNATURES[_op] = ("BV", _bv_op(2, 2, pred=True))

CONSTANTS: dict[str, tuple[str, Sort]] = {
    "true": ("Core", BOOL),
    "false": ("Core", BOOL),
    "re.none": ("Strings", REGLAN),
    "re.all": ("Strings", REGLAN),
    "re.allchar": ("Strings", REGLAN),
    "re.nostr": ("Strings", REGLAN),
}

_BV_LITERAL = re.compile(r"bv[0-9]+$")


def is_builtin(name: str) -> bool:
    return name in SIGNATURES or name in CONSTANTS


def _literal_sort(c: Const) -> Sort:
    if c.kind == "num":
        return INT
    if c.kind == "dec":
        return REAL
    if c.kind == "str":
        return STRING
    if c.kind == "bin":
        return bitvec(len(c.text) - 2)
    if c.kind == "hex":
        return bitvec(4 * (len(c.text) - 2))
    raise SortError(f"unknown literal kind {c.kind}")


def _apply_declared(name: str, rank, args: list[Sort]) -> Sort:
    if len(args) != len(rank.args):
        _err(f"{name} expects {len(rank.args)} arguments, got {len(args)}")
    for i, (a, want) in enumerate(zip(args, rank.args)):
        if not compatible(a, want):
            _err(f"argument {i + 1} of {name} has sort {a}, expected {want}")
    return rank.result


def _app_sort(t: App, args: list[Sort], ctx: DeclContext) -> Sort:
    name = t.name
    if t.sort is not None:
        # ((as const (Array I E)) v) and friends
        if name == "const" and t.sort.name == "Array" and len(t.sort.params) == 2:
            _expect(args, 1, 1)
            if not compatible(args[0], t.sort.params[1]):
                _err(f"constant array value has sort {args[0]}, expected {t.sort.params[1]}")
        return t.sort
    if not t.indices:
        rank = ctx.lookup(name)
        if rank is not None:
            return _apply_declared(name, rank, args)
        rank = ctx.selectors.get(name)
        if rank is not None:
            return _apply_declared(name, rank, args)
        if name.startswith("is-") and name[3:] in ctx.constructors:
            _expect(args, 1, 1)
            return BOOL
    elif name == "is" and len(t.indices) == 1 and t.indices[0] in ctx.constructors:
        _expect(args, 1, 1)
        return BOOL
    sig = SIGNATURES.get(name)
    if sig is None:
        return OPAQUE
    return sig[1](args, t.indices)


def _qual_sort(t: Qual, ctx: DeclContext, env: Mapping[str, Sort]) -> Sort:
    if t.sort is not None:
        return t.sort
    if _BV_LITERAL.match(t.name) and len(t.indices) == 1 and t.indices[0].isdigit():
        return bitvec(int(t.indices[0]))
    if t.name == "char":
        return STRING
    return OPAQUE


def sort_of(t: Term, ctx: DeclContext, binders: Mapping[str, Sort] | Iterable[tuple[str, Sort]] | None = None) -> Sort:
    """Sort of ``t`` under declarations ``ctx`` and bound variables
    ``binders`` (innermost last when given as pairs)."""
    env = dict(binders) if binders is not None else {}
    return _sort(t, ctx, env)


def _sort(t: Term, ctx: DeclContext, env: dict) -> Sort:
    if isinstance(t, Sym):
        name = t.name
        if name in env:
            return env[name]
        rank = ctx.lookup(name)
        if rank is not None:
            if rank.args:
                raise SortError(f"function {name} used without arguments", t)
            return rank.result
        if name in CONSTANTS:
            return CONSTANTS[name][1]
        if name in ctx.opaque:
            return OPAQUE
        raise SortError(f"unresolved symbol {name}", t)
    if isinstance(t, Const):
        return _literal_sort(t)
    if isinstance(t, App):
        args = [_sort(a, ctx, env) for a in t.args]
        try:
            return _app_sort(t, args, ctx)
        except SortError as e:
            if e.term is None:
                from .printer import print_term

                raise SortError(f"ill-sorted term {print_term(t, holes=True)}: {e}", t) from None
            raise
    if isinstance(t, Quant):
        inner = dict(env)
        inner.update(t.vars)
        body = _sort(t.body, ctx, inner)
        if not compatible(body, BOOL):
            raise SortError(f"quantifier body has sort {body}", t)
        return BOOL
    if isinstance(t, Let):
        inner = dict(env)
        for name, value in t.bindings:
            inner[name] = _sort(value, ctx, env)
        return _sort(t.body, ctx, inner)
    if isinstance(t, Annot):
        return _sort(t.body, ctx, env)
    if isinstance(t, Qual):
        return _qual_sort(t, ctx, env)
    if isinstance(t, Hole):
        return BOOL
    if isinstance(t, Opaque):
        return OPAQUE
    raise SortError(f"not a term: {t!r}")


def check_script(script: Script) -> None:
    """Raise :class:`SortError` unless every assertion is Boolean and every
    definition body matches its declared result sort."""
    ctx = script.decls
    for cmd in script.commands:
        if isinstance(cmd, Assert):
            s = _sort(cmd.term, ctx, {})
            if not compatible(s, BOOL):
                raise SortError(f"assertion has sort {s}, expected Bool", cmd.term)
        elif isinstance(cmd, DefineFun):
            s = _sort(cmd.body, ctx, dict(cmd.params))
            if not compatible(s, cmd.result):
                raise SortError(f"body of {cmd.name} has sort {s}, expected {cmd.result}", cmd.body)


# ---------------------------------------------------------------- theories

_SORT_THEORY = {
    "Bool": "Core",
    "Int": "Ints",
    "Real": "Reals",
    "String": "Strings",
    "RegLan": "Strings",
    "BitVec": "BV",
    "Array": "Arrays",
}


def _sort_theories(s: Sort, out: set[str]):
    tag = _SORT_THEORY.get(s.name)
    out.add(tag if tag else "Ext")
    for p in s.params:
        _sort_theories(p, out)


def theories_of(t: Term, ctx: DeclContext) -> set[str]:
    """Theory tags touched by ``t``: Core, Ints, Reals, Reals_Ints, Strings,
    BV, Arrays, Datatypes, UF, Quantifiers, or Ext for anything unmodelled."""
    from .ast import walk

    out: set[str] = set()
    for node in walk(t):
        if isinstance(node, App):
            if node.plain and (node.name in ctx.constructors or node.name in ctx.selectors):
                out.add("Datatypes")
            elif node.plain and ctx.lookup(node.name) is not None:
                out.add("UF")
            elif node.name in SIGNATURES:
                out.add(SIGNATURES[node.name][0])
            elif node.name == "const" and node.sort is not None:
                out.add("Arrays")
            else:
                out.add("Ext")
        elif isinstance(node, Sym):
            rank = ctx.lookup(node.name)
            if rank is not None:
                _sort_theories(rank.result, out)
            elif node.name in CONSTANTS:
                out.add(CONSTANTS[node.name][0])
        elif isinstance(node, Const):
            out.add({"num": "Ints", "dec": "Reals", "str": "Strings"}.get(node.kind, "BV"))
        elif isinstance(node, Quant):
            out.add("Quantifiers")
            for _, s in node.vars:
                _sort_theories(s, out)
        elif isinstance(node, (Qual, Opaque)):
            if isinstance(node, Qual) and _BV_LITERAL.match(node.name):
                out.add("BV")
            else:
                out.add("Ext")
    return out
