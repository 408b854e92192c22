"""Weighted top-down term generation and variable adaptation."""

from __future__ import annotations

import random
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

from ..smtlib import (
    App,
    Assert,
    CheckSat,
    Command,
    Const,
    DeclareConst,
    DeclareFun,
    Qual,
    Script,
    SetLogic,
    Sort,
    Sym,
    Term,
    fresh_name,
    parse_command,
    print_script,
    rename_free,
)
from ..smtlib.ast import array
from .grammar import GrammarError, Production, TheoryGrammar, load_grammar


class DepthExhaustion(RuntimeError):
    """A nonterminal must be expanded past the depth bound but has no
    terminal production."""

    def __init__(self, nonterminal: str, depth: int):
        super().__init__(f"nonterminal {nonterminal} has no terminal production (depth {depth})")
        self.nonterminal = nonterminal


@dataclass(frozen=True)
class GeneratedTerm:
    term: Term
    decls: tuple[Command, ...] = ()
    free_vars: tuple[tuple[str, Sort], ...] = ()


@dataclass(frozen=True)
class GeneratorSet:
    grammars: tuple[TheoryGrammar, ...]

    def __post_init__(self):
        names = [g.theory_name for g in self.grammars]
        dup = {n for n in names if names.count(n) > 1}
        if dup:
            raise GrammarError(f"duplicate theory names: {', '.join(sorted(dup))}")

    def __getitem__(self, theory: str) -> TheoryGrammar:
        for g in self.grammars:
            if g.theory_name == theory:
                return g
        raise KeyError(theory)

    def __contains__(self, theory: str) -> bool:
        return any(g.theory_name == theory for g in self.grammars)

    def __len__(self):
        return len(self.grammars)

    def names(self) -> list[str]:
        return [g.theory_name for g in self.grammars]


# ---------------------------------------------------------------- literals

INT_POOL = (-3, -2, -1, 0, 1, 2, 3, 2**31, 2**63)
REAL_POOL = ("0.0", "0.5", "1.0", "1.5", "2.0", "3.0", "2147483648.0")
STRING_POOL = ('""', '"a"', '"b"', '"z"', '"0"', '"A"')

_PREFIX = {"Int": "int", "Real": "real", "String": "str", "BitVec": "bv", "Bool": "bool", "Array": "arr"}


def var_prefix(sort: Sort) -> str:
    return _PREFIX.get(sort.name, sort.name.lower())


def literal(sort: Sort, rng: random.Random) -> Term:
    name = sort.name
    if name == "Bool":
        return Sym("true" if rng.random() < 0.5 else "false")
    if name == "Int":
        v = INT_POOL[rng.randrange(len(INT_POOL))]
        return App("-", (Const("num", str(-v)),)) if v < 0 else Const("num", str(v))
    if name == "Real":
        text = REAL_POOL[rng.randrange(len(REAL_POOL))]
        if text != "0.0" and rng.random() < 0.3:
            return App("-", (Const("dec", text),))
        return Const("dec", text)
    if name == "String":
        return Const("str", STRING_POOL[rng.randrange(len(STRING_POOL))])
    if name == "BitVec":
        width = sort.indices[0]
        pick = rng.randrange(3)
        if pick == 0:
            bits = "0" * width
        elif pick == 1:
            bits = "1" * width
        else:
            bits = format(rng.getrandbits(width), f"0{width}b")
        return Const("bin", "#b" + bits)
    if name == "RegLan":
        pick = rng.randrange(4)
        if pick == 3:
            return App("str.to_re", (literal(Sort("String"), rng),))
        return Sym(("re.allchar", "re.none", "re.all")[pick])
    if name == "Array":
        idx, elem = sort.params
        return App("const", (literal(elem, rng),), sort=array(idx, elem))
    raise GrammarError(f"no literal generator for sort {sort}")


# ---------------------------------------------------------------- derivation

_TABLES: dict[int, tuple[TheoryGrammar, dict, dict]] = {}


def _tables(g: TheoryGrammar):
    entry = _TABLES.get(id(g))
    if entry is None or entry[0] is not g:

        def cumulative(prods):
            acc, cum = 0.0, []
            for p in prods:
                acc += p.weight
                cum.append(acc)
            return prods, cum

        full = {nt: cumulative(list(ps)) for nt, ps in g.rules.items()}
        term = {nt: cumulative([p for p in ps if p.terminal]) for nt, ps in g.rules.items()}
        entry = (g, full, term)
        _TABLES[id(g)] = entry
    return entry[1], entry[2]


_DECLS: dict[tuple[str, Sort], Command] = {}
_NAME_SLOT = "__skelfuzz_name__"


def _decl_for(template: str, sort: Sort, name: str) -> Command:
    key = (template, sort)
    decl = _DECLS.get(key)
    if decl is None:
        decl = parse_command(template.replace("{name}", _NAME_SLOT).replace("{sort}", str(sort)))
        if not isinstance(decl, (DeclareFun, DeclareConst)) or decl.name != _NAME_SLOT:
            raise GrammarError(f"declaration template {template!r} does not declare a symbol")
        _DECLS[key] = decl
    return _rename_decl(decl, name)


class _Derivation:
    def __init__(self, g: TheoryGrammar, rng: random.Random):
        self.g = g
        self.rng = rng
        self.full, self.term = _tables(g)
        self.counters: dict[str, int] = {}
        self.decls: list[Command] = []
        self.vars: list[tuple[str, Sort]] = []

    def fresh_var(self, sort: Sort) -> Sym:
        prefix = var_prefix(sort)
        n = self.counters.get(prefix, 0)
        self.counters[prefix] = n + 1
        name = f"{prefix}{n}"
        self.decls.append(_decl_for(self.g.decl_template(sort), sort, name))
        self.vars.append((name, sort))
        return Sym(name)

    def expand(self, nt: str, depth: int) -> Term:
        prods, cum = (self.full if depth < self.g.max_depth else self.term)[nt]
        if not prods:
            raise DepthExhaustion(nt, depth)
        p: Production = self.rng.choices(prods, cum_weights=cum)[0]
        if p.kind == "var":
            return self.fresh_var(p.sort)
        if p.kind == "lit":
            return literal(p.sort, self.rng)
        name, indices, sort = p.head
        if not p.children:
            if indices or sort is not None:
                return Qual(name, indices, sort)
            return Sym(name)
        args = tuple(self.expand(c, depth + 1) for c in p.children)
        return App(name, args, indices, sort)


def generate(g: TheoryGrammar, rng: random.Random) -> GeneratedTerm:
    """Derive one term from ``g.start``. Past ``g.max_depth`` only terminal
    productions are eligible; every variable slot gets a fresh symbol
    ``<prefix><n>`` and a matching declaration."""
    d = _Derivation(g, rng)
    term = d.expand(g.start, 0)
    return GeneratedTerm(term, tuple(d.decls), tuple(d.vars))


def _decl_name(cmd) -> str | None:
    return cmd.name if isinstance(cmd, (DeclareFun, DeclareConst)) else None


def _rename_decl(cmd, new: str):
    if isinstance(cmd, DeclareFun):
        return DeclareFun(new, cmd.args, cmd.result)
    return DeclareConst(new, cmd.sort)


def adapt_variables(
    t: GeneratedTerm, scope: Sequence[tuple[str, Sort]], rng: random.Random, p_adapt: float = 0.75
) -> GeneratedTerm:
    """Replace generated variables by sort-equal variables from ``scope``.

    Each free variable with at least one sort-equal candidate is replaced
    with probability ``p_adapt`` by a uniformly chosen candidate; the
    declarations of replaced variables are dropped.
    """
    if not scope or not t.free_vars:
        return t
    scope_names = {n for n, _ in scope}
    clash = [n for n, _ in t.free_vars if n in scope_names]
    if clash:
        # keep generated symbols distinguishable from the scope ones
        taken = scope_names | {n for n, _ in t.free_vars}
        ren = {}
        for n in clash:
            new = fresh_name(n, taken)
            taken.add(new)
            ren[n] = new
        t = GeneratedTerm(
            rename_free(t.term, {k: Sym(v) for k, v in ren.items()}),
            tuple(_rename_decl(d, ren[d.name]) if _decl_name(d) in ren else d for d in t.decls),
            tuple((ren.get(n, n), s) for n, s in t.free_vars),
        )
    by_sort: dict[Sort, list[str]] = {}
    for v, s in scope:
        by_sort.setdefault(s, []).append(v)
    mapping: dict[str, Term] = {}
    for name, sort in t.free_vars:
        candidates = by_sort.get(sort)
        if candidates and rng.random() < p_adapt:
            mapping[name] = Sym(candidates[rng.randrange(len(candidates))])
    if not mapping:
        return t
    return GeneratedTerm(
        rename_free(t.term, mapping),
        tuple(d for d in t.decls if _decl_name(d) not in mapping),
        tuple(v for v in t.free_vars if v[0] not in mapping),
    )


# ---------------------------------------------------------------- probes


def probe_script(t: GeneratedTerm) -> Script:
    """``(set-logic ALL)`` + declarations + ``(assert t)`` + ``(check-sat)``."""
    return Script((SetLogic("ALL"), *t.decls, Assert(t.term), CheckSat()))


def draw_samples(g: TheoryGrammar, n: int, seed: int) -> list[GeneratedTerm | DepthExhaustion]:
    """``n`` consecutive derivations from one rng seeded with ``seed``.
    Failed derivations are returned in place so callers can score them."""
    rng = random.Random(seed)
    out: list[GeneratedTerm | DepthExhaustion] = []
    for _ in range(n):
        try:
            out.append(generate(g, rng))
        except DepthExhaustion as e:
            out.append(e)
        except RecursionError:
            out.append(DepthExhaustion(g.start, g.max_depth))
    return out


def probe_texts(g: TheoryGrammar, n: int, seed: int) -> list[str | DepthExhaustion]:
    """Printed probe scripts for :func:`draw_samples`; the single sampling
    path shared by grammar scoring and ``gen sample``."""
    return [s if isinstance(s, DepthExhaustion) else print_script(probe_script(s)) + "\n" for s in draw_samples(g, n, seed)]


# ---------------------------------------------------------------- sets

BUILTIN_THEORIES = ("Core", "Ints", "Reals", "Reals_Ints", "Strings", "FixedSizeBitVectors", "Arrays")
_BUILTIN: GeneratorSet | None = None


def builtin_grammars() -> GeneratorSet:
    """Hand-written grammars for the standard SMT-LIB theories."""
    global _BUILTIN
    if _BUILTIN is None:
        base = resources.files("skelfuzz.termgen") / "grammars"
        grammars = []
        for name in BUILTIN_THEORIES:
            text = (base / f"{name}.smtg").read_text(encoding="utf-8")
            grammars.append(load_grammar(text))
        _BUILTIN = GeneratorSet(tuple(grammars))
    return _BUILTIN


def load_grammar_dir(directory: str | Path) -> GeneratorSet:
    paths = sorted(Path(directory).glob("*.smtg"))
    if not paths:
        raise GrammarError(f"no .smtg grammars in {directory}")
    return GeneratorSet(tuple(load_grammar(p) for p in paths))


def select(gens: GeneratorSet, names: Iterable[str]) -> GeneratorSet:
    return GeneratorSet(tuple(gens[n] for n in names))
