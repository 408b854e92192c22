"""Deterministic synthetic seed corpus with messy formatting.

Scripts mix theories, quantifiers, lets, definitions, named terms and
comments, then get re-laid-out with random whitespace so the parser sees
something closer to hand-written benchmark files.
"""

from __future__ import annotations

import random
import re

from skelfuzz.smtlib import (
    App,
    Annot,
    Assert,
    CheckSat,
    DeclareFun,
    DefineFun,
    Let,
    Quant,
    Script,
    SetLogic,
    Sort,
    Sym,
    fresh_name,
    print_script,
    rename_free,
    print_term,
)
from skelfuzz.termgen import builtin_grammars, generate

LOGICS = {
    "Core": "QF_UF",
    "Ints": "QF_LIA",
    "Reals": "QF_NRA",
    "Reals_Ints": "QF_LIRA",
    "Strings": "QF_SLIA",
    "FixedSizeBitVectors": "QF_BV",
    "Arrays": "QF_AX",
}
CONNECTIVES = ("and", "or", "=>", "xor")


def _boolean(gens, rng, decls, names, depth=0):
    g = gens.grammars[rng.randrange(len(gens.grammars))]
    t = generate(g, rng)
    mapping = {}
    for d in t.decls:
        new = fresh_name(d.name, names)
        names.add(new)
        if new != d.name:
            mapping[d.name] = Sym(new)
        decls.append(DeclareFun(new, d.args, d.result))
    term = rename_free(t.term, mapping)
    if depth < 2 and rng.random() < 0.6:
        op = rng.choice(CONNECTIVES)
        other = _boolean(gens, rng, decls, names, depth + 1)
        term = App(op, (term, other))
    if rng.random() < 0.15:
        term = App("not", (term,))
    return term


def _wrap(term, rng, k):
    r = rng.random()
    if r < 0.12:
        v = f"q{k}"
        body = App("or", (term, App(">=", (Sym(v), Sym(v)))))
        return Quant(rng.choice(("forall", "exists")), ((v, Sort("Int")),), body), True
    if r < 0.22:
        v = f"b{k}"
        return Let(((v, Sym("true")),), App("and", (Sym(v), term))), False
    if r < 0.28:
        return Annot(term, ((":named", f"a{k}"),)), False
    return term, False


def synth_script(rng: random.Random, gens=None) -> tuple[Script, str]:
    gens = gens or builtin_grammars()
    theory = rng.choice(list(LOGICS))
    decls: list = []
    names: set[str] = set()
    asserts = []
    quantified = False
    for k in range(rng.randint(1, 4)):
        term = _boolean(gens, rng, decls, names)
        term, q = _wrap(term, rng, k)
        quantified |= q
        asserts.append(Assert(term))
    cmds = []
    logic = "ALL" if quantified or rng.random() < 0.5 else LOGICS[theory]
    cmds.append(SetLogic(logic))
    cmds.extend(decls)
    if rng.random() < 0.3:
        cmds.append(DefineFun("helper", (("h", Sort("Bool")),), Sort("Bool"), App("not", (Sym("h"),))))
        asserts.append(Assert(App("helper", (App("helper", (Sym("true"),)),))))
    cmds.extend(asserts)
    cmds.append(CheckSat())
    s = Script(tuple(cmds))
    return s, messy(print_script(s), rng)


_TOKEN = re.compile(r'"(?:[^"]|"")*"|\|[^|]*\||\s+|[^\s"|]+')


def messy(text: str, rng: random.Random) -> str:
    """Re-lay-out canonical text: random line breaks, indentation, tabs,
    blank lines and comments, never inside string literals."""
    out = []
    if rng.random() < 0.5:
        out.append("; generated seed\n")
    for tok in _TOKEN.findall(text):
        if not tok.isspace():
            out.append(tok)
            continue
        r = rng.random()
        if "\n" in tok:
            if r < 0.2:
                out.append("\n\n")
            elif r < 0.35:
                out.append("   ; comment (with parens) \n")
            else:
                out.append("\n")
        elif r < 0.15:
            out.append("\n" + " " * rng.randint(0, 8))
        elif r < 0.25:
            out.append("\t ")
        elif r < 0.3:
            out.append("  ")
        else:
            out.append(" ")
    return "".join(out).replace(")(", ") (") if rng.random() < 0.5 else "".join(out)


def build_corpus(n: int, seed: int = 2024) -> list[tuple[str, str]]:
    rng = random.Random(seed)
    gens = builtin_grammars()
    return [(f"synth_{i:04d}.smt2", synth_script(rng, gens)[1]) for i in range(n)]


__all__ = ["build_corpus", "synth_script", "messy", "print_term"]
