"""Tokenizer and s-expression reader for SMT-LIB v2 text.

The reader is iterative so that deeply nested benchmark formulas do not hit
the interpreter recursion limit.
"""

from __future__ import annotations

import re

__all__ = ["Atom", "SList", "ParseError", "read_sexprs", "to_text"]


class ParseError(Exception):
    """Raised on malformed SMT-LIB input; carries a 1-based position."""

    def __init__(self, message: str, line: int, column: int, token: str):
        super().__init__(f"{line}:{column}: {message} (at {token!r})")
        self.message = message
        self.line = line
        self.column = column
        self.token = token


class Atom:
    __slots__ = ("kind", "text", "line", "column")

    def __init__(self, kind: str, text: str, line: int, column: int):
        self.kind = kind  # sym, kw, num, dec, str, bin, hex
        self.text = text
        self.line = line
        self.column = column

    def __repr__(self):
        return f"Atom({self.kind}, {self.text!r})"


class SList:
    __slots__ = ("items", "line", "column")

    def __init__(self, items: list, line: int, column: int):
        self.items = items
        self.line = line
        self.column = column

    def __repr__(self):
        return f"SList({self.items!r})"


_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>;[^\n]*)
  | (?P<lpar>\()
  | (?P<rpar>\))
  | (?P<str>"(?:[^"]|"")*")
  | (?P<qsym>\|[^|]*\|)
  | (?P<hex>\#x[0-9a-fA-F]+)
  | (?P<bin>\#b[01]+)
  | (?P<dec>[0-9]+\.[0-9]+(?![^\s()";|]))
  | (?P<num>[0-9]+(?![^\s()";|]))
  | (?P<kw>:[^\s()";|]+)
  | (?P<sym>[^\s()";|]+)
    """,
    re.VERBOSE,
)


def _position(text: str, offset: int) -> tuple[int, int]:
    line = text.count("\n", 0, offset) + 1
    column = offset - (text.rfind("\n", 0, offset) + 1) + 1
    return line, column


def read_sexprs(text: str) -> list:
    """Read every top-level s-expression in ``text``."""
    stack: list[SList] = []
    top: list = []
    pos = 0
    n = len(text)
    # line bookkeeping is incremental; recomputing from scratch is quadratic
    line, line_start = 1, 0
    match = _TOKEN.match
    while pos < n:
        m = match(text, pos)
        if m is None:
            ln, col = _position(text, pos)
            tok = text[pos : pos + 10]
            if text[pos] == '"':
                raise ParseError("unterminated string literal", ln, col, tok)
            if text[pos] == "|":
                raise ParseError("unterminated quoted symbol", ln, col, tok)
            raise ParseError("unexpected character", ln, col, tok)
        kind = m.lastgroup
        tok = m.group()
        column = pos - line_start + 1
        if kind == "lpar":
            stack.append(SList([], line, column))
        elif kind == "rpar":
            if not stack:
                raise ParseError("unbalanced closing parenthesis", line, column, ")")
            node = stack.pop()
            (stack[-1].items if stack else top).append(node)
        elif kind not in ("ws", "comment"):
            if kind == "qsym":
                kind = "sym"
            atom = Atom(kind, tok, line, column)
            (stack[-1].items if stack else top).append(atom)
        nl = tok.count("\n")
        if nl:
            line += nl
            line_start = pos + tok.rfind("\n") + 1
        pos = m.end()
    if stack:
        ln, col = _position(text, n)
        opened = stack[-1]
        raise ParseError(
            f"unbalanced parenthesis: '(' opened at {opened.line}:{opened.column} never closed",
            ln,
            col,
            "<end-of-input>",
        )
    return top


_CLOSE = object()


def to_text(node) -> str:
    """Canonical single-space rendering of a raw s-expression."""
    if isinstance(node, Atom):
        return node.text
    parts: list[str] = []
    prev_open = True
    # explicit stack keeps deep passthrough forms off the recursion limit
    work = [node]
    while work:
        item = work.pop()
        if item is _CLOSE:
            parts.append(")")
            prev_open = False
            continue
        if not prev_open:
            parts.append(" ")
        if isinstance(item, Atom):
            parts.append(item.text)
            prev_open = False
        else:
            parts.append("(")
            prev_open = True
            work.append(_CLOSE)
            work.extend(reversed(item.items))
    return "".join(parts)
