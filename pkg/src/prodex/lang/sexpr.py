"""S-expression reader: tokens -> nested Atom/ListExpr trees, and the inverse
printer. Printing then re-parsing yields a structurally equal tree."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Union

from prodex.lang.lexer import Token, TokenKind, tokenize


class ParseError(Exception):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} at line {line}, column {column}")
        self.line = line
        self.column = column


@dataclass(frozen=True)
class Atom:
    token: Token

    @property
    def kind(self) -> TokenKind:
        return self.token.kind

    @property
    def text(self) -> str:
        return self.token.text

    def __repr__(self) -> str:
        return f"Atom({self.token.kind.value}:{self.token.text})"


@dataclass(frozen=True)
class ListExpr:
    items: tuple["SExpr", ...]
    line: int = 0
    column: int = 0

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self) -> Iterator["SExpr"]:
        return iter(self.items)

    def __getitem__(self, idx):
        return self.items[idx]


SExpr = Union[Atom, ListExpr]


def parse(text: str) -> list[SExpr]:
    """Parse source text into top-level s-expressions.

    Unbalanced parentheses raise ParseError naming the unmatched position.
    """
    tokens = tokenize(text)
    exprs: list[SExpr] = []
    pos = 0

    def read(i: int) -> tuple[SExpr, int]:
        tok = tokens[i]
        if tok.kind is TokenKind.LPAREN:
            items: list[SExpr] = []
            j = i + 1
            while True:
                if j >= len(tokens):
                    raise ParseError("unmatched '('", tok.line, tok.column)
                if tokens[j].kind is TokenKind.RPAREN:
                    return ListExpr(tuple(items), tok.line, tok.column), j + 1
                item, j = read(j)
                items.append(item)
        if tok.kind is TokenKind.RPAREN:
            raise ParseError("unmatched ')'", tok.line, tok.column)
        return Atom(tok), i + 1

    while pos < len(tokens):
        expr, pos = read(pos)
        exprs.append(expr)
    return exprs


def _atom_text(atom: Atom) -> str:
    if atom.kind is TokenKind.STRING:
        escaped = atom.text.replace("\\", "\\\\").replace('"', '\\"')
        return f'"{escaped}"'
    return atom.text


def to_text(expr: SExpr) -> str:
    if isinstance(expr, Atom):
        return _atom_text(expr)
    return "(" + " ".join(to_text(item) for item in expr.items) + ")"


def structurally_equal(a: SExpr, b: SExpr) -> bool:
    """Equality ignoring source positions."""
    if isinstance(a, Atom) and isinstance(b, Atom):
        return a.kind is b.kind and a.text == b.text
    if isinstance(a, ListExpr) and isinstance(b, ListExpr):
        return len(a.items) == len(b.items) and all(
            structurally_equal(x, y) for x, y in zip(a.items, b.items)
        )
    return False
