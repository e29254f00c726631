"""Lexer for the rule language.

Produces parens, symbols, strings, integers, floats and `?variables` with
1-based source positions. Comments run from ';' to end of line. Strings
decode the escapes \\" and \\\\.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass


class LexError(Exception):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} at line {line}, column {column}")
        self.line = line
        self.column = column


class TokenKind(enum.Enum):
    LPAREN = "lparen"
    RPAREN = "rparen"
    SYMBOL = "symbol"
    STRING = "string"
    INTEGER = "integer"
    FLOAT = "float"
    VARIABLE = "variable"


@dataclass(frozen=True)
class Token:
    kind: TokenKind
    text: str
    line: int
    column: int


# Characters that terminate a symbol.
_DELIMS = set('();"')


def _is_symbol_char(ch: str) -> bool:
    return not ch.isspace() and ch not in _DELIMS


def _classify_word(word: str) -> TokenKind:
    """Numeric literal grammar: optional sign, digits, optional fraction and
    exponent. Anything else is a symbol."""
    body = word
    if body and body[0] in "+-":
        body = body[1:]
    if not body or not body[0].isdigit():
        return TokenKind.SYMBOL
    seen_dot = seen_exp = False
    digits_after_exp = True
    i = 0
    while i < len(body):
        ch = body[i]
        if ch.isdigit():
            i += 1
            continue
        if ch == "." and not seen_dot and not seen_exp:
            seen_dot = True
            i += 1
            continue
        if ch in "eE" and not seen_exp and i > 0:
            seen_exp = True
            digits_after_exp = False
            i += 1
            if i < len(body) and body[i] in "+-":
                i += 1
            while i < len(body) and body[i].isdigit():
                digits_after_exp = True
                i += 1
            continue
        return TokenKind.SYMBOL
    if seen_exp and not digits_after_exp:
        return TokenKind.SYMBOL
    return TokenKind.FLOAT if (seen_dot or seen_exp) else TokenKind.INTEGER


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    line, col = 1, 1
    i, n = 0, len(text)

    def advance(ch: str) -> None:
        nonlocal line, col
        if ch == "\n":
            line += 1
            col = 1
        else:
            col += 1

    while i < n:
        ch = text[i]
        if ch.isspace():
            advance(ch)
            i += 1
            continue
        if ch == ";":
            while i < n and text[i] != "\n":
                i += 1
            continue  # newline handled on next pass
        if ch == "(":
            tokens.append(Token(TokenKind.LPAREN, "(", line, col))
            advance(ch)
            i += 1
            continue
        if ch == ")":
            tokens.append(Token(TokenKind.RPAREN, ")", line, col))
            advance(ch)
            i += 1
            continue
        if ch == '"':
            start_line, start_col = line, col
            advance(ch)
            i += 1
            chars: list[str] = []
            while True:
                if i >= n:
                    raise LexError("unterminated string", start_line, start_col)
                ch = text[i]
                if ch == "\\":
                    if i + 1 >= n:
                        raise LexError("unterminated string", start_line, start_col)
                    nxt = text[i + 1]
                    chars.append(nxt if nxt in ('"', "\\") else "\\" + nxt)
                    advance(ch)
                    advance(nxt)
                    i += 2
                    continue
                if ch == '"':
                    advance(ch)
                    i += 1
                    break
                chars.append(ch)
                advance(ch)
                i += 1
            tokens.append(Token(TokenKind.STRING, "".join(chars), start_line, start_col))
            continue
        if ch == "?":
            start_line, start_col = line, col
            advance(ch)
            i += 1
            name_start = i
            while i < n and _is_symbol_char(text[i]):
                advance(text[i])
                i += 1
            name = text[name_start:i]
            if not name:
                raise LexError("'?' must be followed by a variable name", start_line, start_col)
            tokens.append(Token(TokenKind.VARIABLE, "?" + name, start_line, start_col))
            continue
        # symbol or number
        start_line, start_col = line, col
        word_start = i
        while i < n and _is_symbol_char(text[i]):
            advance(text[i])
            i += 1
        word = text[word_start:i]
        tokens.append(Token(_classify_word(word), word, start_line, start_col))
    return tokens
