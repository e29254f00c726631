"""Front end for the rule language: lexer, s-expression reader and the
construct analyzer that turns parsed expressions into engine definitions."""

from prodex.lang.lexer import LexError, Token, TokenKind, tokenize
from prodex.lang.sexpr import Atom, ListExpr, ParseError, SExpr, parse, to_text
from prodex.lang.constructs import (
    AnalysisError,
    Call,
    Construct,
    FactsDecl,
    RuleDecl,
    SlotDecl,
    TemplateDecl,
    analyze,
)

__all__ = [
    "AnalysisError",
    "Atom",
    "Call",
    "Construct",
    "FactsDecl",
    "LexError",
    "ListExpr",
    "ParseError",
    "RuleDecl",
    "SExpr",
    "SlotDecl",
    "TemplateDecl",
    "Token",
    "TokenKind",
    "analyze",
    "parse",
    "to_text",
    "tokenize",
]
