"""Analysis pass: classifies parsed top-level expressions into constructs.

Supported constructs: deftemplate, defrule, deffacts, and a catch-all Call
for any other head symbol. Rule bodies split at the `=>` marker; condition
elements classify as pattern, negation or test; `?v <- (pattern)` binds the
matched fact's address.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

from prodex.lang.lexer import TokenKind
from prodex.lang.sexpr import Atom, ListExpr, SExpr
from prodex.values import KIND_NAMES, ValueKind


class AnalysisError(Exception):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} at line {line}, column {column}")
        self.line = line
        self.column = column


@dataclass(frozen=True)
class SlotDecl:
    name: str
    kind: Optional[ValueKind]  # None means unconstrained


@dataclass(frozen=True)
class TemplateDecl:
    name: str
    slots: tuple[SlotDecl, ...]
    line: int = 0
    column: int = 0


@dataclass(frozen=True)
class PatternCE:
    """A single-fact condition element.

    Exactly one of slot_pairs (template-style `(head (slot val)...)`) or
    positional (ordered-style `(head val...)`) is non-None; a bare `(head)`
    is stored as positional=() and resolved against the template registry
    when the rule is defined.
    """

    head: str
    slot_pairs: Optional[tuple[tuple[str, SExpr], ...]]
    positional: Optional[tuple[SExpr, ...]]
    fact_var: Optional[str] = None
    line: int = 0
    column: int = 0


@dataclass(frozen=True)
class NotCE:
    pattern: PatternCE
    line: int = 0
    column: int = 0


@dataclass(frozen=True)
class TestCE:
    expr: SExpr
    line: int = 0
    column: int = 0


ConditionElement = Union[PatternCE, NotCE, TestCE]


@dataclass(frozen=True)
class RuleDecl:
    name: str
    salience: int
    conditions: tuple[ConditionElement, ...]
    actions: tuple[SExpr, ...]
    line: int = 0
    column: int = 0


@dataclass(frozen=True)
class FactsDecl:
    name: str
    literals: tuple[ListExpr, ...]
    line: int = 0
    column: int = 0


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple[SExpr, ...]
    line: int = 0
    column: int = 0


Construct = Union[TemplateDecl, RuleDecl, FactsDecl, Call]


def _pos(expr: SExpr) -> tuple[int, int]:
    if isinstance(expr, Atom):
        return expr.token.line, expr.token.column
    return expr.line, expr.column


def _head_symbol(expr: ListExpr) -> Optional[str]:
    if expr.items and isinstance(expr[0], Atom) and expr[0].kind is TokenKind.SYMBOL:
        return expr[0].text
    return None


def _require_name(expr: ListExpr, what: str) -> str:
    if len(expr) < 2 or not isinstance(expr[1], Atom) or expr[1].kind is not TokenKind.SYMBOL:
        line, col = _pos(expr)
        raise AnalysisError(f"{what} requires a name", line, col)
    return expr[1].text


def _analyze_template(expr: ListExpr) -> TemplateDecl:
    name = _require_name(expr, "deftemplate")
    slots: list[SlotDecl] = []
    seen: set[str] = set()
    for item in expr.items[2:]:
        line, col = _pos(item)
        if not isinstance(item, ListExpr) or _head_symbol(item) != "slot":
            raise AnalysisError("deftemplate body must be (slot ...) declarations", line, col)
        if len(item) < 2 or not isinstance(item[1], Atom) or item[1].kind is not TokenKind.SYMBOL:
            raise AnalysisError("slot requires a name", line, col)
        slot_name = item[1].text
        if slot_name in seen:
            raise AnalysisError(f"duplicate slot name '{slot_name}'", line, col)
        seen.add(slot_name)
        kind: Optional[ValueKind] = None
        for attr in item.items[2:]:
            aline, acol = _pos(attr)
            if not isinstance(attr, ListExpr) or _head_symbol(attr) != "type" or len(attr) != 2:
                raise AnalysisError("unsupported slot attribute", aline, acol)
            type_atom = attr[1]
            if not isinstance(type_atom, Atom) or type_atom.text not in KIND_NAMES:
                raise AnalysisError(
                    f"unknown slot type '{getattr(type_atom, 'text', '?')}'", aline, acol
                )
            kind = KIND_NAMES[type_atom.text]
        slots.append(SlotDecl(slot_name, kind))
    line, col = _pos(expr)
    return TemplateDecl(name, tuple(slots), line, col)


def _pattern_value(expr: SExpr) -> SExpr:
    """Pattern slot values are literals or variables; nested lists are not
    part of the supported pattern grammar."""
    if isinstance(expr, ListExpr):
        line, col = _pos(expr)
        raise AnalysisError("pattern values must be literals or variables", line, col)
    return expr


def _analyze_pattern(expr: ListExpr, fact_var: Optional[str] = None) -> PatternCE:
    line, col = _pos(expr)
    head = _head_symbol(expr)
    if head is None:
        raise AnalysisError("pattern must start with a template or fact name", line, col)
    tail = expr.items[1:]
    if tail and all(isinstance(t, ListExpr) for t in tail):
        pairs: list[tuple[str, SExpr]] = []
        for t in tail:
            tline, tcol = _pos(t)
            assert isinstance(t, ListExpr)
            if (
                len(t) != 2
                or not isinstance(t[0], Atom)
                or t[0].kind is not TokenKind.SYMBOL
            ):
                raise AnalysisError("slot test must be (slot value)", tline, tcol)
            pairs.append((t[0].text, _pattern_value(t[1])))
        return PatternCE(head, tuple(pairs), None, fact_var, line, col)
    positional = tuple(_pattern_value(t) for t in tail)
    return PatternCE(head, None, positional, fact_var, line, col)


def _analyze_rule(expr: ListExpr) -> RuleDecl:
    name = _require_name(expr, "defrule")
    body = list(expr.items[2:])
    # optional docstring
    if body and isinstance(body[0], Atom) and body[0].kind is TokenKind.STRING:
        body.pop(0)
    salience = 0
    if body and isinstance(body[0], ListExpr) and _head_symbol(body[0]) == "declare":
        decl = body.pop(0)
        for item in decl.items[1:]:
            iline, icol = _pos(item)
            if (
                not isinstance(item, ListExpr)
                or _head_symbol(item) != "salience"
                or len(item) != 2
                or not isinstance(item[1], Atom)
                or item[1].kind is not TokenKind.INTEGER
            ):
                raise AnalysisError("declare supports only (salience <integer>)", iline, icol)
            salience = int(item[1].text)
    arrow = None
    for i, item in enumerate(body):
        if isinstance(item, Atom) and item.kind is TokenKind.SYMBOL and item.text == "=>":
            arrow = i
            break
    line, col = _pos(expr)
    if arrow is None:
        raise AnalysisError(f"defrule '{name}' has no '=>'", line, col)
    lhs, rhs = body[:arrow], body[arrow + 1 :]

    conditions: list[ConditionElement] = []
    i = 0
    while i < len(lhs):
        item = lhs[i]
        iline, icol = _pos(item)
        # ?v <- (pattern)
        if isinstance(item, Atom) and item.kind is TokenKind.VARIABLE:
            arrow_ok = (
                i + 2 < len(lhs)
                and isinstance(lhs[i + 1], Atom)
                and lhs[i + 1].text == "<-"  # type: ignore[union-attr]
                and isinstance(lhs[i + 2], ListExpr)
            )
            if not arrow_ok:
                raise AnalysisError(
                    "expected '?var <- (pattern)' on the left-hand side", iline, icol
                )
            pattern_expr = lhs[i + 2]
            assert isinstance(pattern_expr, ListExpr)
            conditions.append(_analyze_pattern(pattern_expr, fact_var=item.text))
            i += 3
            continue
        if not isinstance(item, ListExpr):
            raise AnalysisError("condition element must be a parenthesized form", iline, icol)
        head = _head_symbol(item)
        if head == "not":
            if len(item) != 2 or not isinstance(item[1], ListExpr):
                raise AnalysisError("not takes exactly one pattern", iline, icol)
            conditions.append(NotCE(_analyze_pattern(item[1]), iline, icol))
        elif head == "test":
            if len(item) != 2:
                raise AnalysisError("test takes exactly one expression", iline, icol)
            conditions.append(TestCE(item[1], iline, icol))
        else:
            conditions.append(_analyze_pattern(item))
        i += 1

    for action in rhs:
        if not isinstance(action, ListExpr) or _head_symbol(action) is None:
            aline, acol = _pos(action)
            raise AnalysisError("rule action must be a function call", aline, acol)
    return RuleDecl(name, salience, tuple(conditions), tuple(rhs), line, col)


def _analyze_facts(expr: ListExpr) -> FactsDecl:
    name = _require_name(expr, "deffacts")
    literals: list[ListExpr] = []
    for item in expr.items[2:]:
        line, col = _pos(item)
        if not isinstance(item, ListExpr) or _head_symbol(item) is None:
            raise AnalysisError("deffacts entries must be fact literals", line, col)
        literals.append(item)
    line, col = _pos(expr)
    return FactsDecl(name, tuple(literals), line, col)


def analyze_one(expr: SExpr) -> Construct:
    if isinstance(expr, Atom):
        raise AnalysisError("expected a parenthesized construct", expr.token.line, expr.token.column)
    head = _head_symbol(expr)
    line, col = _pos(expr)
    if head is None:
        raise AnalysisError("construct must start with a symbol", line, col)
    if head == "deftemplate":
        return _analyze_template(expr)
    if head == "defrule":
        return _analyze_rule(expr)
    if head == "deffacts":
        return _analyze_facts(expr)
    return Call(head, tuple(expr.items[1:]), line, col)


def analyze(exprs: list[SExpr]) -> list[Construct]:
    return [analyze_one(e) for e in exprs]
