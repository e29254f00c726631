"""Action and expression evaluation for rule right-hand sides and tests.

Special forms (assert, retract, bind, printout) mutate the kernel; builtins
are pure. Externally registered functions are looked up last so plugins
cannot shadow the core vocabulary.
"""

from __future__ import annotations

from typing import TYPE_CHECKING, Callable, Optional

from prodex.lang.lexer import TokenKind
from prodex.lang.sexpr import Atom, ListExpr, SExpr
from prodex.values import (
    FALSE,
    TRUE,
    FactRef,
    Symbol,
    Value,
    format_value,
    is_truthy,
    values_equal,
)

if TYPE_CHECKING:
    from prodex.engine.kernel import Kernel


class EvalError(Exception):
    pass


def _bool(value: bool) -> Symbol:
    return TRUE if value else FALSE


def _numeric(args: list[Value], fn_name: str) -> list:
    for a in args:
        if isinstance(a, bool) or not isinstance(a, (int, float)):
            raise EvalError(f"{fn_name} expects numbers, got {format_value(a)}")
    return args


def _chain(args: list[Value], fn_name: str, op: Callable[[Value, Value], bool]) -> Symbol:
    _numeric(args, fn_name)
    if len(args) < 2:
        raise EvalError(f"{fn_name} expects at least 2 arguments")
    return _bool(all(op(args[i], args[i + 1]) for i in range(len(args) - 1)))


def _cat(args: list[Value]) -> str:
    parts = []
    for a in args:
        parts.append(str(a) if isinstance(a, str) else format_value(a))
    return "".join(parts)


PURE_BUILTINS: dict[str, Callable[[list[Value]], Value]] = {
    "+": lambda a: sum(_numeric(a, "+")),
    "-": lambda a: (-a[0] if len(a) == 1 else _fold_sub(a)),
    "*": lambda a: _fold_mul(a),
    "/": lambda a: _fold_div(a),
    "mod": lambda a: _numeric(a, "mod")[0] % a[1],
    "abs": lambda a: abs(_numeric(a, "abs")[0]),
    "min": lambda a: min(_numeric(a, "min")),
    "max": lambda a: max(_numeric(a, "max")),
    "=": lambda a: _chain(a, "=", lambda x, y: x == y),
    "!=": lambda a: _chain(a, "!=", lambda x, y: x != y),
    "<": lambda a: _chain(a, "<", lambda x, y: x < y),
    ">": lambda a: _chain(a, ">", lambda x, y: x > y),
    "<=": lambda a: _chain(a, "<=", lambda x, y: x <= y),
    ">=": lambda a: _chain(a, ">=", lambda x, y: x >= y),
    "eq": lambda a: _bool(all(values_equal(a[0], x) for x in a[1:])),
    "neq": lambda a: _bool(all(not values_equal(a[0], x) for x in a[1:])),
    "not": lambda a: _bool(not is_truthy(a[0])),
    "str-cat": lambda a: _cat(a),
    "sym-cat": lambda a: Symbol(_cat(a)),
}


def _fold_sub(args: list[Value]) -> Value:
    _numeric(args, "-")
    out = args[0]
    for a in args[1:]:
        out -= a
    return out


def _fold_mul(args: list[Value]) -> Value:
    _numeric(args, "*")
    out = args[0] if args else 1
    for a in args[1:]:
        out *= a
    return out


def _fold_div(args: list[Value]) -> Value:
    _numeric(args, "/")
    if len(args) < 2:
        raise EvalError("/ expects at least 2 arguments")
    out = float(args[0])
    for a in args[1:]:
        out /= a
    return out


class Evaluator:
    def __init__(self, kernel: "Kernel"):
        self.kernel = kernel

    def eval_expr(self, expr: SExpr, bindings: dict[str, Value], pure: bool = False) -> Value:
        if isinstance(expr, Atom):
            kind = expr.kind
            if kind is TokenKind.VARIABLE:
                if expr.text not in bindings:
                    raise EvalError(f"variable ?{expr.text} is unbound")
                return bindings[expr.text]
            if kind is TokenKind.SYMBOL:
                return Symbol(expr.text)
            if kind is TokenKind.STRING:
                return expr.text
            if kind is TokenKind.INTEGER:
                return int(expr.text)
            return float(expr.text)
        if not expr.items or not isinstance(expr[0], Atom) or expr[0].kind is not TokenKind.SYMBOL:
            raise EvalError("expected a function call")
        name = expr[0].text
        return self.call(name, list(expr.items[1:]), bindings, pure=pure)

    def call(
        self,
        name: str,
        args: list[SExpr],
        bindings: dict[str, Value],
        pure: bool = False,
    ) -> Value:
        if not pure:
            if name in ("assert", "retract", "bind", "printout"):
                return self._special(name, args, bindings)
        if name in ("and", "or"):
            return self._logic(name, args, bindings, pure)
        builtin = PURE_BUILTINS.get(name)
        if builtin is not None:
            values = [self.eval_expr(a, bindings, pure) for a in args]
            return builtin(values)
        if not pure:
            fn = self.kernel.functions.get(name)
            if fn is not None:
                values = [self.eval_expr(a, bindings, pure) for a in args]
                return fn(*values)
        raise EvalError(f"unknown function '{name}'")

    def _logic(self, name: str, args: list[SExpr], bindings: dict, pure: bool) -> Symbol:
        if name == "and":
            for a in args:
                if not is_truthy(self.eval_expr(a, bindings, pure)):
                    return FALSE
            return TRUE
        for a in args:
            if is_truthy(self.eval_expr(a, bindings, pure)):
                return TRUE
        return FALSE

    def _special(self, name: str, args: list[SExpr], bindings: dict[str, Value]) -> Value:
        if name == "assert":
            if not args:
                raise EvalError("assert expects at least one fact literal")
            last: Value = FALSE
            for literal in args:
                if not isinstance(literal, ListExpr):
                    raise EvalError("assert expects fact literals")
                last = FactRef(self.kernel.assert_from_expr(literal, bindings))
            return last
        if name == "retract":
            if not args:
                raise EvalError("retract expects fact addresses")
            for a in args:
                ref = self.eval_expr(a, bindings)
                if isinstance(ref, bool) or not isinstance(ref, int):
                    raise EvalError(f"retract expects a fact address, got {format_value(ref)}")
                self.kernel.retract_fact(int(ref))
            return TRUE
        if name == "bind":
            if len(args) != 2 or not isinstance(args[0], Atom) or args[0].kind is not TokenKind.VARIABLE:
                raise EvalError("bind expects (bind ?var expression)")
            value = self.eval_expr(args[1], bindings)
            bindings[args[0].text] = value
            return value
        # printout
        if not args:
            raise EvalError("printout expects a router")
        router = self.eval_expr(args[0], bindings)
        parts: list[str] = []
        for a in args[1:]:
            value = self.eval_expr(a, bindings)
            if isinstance(value, Symbol) and value == "crlf":
                parts.append("\n")
            elif isinstance(value, str):
                parts.append(str(value))
            else:
                parts.append(format_value(value))
        self.kernel.write_console(str(router), "".join(parts))
        return TRUE
