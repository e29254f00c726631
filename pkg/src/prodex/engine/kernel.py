"""Engine kernel: templates, rules, the fact store and the firing loop.

A kernel is single-owner; callers serialize mutations through the
environment guard. Runtime errors inside rule actions abort that one
firing, are logged, and the loop continues.
"""

from __future__ import annotations

from typing import Callable, Optional, Union

from prodex.engine.evaluator import EvalError, Evaluator, PURE_BUILTINS
from prodex.engine.model import (
    Activation,
    Agenda,
    CompiledCE,
    CompiledNot,
    CompiledPattern,
    CompiledTest,
    Fact,
    RuleDef,
    SlotDef,
    TemplateDef,
)
from prodex.engine.rete import ReteNetwork, Token
from prodex.lang.constructs import FactsDecl, NotCE, PatternCE, RuleDecl, TestCE
from prodex.lang.lexer import TokenKind
from prodex.lang.sexpr import Atom, ListExpr, SExpr, parse
from prodex.values import (
    NIL,
    Symbol,
    Value,
    ValueKind,
    coerce,
    conforms,
    format_value,
    is_truthy,
)


class EngineError(Exception):
    pass


class RuntimeActionError(Exception):
    pass


INITIAL_FACT = "initial-fact"

# conditions with no leading positive pattern anchor on the reset marker,
# so they re-activate after every reset
_IMPLICIT_PATTERN = CompiledPattern(INITIAL_FACT, True, 0, (), (), None)

# any Exception from an action (including plugin-registered functions)
# aborts that one firing; the engine itself must keep running
_ACTION_ERRORS = (Exception,)


def _atom_value(atom: Atom) -> Value:
    kind = atom.kind
    if kind is TokenKind.SYMBOL:
        return Symbol(atom.text)
    if kind is TokenKind.STRING:
        return atom.text
    if kind is TokenKind.INTEGER:
        return int(atom.text)
    if kind is TokenKind.FLOAT:
        return float(atom.text)
    raise EngineError(f"not a literal: ?{atom.text}")


def _walk_variables(expr: SExpr, found: list[str]) -> None:
    if isinstance(expr, Atom):
        if expr.kind is TokenKind.VARIABLE:
            found.append(expr.text)
        return
    for item in expr.items:
        _walk_variables(item, found)


class Kernel:
    def __init__(self, name: str = "env"):
        self.name = name
        self.templates: dict[str, TemplateDef] = {}
        self.rules: dict[str, RuleDef] = {}
        self.deffacts: dict[str, tuple[tuple[ListExpr, ...], str]] = {}
        self.facts: dict[int, Fact] = {}
        self.functions: dict[str, Callable[..., Value]] = {}
        self.network = ReteNetwork(lambda: list(self.facts.values()))
        self.agenda = Agenda()
        self.refraction: set[tuple[str, tuple[int, ...]]] = set()
        self.evaluator = Evaluator(self)
        self.log_sink: Optional[Callable[[str, str], None]] = None
        self.console_sink: Optional[Callable[[str, str], None]] = None
        self.log_records: list[tuple[str, str]] = []
        self.console: list[str] = []
        self._next_id = 0
        self.reset()

    # ------------------------------------------------------------------ output

    def log(self, level: str, text: str) -> None:
        if self.log_sink is not None:
            self.log_sink(level, text)
        else:
            self.log_records.append((level, text))

    def write_console(self, router: str, text: str) -> None:
        for line in text.split("\n"):
            if not line:
                continue
            if self.console_sink is not None:
                self.console_sink(router, line)
            else:
                self.console.append(line)

    # ------------------------------------------------------------- definitions

    def define_template(self, name: str, slots: list[SlotDef], source: str = "") -> None:
        if name in self.templates:
            raise EngineError(f"template '{name}' is already defined")
        self.templates[name] = TemplateDef(name, tuple(slots), source)

    def add_deffacts(self, name: str, literals: list[ListExpr], source: str = "") -> None:
        if name in self.deffacts:
            raise EngineError(f"deffacts '{name}' is already defined")
        self.deffacts[name] = (tuple(literals), source)

    def register_function(self, name: str, fn: Callable[..., Value]) -> None:
        if name in PURE_BUILTINS or name in ("assert", "retract", "bind", "printout", "and", "or"):
            raise EngineError(f"cannot shadow builtin '{name}'")
        self.functions[name] = fn

    def unregister_function(self, name: str) -> None:
        self.functions.pop(name, None)

    def _compile_pattern(self, ce: PatternCE) -> CompiledPattern:
        template = self.templates.get(ce.head)
        if ce.slot_pairs is not None:
            if template is None:
                raise EngineError(f"unknown template '{ce.head}'")
            literal_tests: list[tuple[str, Value]] = []
            var_binds: list[tuple[str, str]] = []
            for slot_name, value_expr in ce.slot_pairs:
                slot = template.slot(slot_name)
                if slot is None:
                    raise EngineError(f"template '{ce.head}' has no slot '{slot_name}'")
                assert isinstance(value_expr, Atom)
                if value_expr.kind is TokenKind.VARIABLE:
                    var_binds.append((slot_name, value_expr.text))
                else:
                    literal = _atom_value(value_expr)
                    if slot.kind is not None:
                        if not conforms(literal, slot.kind):
                            raise EngineError(
                                f"slot '{slot_name}' of '{ce.head}' expects "
                                f"{slot.kind.value}, got {format_value(literal)}"
                            )
                        literal = coerce(literal, slot.kind)
                    literal_tests.append((slot_name, literal))
            return CompiledPattern(
                ce.head, False, None, tuple(literal_tests), tuple(var_binds), ce.fact_var
            )
        assert ce.positional is not None
        if template is not None:
            if ce.positional:
                raise EngineError(f"pattern for template '{ce.head}' must use slot syntax")
            return CompiledPattern(ce.head, False, None, (), (), ce.fact_var)
        literal_tests = []
        var_binds = []
        for i, value_expr in enumerate(ce.positional):
            assert isinstance(value_expr, Atom)
            if value_expr.kind is TokenKind.VARIABLE:
                var_binds.append((str(i), value_expr.text))
            else:
                literal_tests.append((str(i), _atom_value(value_expr)))
        return CompiledPattern(
            ce.head, True, len(ce.positional), tuple(literal_tests), tuple(var_binds), ce.fact_var
        )

    def _validate_test(self, expr: SExpr, bound: set[str]) -> None:
        variables: list[str] = []
        _walk_variables(expr, variables)
        for var in variables:
            if var not in bound:
                raise EngineError(f"variable ?{var} in test is not bound by a prior pattern")
        if isinstance(expr, ListExpr):
            if expr.items and isinstance(expr[0], Atom) and expr[0].kind is TokenKind.SYMBOL:
                head = expr[0].text
                if head not in PURE_BUILTINS and head not in ("and", "or"):
                    raise EngineError(f"function '{head}' is not allowed in a test")
                for item in expr.items[1:]:
                    if isinstance(item, ListExpr):
                        self._validate_test(item, bound)

    def _validate_actions(self, actions: tuple[SExpr, ...], bound: set[str]) -> None:
        known = set(bound)

        def walk(expr: SExpr) -> None:
            if isinstance(expr, Atom):
                if expr.kind is TokenKind.VARIABLE and expr.text not in known:
                    raise EngineError(f"variable ?{expr.text} in action is unbound")
                return
            items = expr.items
            if (
                items
                and isinstance(items[0], Atom)
                and items[0].kind is TokenKind.SYMBOL
                and items[0].text == "bind"
                and len(items) == 3
                and isinstance(items[1], Atom)
                and items[1].kind is TokenKind.VARIABLE
            ):
                walk(items[2])
                known.add(items[1].text)
                return
            for item in items:
                walk(item)

        for action in actions:
            walk(action)

    def define_rule(self, decl: RuleDecl, source: str = "") -> None:
        if decl.name in self.rules:
            raise EngineError(f"rule '{decl.name}' is already defined")
        compiled: list[CompiledCE] = []
        bound: set[str] = set()
        for ce in decl.conditions:
            if isinstance(ce, PatternCE):
                pattern = self._compile_pattern(ce)
                compiled.append(pattern)
                bound.update(var for _, var in pattern.var_binds)
                if pattern.fact_var is not None:
                    bound.add(pattern.fact_var)
            elif isinstance(ce, NotCE):
                compiled.append(CompiledNot(self._compile_pattern(ce.pattern)))
            else:
                assert isinstance(ce, TestCE)
                self._validate_test(ce.expr, bound)
                compiled.append(CompiledTest(ce.expr))
        if not compiled or not isinstance(compiled[0], CompiledPattern):
            compiled.insert(0, _IMPLICIT_PATTERN)
        self._validate_actions(decl.actions, bound)
        rule = RuleDef(
            decl.name, decl.salience, tuple(compiled), decl.actions, len(self.rules), source
        )
        self.rules[decl.name] = rule
        self.network.add_production(rule, self._compile_test, self._on_match, self._on_unmatch)

    def _compile_test(self, ce: CompiledTest) -> Callable[[dict[str, Value]], bool]:
        def test_fn(bindings: dict[str, Value]) -> bool:
            try:
                return is_truthy(self.evaluator.eval_expr(ce.expr, dict(bindings), pure=True))
            except _ACTION_ERRORS as exc:
                self.log("DEBUG", f"test raised {exc}")
                return False

        return test_fn

    def _on_match(self, rule: RuleDef, token: Token) -> None:
        activation = Activation(rule, token.fact_ids(), dict(token.bindings))
        if activation.key() not in self.refraction:
            self.agenda.add(activation)

    def _on_unmatch(self, rule: RuleDef, token: Token) -> None:
        key = (rule.name, token.fact_ids())
        self.agenda.discard(key)
        self.refraction.discard(key)

    # -------------------------------------------------------------- fact store

    def assert_fact(self, head: str, values: Union[dict, list, None] = None) -> int:
        template = self.templates.get(head)
        if template is not None:
            given = dict(values or {})
            stored: dict[str, Value] = {}
            for slot in template.slots:
                if slot.name in given:
                    value = given.pop(slot.name)
                    value = coerce(value, slot.kind) if slot.kind else coerce(value, ValueKind.SYMBOL)
                    if slot.kind is not None and not conforms(value, slot.kind):
                        raise EngineError(
                            f"slot '{slot.name}' of '{head}' expects {slot.kind.value}, "
                            f"got {format_value(value)}"
                        )
                    stored[slot.name] = value
                elif slot.kind is None:
                    stored[slot.name] = NIL
                else:
                    raise EngineError(f"missing value for typed slot '{slot.name}' of '{head}'")
            if given:
                raise EngineError(f"template '{head}' has no slot '{next(iter(given))}'")
            fact = Fact(self._next_id, head, False, stored)
        else:
            if isinstance(values, dict):
                raise EngineError(f"unknown template '{head}'")
            items = [coerce(v, ValueKind.SYMBOL) for v in (values or [])]
            for v in items:
                ValueKind.of(v)  # raises TypeError on non-values
            fact = Fact(self._next_id, head, True, {str(i): v for i, v in enumerate(items)})
        self._next_id += 1
        self.facts[fact.id] = fact
        self.network.add_fact(fact)
        return fact.id

    def assert_from_expr(self, literal: ListExpr, bindings: dict[str, Value]) -> int:
        if not literal.items or not isinstance(literal[0], Atom) or literal[0].kind is not TokenKind.SYMBOL:
            raise EvalError("fact literal must start with a symbol")
        head = literal[0].text
        if head in self.templates:
            values: dict[str, Value] = {}
            for item in literal.items[1:]:
                if (
                    not isinstance(item, ListExpr)
                    or len(item) != 2
                    or not isinstance(item[0], Atom)
                    or item[0].kind is not TokenKind.SYMBOL
                ):
                    raise EvalError(f"template fact '{head}' expects (slot value) pairs")
                values[item[0].text] = self.evaluator.eval_expr(item[1], bindings)
            return self.assert_fact(head, values)
        positional = [self.evaluator.eval_expr(item, bindings) for item in literal.items[1:]]
        return self.assert_fact(head, positional)

    def retract_fact(self, fact_id: int) -> None:
        fact = self.facts.pop(fact_id, None)
        if fact is None:
            raise EngineError(f"fact f-{fact_id} does not exist")
        self.network.remove_fact(fact)

    # ------------------------------------------------------------------ firing

    def run(self, limit: Optional[int] = None) -> int:
        fired = 0
        while limit is None or fired < limit:
            activation = self.agenda.pop_top()
            if activation is None:
                break
            self.refraction.add(activation.key())
            bindings = dict(activation.bindings)
            try:
                for action in activation.rule.actions:
                    self.evaluator.eval_expr(action, bindings)
            except _ACTION_ERRORS as exc:
                self.log("ERROR", f"rule '{activation.rule.name}' aborted: {type(exc).__name__}: {exc}")
            fired += 1
        return fired

    def reset(self) -> None:
        for fact in list(self.facts.values()):
            self.network.remove_fact(fact)
        self.facts.clear()
        self.agenda.clear()
        self.refraction.clear()
        self._next_id = 0
        self.assert_fact(INITIAL_FACT, [])
        for literals, _ in self.deffacts.values():
            for literal in literals:
                try:
                    self.assert_from_expr(literal, {})
                except EvalError as exc:
                    raise EngineError(f"deffacts literal failed: {exc}") from exc

    # ------------------------------------------------------------- conveniences

    def eval_expression(self, expr: SExpr, bindings: Optional[dict[str, Value]] = None) -> Value:
        return self.evaluator.eval_expr(expr, bindings if bindings is not None else {})

    def eval_text(self, text: str) -> Value:
        exprs = parse(text)
        result: Value = NIL
        for expr in exprs:
            result = self.eval_expression(expr)
        return result

    def format_fact(self, fact: Fact) -> str:
        if fact.ordered:
            inner = " ".join(format_value(v) for v in fact.values.values())
            return f"({fact.template}{' ' + inner if inner else ''})"
        template = self.templates[fact.template]
        pairs = " ".join(
            f"({slot.name} {format_value(fact.values[slot.name])})" for slot in template.slots
        )
        return f"({fact.template}{' ' + pairs if pairs else ''})"

    def fact_lines(self) -> list[str]:
        return [f"f-{fact.id} {self.format_fact(fact)}" for fact in self.facts.values()]
