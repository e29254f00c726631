"""Readers for the planning language subset.

Accepted requirements: :strips, :typing, :durative-actions,
:negative-preconditions and :numeric-fluents (the latter only so durations
can reference function values). Anything else is rejected by name.

Identifiers are case-insensitive and normalized to lowercase.
"""

from __future__ import annotations

from typing import Dict, List, Optional, Tuple, Union

from prodex.lang.lexer import LexError, TokenKind
from prodex.lang.sexpr import Atom, ListExpr, ParseError, SExpr, parse
from prodex.pddl.model import (
    AT_END,
    AT_START,
    Action,
    Domain,
    Duration,
    FunctionDecl,
    Literal,
    NumericEffect,
    OVER_ALL,
    PddlError,
    Predicate,
    Problem,
)

SUPPORTED_REQUIREMENTS = (
    ":strips",
    ":typing",
    ":durative-actions",
    ":negative-preconditions",
    ":numeric-fluents",
)

Tree = Union[str, int, float, list]


def _strip(expr: SExpr) -> Tree:
    """Lower sexpr trees to plain lists of lowercase strings and numbers."""
    if isinstance(expr, ListExpr):
        return [_strip(item) for item in expr.items]
    if expr.kind is TokenKind.INTEGER:
        return int(expr.text)
    if expr.kind is TokenKind.FLOAT:
        return float(expr.text)
    if expr.kind is TokenKind.STRING:
        raise PddlError("string literals are not part of the planning language")
    # symbols and ?variables both normalize to lowercase
    return expr.text.lower()


def _parse_source(text: str, what: str) -> list:
    try:
        exprs = parse(text)
    except (LexError, ParseError) as exc:
        raise PddlError(f"{what}: {exc}") from exc
    forms = [_strip(e) for e in exprs]
    if len(forms) != 1 or not isinstance(forms[0], list):
        raise PddlError(f"{what}: expected a single (define ...) form")
    return forms[0]


def _is_var(item: Tree) -> bool:
    return isinstance(item, str) and item.startswith("?")


def _typed_list(items: List[Tree], what: str) -> List[Tuple[str, str]]:
    """Parse `a b - t c - u` into [(a,t),(b,t),(c,u)]; untyped means object."""
    out: List[Tuple[str, str]] = []
    pending: List[str] = []
    i = 0
    while i < len(items):
        item = items[i]
        if item == "-":
            if not pending:
                raise PddlError(f"{what}: dangling '-' in typed list")
            if i + 1 >= len(items) or not isinstance(items[i + 1], str):
                raise PddlError(f"{what}: '-' must be followed by a type name")
            ty = items[i + 1]
            out.extend((name, ty) for name in pending)
            pending = []
            i += 2
            continue
        if not isinstance(item, str):
            raise PddlError(f"{what}: unexpected {item!r} in typed list")
        pending.append(item)
        i += 1
    out.extend((name, "object") for name in pending)
    return out


def _section_map(forms: List[Tree], what: str) -> List[Tuple[str, list]]:
    out = []
    for form in forms:
        if not isinstance(form, list) or not form or not isinstance(form[0], str):
            raise PddlError(f"{what}: expected (:section ...) forms")
        out.append((form[0], form))
    return out


def _check_atom_shape(form: Tree, what: str) -> Tuple[str, ...]:
    if not isinstance(form, list) or not form:
        raise PddlError(f"{what}: expected a predicate application")
    for part in form:
        if not isinstance(part, str):
            raise PddlError(f"{what}: atom arguments must be names or variables")
    if _is_var(form[0]):
        raise PddlError(f"{what}: predicate name cannot be a variable")
    return tuple(form)


def _parse_literal(form: Tree, what: str) -> Literal:
    if isinstance(form, list) and form and form[0] == "not":
        if len(form) != 2:
            raise PddlError(f"{what}: (not ...) takes exactly one atom")
        return Literal(False, _check_atom_shape(form[1], what))
    return Literal(True, _check_atom_shape(form, what))


def _conjuncts(form: Tree) -> List[Tree]:
    if isinstance(form, list) and form and form[0] == "and":
        return list(form[1:])
    if isinstance(form, list) and not form:
        return []
    return [form]


def parse_condition_text(text: str, what: str = "condition") -> Tuple[Literal, ...]:
    """Parse a ground formula like ``(and (on a b) (not (clear a)))`` into
    literals. Typing is checked later, against an instance."""
    try:
        exprs = parse(text)
    except (LexError, ParseError) as exc:
        raise PddlError(f"{what}: {exc}") from exc
    forms = [_strip(e) for e in exprs]
    if len(forms) != 1 or not isinstance(forms[0], list):
        raise PddlError(f"{what}: expected a single parenthesized formula")
    return tuple(_parse_literal(part, what) for part in _conjuncts(forms[0]))


def parse_action_text(text: str) -> Tuple[str, Tuple[str, ...]]:
    """Parse ``(pick-up a)`` into a name and argument tuple."""
    try:
        exprs = parse(text)
    except (LexError, ParseError) as exc:
        raise PddlError(f"action: {exc}") from exc
    forms = [_strip(e) for e in exprs]
    if len(forms) != 1:
        raise PddlError("action: expected a single parenthesized action")
    atom = _check_atom_shape(forms[0], "action")
    return atom[0], atom[1:]


class _DomainReader:
    def __init__(self, name: str):
        self.name = name
        self.requirements: List[str] = []
        self.types: Dict[str, str] = {}
        self.predicates: Dict[str, Predicate] = {}
        self.functions: Dict[str, FunctionDecl] = {}
        self.actions: Dict[str, Action] = {}

    # --- sections ---------------------------------------------------------

    def read_requirements(self, form: list) -> None:
        for req in form[1:]:
            if not isinstance(req, str):
                raise PddlError(f"domain '{self.name}': bad requirement {req!r}")
            if req == ":fluents":
                req = ":numeric-fluents"
            if req not in SUPPORTED_REQUIREMENTS:
                raise PddlError(
                    f"domain '{self.name}': unsupported requirement '{req}'"
                )
            if req not in self.requirements:
                self.requirements.append(req)

    def read_types(self, form: list) -> None:
        for name, parent in _typed_list(form[1:], f"domain '{self.name}' types"):
            self.types[name] = parent
        # a parent used only on the right side is still a type
        for parent in [p for p in self.types.values() if p != "object"]:
            self.types.setdefault(parent, "object")
        for name in self.types:
            cur, seen = name, set()
            while cur != "object":
                if cur in seen:
                    raise PddlError(
                        f"domain '{self.name}': type cycle through '{name}'"
                    )
                seen.add(cur)
                cur = self.types.get(cur, "object")

    def _check_type(self, ty: str, what: str) -> None:
        if ty != "object" and ty not in self.types:
            raise PddlError(f"{what}: undeclared type '{ty}'")

    def read_predicates(self, form: list) -> None:
        for decl in form[1:]:
            if not isinstance(decl, list) or not decl or _is_var(decl[0]):
                raise PddlError(
                    f"domain '{self.name}': bad predicate declaration"
                )
            name = decl[0]
            if name in self.predicates:
                raise PddlError(
                    f"domain '{self.name}': duplicate predicate '{name}'"
                )
            params = _typed_list(decl[1:], f"predicate '{name}'")
            for var, ty in params:
                if not _is_var(var):
                    raise PddlError(
                        f"predicate '{name}': parameters must be variables"
                    )
                self._check_type(ty, f"predicate '{name}'")
            self.predicates[name] = Predicate(
                name, tuple(ty for _, ty in params)
            )

    def read_functions(self, form: list) -> None:
        for decl in form[1:]:
            if decl == "-" or decl == "number":
                continue  # trailing "- number" annotation
            if not isinstance(decl, list) or not decl:
                raise PddlError(f"domain '{self.name}': bad function declaration")
            name = decl[0]
            if name in self.functions:
                raise PddlError(
                    f"domain '{self.name}': duplicate function '{name}'"
                )
            params = _typed_list(decl[1:], f"function '{name}'")
            for var, ty in params:
                if not _is_var(var):
                    raise PddlError(
                        f"function '{name}': parameters must be variables"
                    )
                self._check_type(ty, f"function '{name}'")
            self.functions[name] = FunctionDecl(
                name, tuple(ty for _, ty in params)
            )

    # --- actions ----------------------------------------------------------

    def _keyword_pairs(self, form: list, what: str) -> Dict[str, Tree]:
        pairs: Dict[str, Tree] = {}
        i = 0
        while i < len(form):
            key = form[i]
            if not isinstance(key, str) or not key.startswith(":"):
                raise PddlError(f"{what}: expected :keyword, got {key!r}")
            if i + 1 >= len(form):
                raise PddlError(f"{what}: {key} is missing its value")
            if key in pairs:
                raise PddlError(f"{what}: duplicate {key}")
            pairs[key] = form[i + 1]
            i += 2
        return pairs

    def _params(self, form: Tree, what: str) -> Tuple[Tuple[str, str], ...]:
        if not isinstance(form, list):
            raise PddlError(f"{what}: :parameters must be a list")
        params = _typed_list(form, what)
        seen = set()
        for var, ty in params:
            if not _is_var(var):
                raise PddlError(f"{what}: parameter '{var}' is not a variable")
            if var in seen:
                raise PddlError(f"{what}: duplicate parameter '{var}'")
            seen.add(var)
            self._check_type(ty, what)
        return tuple(params)

    def _check_literal(
        self, lit: Literal, params: Dict[str, str], what: str
    ) -> None:
        name = lit.atom[0]
        pred = self.predicates.get(name)
        if pred is None:
            raise PddlError(f"{what}: undeclared predicate '{name}'")
        if len(lit.atom) - 1 != len(pred.param_types):
            raise PddlError(
                f"{what}: predicate '{name}' takes {len(pred.param_types)} "
                f"arguments, got {len(lit.atom) - 1}"
            )
        for arg, expected in zip(lit.atom[1:], pred.param_types):
            if _is_var(arg):
                if arg not in params:
                    raise PddlError(f"{what}: unbound variable '{arg}'")
                actual = params[arg]
                if not self._subtype(actual, expected):
                    raise PddlError(
                        f"{what}: argument '{arg}' of '{name}' has type "
                        f"'{actual}', expected '{expected}'"
                    )
            else:
                raise PddlError(
                    f"{what}: constants are not allowed inside actions "
                    f"(found '{arg}')"
                )

    def _subtype(self, child: str, ancestor: str) -> bool:
        if ancestor == "object":
            return True
        cur = child
        while cur != "object":
            if cur == ancestor:
                return True
            cur = self.types.get(cur, "object")
        return False

    def _classical_effects(
        self, form: Tree, params: Dict[str, str], what: str
    ) -> Tuple[Literal, ...]:
        out = []
        for part in _conjuncts(form):
            lit = _parse_literal(part, what)
            self._check_literal(lit, params, what)
            out.append(lit)
        return tuple(out)

    def read_action(self, form: list) -> None:
        if len(form) < 2 or not isinstance(form[1], str):
            raise PddlError(f"domain '{self.name}': action without a name")
        name = form[1]
        what = f"action '{name}'"
        if name in self.actions:
            raise PddlError(f"domain '{self.name}': duplicate action '{name}'")
        pairs = self._keyword_pairs(form[2:], what)
        params = self._params(pairs.get(":parameters", []), what)
        pmap = dict(params)

        conds = []
        for part in _conjuncts(pairs.get(":precondition", [])):
            lit = _parse_literal(part, what)
            self._check_literal(lit, pmap, what)
            conds.append(lit)
        effects = self._classical_effects(pairs.get(":effect", []), pmap, what)
        self.actions[name] = Action(
            name=name,
            params=params,
            duration=Duration(constant=0.0),
            conditions={AT_START: tuple(conds), OVER_ALL: (), AT_END: ()},
            effects={AT_START: (), AT_END: effects},
            durative=False,
        )

    def _duration(self, form: Tree, pmap: Dict[str, str], what: str) -> Duration:
        if (
            not isinstance(form, list)
            or len(form) != 3
            or form[0] != "="
            or form[1] != "?duration"
        ):
            raise PddlError(f"{what}: :duration must be (= ?duration <value>)")
        value = form[2]
        if isinstance(value, (int, float)):
            return Duration(constant=float(value))
        if isinstance(value, list) and value and isinstance(value[0], str):
            fn = self.functions.get(value[0])
            if fn is None:
                raise PddlError(f"{what}: undeclared function '{value[0]}'")
            args = value[1:]
            if len(args) != len(fn.param_types):
                raise PddlError(
                    f"{what}: function '{value[0]}' takes "
                    f"{len(fn.param_types)} arguments, got {len(args)}"
                )
            for arg in args:
                if not (_is_var(arg) and arg in pmap):
                    raise PddlError(f"{what}: unbound variable in duration")
            return Duration(fluent=tuple([value[0]] + args))
        raise PddlError(f"{what}: duration must be a number or function value")

    def _timed(self, form: Tree, what: str) -> Tuple[str, Tree]:
        if isinstance(form, list) and len(form) == 3 and form[0] == "at":
            if form[1] == "start":
                return AT_START, form[2]
            if form[1] == "end":
                return AT_END, form[2]
            raise PddlError(f"{what}: (at ...) must say start or end")
        if isinstance(form, list) and len(form) == 3 and form[0] == "over":
            if form[1] == "all":
                return OVER_ALL, form[2]
            raise PddlError(f"{what}: (over ...) must say all")
        raise PddlError(
            f"{what}: durative conditions/effects need (at start ...), "
            f"(at end ...) or (over all ...) wrappers"
        )

    def _numeric_effect(
        self, form: list, pmap: Dict[str, str], what: str
    ) -> NumericEffect:
        op = {"assign": "assign", "increase": "increase", "decrease": "decrease"}[
            form[0]
        ]
        if len(form) != 3 or not isinstance(form[1], list) or not form[1]:
            raise PddlError(f"{what}: bad numeric effect")
        fn_name = form[1][0]
        fn = self.functions.get(fn_name)
        if fn is None:
            raise PddlError(f"{what}: undeclared function '{fn_name}'")
        for arg in form[1][1:]:
            if not (_is_var(arg) and arg in pmap):
                raise PddlError(f"{what}: unbound variable in numeric effect")
        value = form[2]
        if isinstance(value, (int, float)):
            value = float(value)
        elif isinstance(value, list) and value and value[0] in self.functions:
            value = tuple(value)
        else:
            raise PddlError(f"{what}: numeric effect value must be a number "
                            f"or function value")
        return NumericEffect(op, tuple(form[1]), value)

    def read_durative_action(self, form: list) -> None:
        if ":durative-actions" not in self.requirements:
            raise PddlError(
                f"domain '{self.name}': durative action without "
                f":durative-actions requirement"
            )
        if len(form) < 2 or not isinstance(form[1], str):
            raise PddlError(f"domain '{self.name}': action without a name")
        name = form[1]
        what = f"durative action '{name}'"
        if name in self.actions:
            raise PddlError(f"domain '{self.name}': duplicate action '{name}'")
        pairs = self._keyword_pairs(form[2:], what)
        params = self._params(pairs.get(":parameters", []), what)
        pmap = dict(params)
        duration = self._duration(pairs.get(":duration"), pmap, what)

        conds: Dict[str, List[Literal]] = {AT_START: [], OVER_ALL: [], AT_END: []}
        for part in _conjuncts(pairs.get(":condition", [])):
            phase, inner = self._timed(part, what)
            lit = _parse_literal(inner, what)
            self._check_literal(lit, pmap, what)
            conds[phase].append(lit)

        effects: Dict[str, List[object]] = {AT_START: [], AT_END: []}
        for part in _conjuncts(pairs.get(":effect", [])):
            phase, inner = self._timed(part, what)
            if phase == OVER_ALL:
                raise PddlError(f"{what}: effects cannot be (over all ...)")
            if (
                isinstance(inner, list)
                and inner
                and inner[0] in ("assign", "increase", "decrease")
            ):
                effects[phase].append(self._numeric_effect(inner, pmap, what))
                continue
            lit = _parse_literal(inner, what)
            self._check_literal(lit, pmap, what)
            effects[phase].append(lit)

        self.actions[name] = Action(
            name=name,
            params=params,
            duration=duration,
            conditions={k: tuple(v) for k, v in conds.items()},
            effects={k: tuple(v) for k, v in effects.items()},
            durative=True,
        )


def parse_domain(text: str) -> Domain:
    form = _parse_source(text, "domain")
    if len(form) < 2 or form[0] != "define":
        raise PddlError("domain: expected (define (domain ...) ...)")
    head = form[1]
    if not (isinstance(head, list) and len(head) == 2 and head[0] == "domain"):
        raise PddlError("domain: expected (domain <name>) after define")
    reader = _DomainReader(head[1])

    sections = _section_map(form[2:], f"domain '{reader.name}'")
    dispatch = {
        ":requirements": reader.read_requirements,
        ":types": reader.read_types,
        ":predicates": reader.read_predicates,
        ":functions": reader.read_functions,
        ":action": reader.read_action,
        ":durative-action": reader.read_durative_action,
    }
    for key, section in sections:
        handler = dispatch.get(key)
        if handler is None:
            raise PddlError(
                f"domain '{reader.name}': unsupported section '{key}'"
            )
        handler(section)

    return Domain(
        name=reader.name,
        requirements=tuple(reader.requirements),
        types=reader.types,
        predicates=reader.predicates,
        functions=reader.functions,
        actions=reader.actions,
    )


def parse_problem(text: str, domain: Domain) -> Problem:
    form = _parse_source(text, "problem")
    if len(form) < 2 or form[0] != "define":
        raise PddlError("problem: expected (define (problem ...) ...)")
    head = form[1]
    if not (isinstance(head, list) and len(head) == 2 and head[0] == "problem"):
        raise PddlError("problem: expected (problem <name>) after define")
    name = head[1]
    what = f"problem '{name}'"

    domain_name: Optional[str] = None
    objects: Dict[str, str] = {}
    init: List[Tuple[str, ...]] = []
    numeric: List[Tuple[Tuple[str, ...], float]] = []
    goal: List[Literal] = []

    def check_ground_atom(atom: Tuple[str, ...], where: str) -> None:
        pred = domain.predicates.get(atom[0])
        if pred is None:
            raise PddlError(f"{where}: undeclared predicate '{atom[0]}'")
        if len(atom) - 1 != len(pred.param_types):
            raise PddlError(
                f"{where}: predicate '{atom[0]}' takes "
                f"{len(pred.param_types)} arguments, got {len(atom) - 1}"
            )
        for arg, expected in zip(atom[1:], pred.param_types):
            if _is_var(arg):
                raise PddlError(f"{where}: variables are not allowed here")
            ty = objects.get(arg)
            if ty is None:
                raise PddlError(f"{where}: unknown object '{arg}'")
            if not domain.is_subtype(ty, expected):
                raise PddlError(
                    f"{where}: object '{arg}' has type '{ty}', "
                    f"'{atom[0]}' expects '{expected}'"
                )

    for key, section in _section_map(form[2:], what):
        if key == ":domain":
            if len(section) != 2 or not isinstance(section[1], str):
                raise PddlError(f"{what}: bad (:domain ...) section")
            domain_name = section[1]
            if domain_name != domain.name:
                raise PddlError(
                    f"{what}: references domain '{domain_name}', "
                    f"loaded domain is '{domain.name}'"
                )
        elif key == ":objects":
            for obj, ty in _typed_list(section[1:], f"{what} objects"):
                if _is_var(obj):
                    raise PddlError(f"{what}: object '{obj}' is not a name")
                if obj in objects:
                    raise PddlError(f"{what}: duplicate object '{obj}'")
                if ty != "object" and ty not in domain.types:
                    raise PddlError(f"{what}: undeclared type '{ty}'")
                objects[obj] = ty
        elif key == ":init":
            for item in section[1:]:
                if (
                    isinstance(item, list)
                    and len(item) == 3
                    and item[0] == "="
                ):
                    fn_form, value = item[1], item[2]
                    if not isinstance(value, (int, float)):
                        raise PddlError(f"{what}: (= ...) needs a number")
                    if not (isinstance(fn_form, list) and fn_form):
                        raise PddlError(f"{what}: bad function in init")
                    fn = domain.functions.get(fn_form[0])
                    if fn is None:
                        raise PddlError(
                            f"{what}: undeclared function '{fn_form[0]}'"
                        )
                    if len(fn_form) - 1 != len(fn.param_types):
                        raise PddlError(
                            f"{what}: function '{fn_form[0]}' takes "
                            f"{len(fn.param_types)} arguments"
                        )
                    for arg in fn_form[1:]:
                        if arg not in objects:
                            raise PddlError(
                                f"{what}: unknown object '{arg}' in init"
                            )
                    numeric.append((tuple(fn_form), float(value)))
                    continue
                atom = _check_atom_shape(item, f"{what} init")
                check_ground_atom(atom, f"{what} init")
                init.append(atom)
        elif key == ":goal":
            if len(section) != 2:
                raise PddlError(f"{what}: (:goal ...) takes one formula")
            for part in _conjuncts(section[1]):
                lit = _parse_literal(part, f"{what} goal")
                check_ground_atom(lit.atom, f"{what} goal")
                goal.append(lit)
        else:
            raise PddlError(f"{what}: unsupported section '{key}'")

    if domain_name is None:
        raise PddlError(f"{what}: missing (:domain ...) section")
    return Problem(
        name=name,
        domain_name=domain_name,
        objects=objects,
        init=tuple(init),
        numeric_init=tuple(numeric),
        goal=tuple(goal),
    )
