"""Data model for the planning subset: domains, problems, ground actions, plans.

Atoms are plain tuples ``(predicate, arg, ...)`` of lowercase strings.
Variables keep their ``?`` prefix, so a ground atom is one containing no
string that starts with ``?``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterable, Optional, Tuple

AT_START = "at-start"
OVER_ALL = "over-all"
AT_END = "at-end"

COND_PHASES = (AT_START, OVER_ALL, AT_END)
EFFECT_PHASES = (AT_START, AT_END)

Atom = Tuple[str, ...]


class PddlError(Exception):
    """Parse or semantic failure in a domain, problem, plan, or request."""


@dataclass(frozen=True)
class Literal:
    positive: bool
    atom: Atom

    def substitute(self, binding: Dict[str, str]) -> "Literal":
        head = self.atom[0]
        args = tuple(binding.get(a, a) for a in self.atom[1:])
        return Literal(self.positive, (head,) + args)

    def __str__(self) -> str:
        inner = "(%s)" % " ".join(self.atom)
        return inner if self.positive else "(not %s)" % inner


@dataclass(frozen=True)
class NumericEffect:
    """assign / increase / decrease on a function value."""

    op: str
    function: Atom
    # either a constant or another function reference
    value: object

    def substitute(self, binding: Dict[str, str]) -> "NumericEffect":
        fn = (self.function[0],) + tuple(
            binding.get(a, a) for a in self.function[1:]
        )
        value = self.value
        if isinstance(value, tuple):
            value = (value[0],) + tuple(binding.get(a, a) for a in value[1:])
        return NumericEffect(self.op, fn, value)


@dataclass(frozen=True)
class Predicate:
    name: str
    param_types: Tuple[str, ...]


@dataclass(frozen=True)
class FunctionDecl:
    name: str
    param_types: Tuple[str, ...]


@dataclass(frozen=True)
class Duration:
    """Either a constant number of seconds or a function lookup."""

    constant: Optional[float] = None
    fluent: Optional[Atom] = None

    def substitute(self, binding: Dict[str, str]) -> "Duration":
        if self.fluent is None:
            return self
        fn = (self.fluent[0],) + tuple(
            binding.get(a, a) for a in self.fluent[1:]
        )
        return Duration(fluent=fn)


@dataclass(frozen=True)
class Action:
    name: str
    params: Tuple[Tuple[str, str], ...]
    duration: Duration
    conditions: Dict[str, Tuple[Literal, ...]]
    effects: Dict[str, Tuple[object, ...]]
    durative: bool = False

    def condition_predicates(self) -> Iterable[str]:
        for phase in COND_PHASES:
            for lit in self.conditions.get(phase, ()):
                yield lit.atom[0]

    def effect_predicates(self) -> Iterable[str]:
        for phase in EFFECT_PHASES:
            for eff in self.effects.get(phase, ()):
                if isinstance(eff, Literal):
                    yield eff.atom[0]


@dataclass
class Domain:
    name: str
    requirements: Tuple[str, ...]
    # type name -> parent type name; "object" is the implicit root
    types: Dict[str, str]
    predicates: Dict[str, Predicate]
    functions: Dict[str, FunctionDecl]
    actions: Dict[str, Action]

    def is_subtype(self, child: str, ancestor: str) -> bool:
        if ancestor == "object":
            return True
        cur = child
        seen = set()
        while cur is not None and cur not in seen:
            if cur == ancestor:
                return True
            seen.add(cur)
            cur = self.types.get(cur)
        return False


@dataclass
class Problem:
    name: str
    domain_name: str
    # object name -> type
    objects: Dict[str, str]
    init: Tuple[Atom, ...]
    numeric_init: Tuple[Tuple[Atom, float], ...]
    goal: Tuple[Literal, ...]


@dataclass(frozen=True)
class GroundAction:
    """A fully instantiated action with resolved duration."""

    name: str
    args: Tuple[str, ...]
    duration: float
    conditions: Dict[str, Tuple[Literal, ...]] = field(compare=False, hash=False)
    effects: Dict[str, Tuple[object, ...]] = field(compare=False, hash=False)

    @property
    def key(self) -> Tuple[str, ...]:
        return (self.name,) + self.args

    def __str__(self) -> str:
        if self.args:
            return "(%s %s)" % (self.name, " ".join(self.args))
        return "(%s)" % self.name


@dataclass(frozen=True)
class PlanStep:
    time: float
    action: GroundAction

    def __str__(self) -> str:
        return "%g: %s  [%g]" % (self.time, self.action, self.action.duration)


@dataclass
class Plan:
    steps: Tuple[PlanStep, ...]
    provenance: str = "planner"

    def __len__(self) -> int:
        return len(self.steps)


def format_atom(atom: Atom) -> str:
    return "(%s)" % " ".join(atom)
