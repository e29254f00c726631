"""Runtime data model for the rule engine.

Facts carry bookkeeping links into the Rete network (tokens they support,
negative-join entries they block) so retraction can cascade without a
global rescan.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any, Optional, Union

from prodex.lang.sexpr import SExpr
from prodex.values import Value, ValueKind

if TYPE_CHECKING:
    from prodex.engine.rete import NegEntry, Token


@dataclass(frozen=True)
class SlotDef:
    name: str
    kind: Optional[ValueKind] = None


@dataclass(frozen=True)
class TemplateDef:
    name: str
    slots: tuple[SlotDef, ...]
    source: str = ""

    def slot(self, name: str) -> Optional[SlotDef]:
        for s in self.slots:
            if s.name == name:
                return s
        return None


class Fact:
    """A stored fact. Ordered facts use positional keys "0", "1", ...;
    template facts use slot names. `seq` doubles as the recency key."""

    __slots__ = ("id", "template", "ordered", "values", "seq", "tokens", "neg_entries", "amems")

    def __init__(self, fact_id: int, template: str, ordered: bool, values: dict[str, Value]):
        self.id = fact_id
        self.template = template
        self.ordered = ordered
        self.values = values
        self.seq = fact_id
        self.tokens: list["Token"] = []
        self.neg_entries: list["NegEntry"] = []
        self.amems: list[Any] = []

    def arity(self) -> int:
        return len(self.values)

    def __repr__(self) -> str:
        return f"<Fact f-{self.id} {self.template}>"


# compiled condition elements ------------------------------------------------


@dataclass(frozen=True)
class CompiledPattern:
    template: str
    ordered: bool
    arity: Optional[int]  # positional field count; None for template patterns
    literal_tests: tuple[tuple[str, Value], ...]  # (field key, literal)
    var_binds: tuple[tuple[str, str], ...]  # (field key, variable name)
    fact_var: Optional[str] = None


@dataclass(frozen=True)
class CompiledNot:
    pattern: CompiledPattern


@dataclass(frozen=True)
class CompiledTest:
    expr: SExpr


CompiledCE = Union[CompiledPattern, CompiledNot, CompiledTest]


@dataclass(frozen=True)
class RuleDef:
    name: str
    salience: int
    conditions: tuple[CompiledCE, ...]
    actions: tuple[SExpr, ...]
    def_index: int
    source: str = ""


@dataclass
class Activation:
    rule: RuleDef
    fact_ids: tuple[int, ...]
    bindings: dict[str, Value] = field(default_factory=dict)

    @property
    def recency(self) -> int:
        return max(self.fact_ids, default=0)

    def sort_key(self) -> tuple:
        """Higher key fires first. Beyond salience/recency/definition order
        the key compares matched-fact sequences so equal-recency activations
        of one rule still order deterministically."""
        desc = tuple(sorted(self.fact_ids, reverse=True))
        return (self.rule.salience, self.recency, -self.rule.def_index, desc, self.fact_ids)

    def key(self) -> tuple[str, tuple[int, ...]]:
        return (self.rule.name, self.fact_ids)


class Agenda:
    """Activation set with deterministic pop order."""

    def __init__(self):
        self._items: dict[tuple[str, tuple[int, ...]], Activation] = {}

    def add(self, activation: Activation) -> None:
        self._items[activation.key()] = activation

    def discard(self, key: tuple[str, tuple[int, ...]]) -> None:
        self._items.pop(key, None)

    def pop_top(self) -> Optional[Activation]:
        if not self._items:
            return None
        top = max(self._items.values(), key=Activation.sort_key)
        del self._items[top.key()]
        return top

    def snapshot(self) -> list[Activation]:
        return sorted(self._items.values(), key=Activation.sort_key, reverse=True)

    def __len__(self) -> int:
        return len(self._items)

    def __contains__(self, key: tuple[str, tuple[int, ...]]) -> bool:
        return key in self._items

    def clear(self) -> None:
        self._items.clear()
