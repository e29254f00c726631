"""Slot value types shared by the rule engine and the message bus.

Facts carry five value kinds: symbols, strings, integers, floats and opaque
handles (references to externally owned data such as bus messages).  Symbols
are case-sensitive and print bare; strings print quoted with escapes.
"""

from __future__ import annotations

import enum
from typing import Union


class Symbol(str):
    """A bare symbol. Distinct from str so `foo` and `"foo"` never compare equal
    across kinds when formatting or type-checking slots."""

    __slots__ = ()

    def __repr__(self) -> str:
        return f"Symbol({str.__repr__(self)})"


class Handle:
    """Opaque reference to externally owned data (e.g. a bus message).

    Identity is the (namespace, id) pair; the engine never looks inside.
    """

    __slots__ = ("namespace", "id")

    def __init__(self, namespace: str, id: int):
        self.namespace = namespace
        self.id = id

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, Handle)
            and self.namespace == other.namespace
            and self.id == other.id
        )

    def __hash__(self) -> int:
        return hash((self.namespace, self.id))

    def __repr__(self) -> str:
        return f"<{self.namespace}:{self.id}>"


class FactRef(int):
    """A fact address: binds on the LHS via `?v <- (pattern)` and is accepted
    by retract. An int subtype so recency/bookkeeping code can treat it as the
    fact id directly."""

    __slots__ = ()

    def __repr__(self) -> str:
        return f"<fact-{int(self)}>"


Value = Union[Symbol, str, int, float, Handle]

TRUE = Symbol("TRUE")
FALSE = Symbol("FALSE")
NIL = Symbol("nil")


class ValueKind(enum.Enum):
    SYMBOL = "symbol"
    STRING = "string"
    INTEGER = "integer"
    FLOAT = "float"
    HANDLE = "handle"

    @classmethod
    def of(cls, value: Value) -> "ValueKind":
        if isinstance(value, Symbol):
            return cls.SYMBOL
        if isinstance(value, bool):
            # bools only appear transiently in expressions; facts store TRUE/FALSE symbols
            return cls.SYMBOL
        if isinstance(value, str):
            return cls.STRING
        if isinstance(value, FactRef):
            return cls.INTEGER
        if isinstance(value, int):
            return cls.INTEGER
        if isinstance(value, float):
            return cls.FLOAT
        if isinstance(value, Handle):
            return cls.HANDLE
        raise TypeError(f"not a slot value: {value!r}")


# Source-level type names accepted in slot declarations.
KIND_NAMES = {
    "SYMBOL": ValueKind.SYMBOL,
    "STRING": ValueKind.STRING,
    "INTEGER": ValueKind.INTEGER,
    "FLOAT": ValueKind.FLOAT,
    "EXTERNAL-ADDRESS": ValueKind.HANDLE,
}


def conforms(value: Value, kind: ValueKind) -> bool:
    """True if value is acceptable for a slot declared with `kind`.

    Integers are accepted where floats are declared (widened on store).
    """
    actual = ValueKind.of(value)
    if actual is kind:
        return True
    return kind is ValueKind.FLOAT and actual is ValueKind.INTEGER


def coerce(value: Value, kind: ValueKind) -> Value:
    if kind is ValueKind.FLOAT and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    if isinstance(value, bool):
        return TRUE if value else FALSE
    return value


def escape_string(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')


def format_value(value: Value) -> str:
    """Render a value the way it would appear in rule-language source."""
    if isinstance(value, Symbol):
        return str(value)
    if isinstance(value, bool):
        return "TRUE" if value else "FALSE"
    if isinstance(value, str):
        return f'"{escape_string(value)}"'
    if isinstance(value, Handle):
        return repr(value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def values_equal(a: Value, b: Value) -> bool:
    """Type-aware equality: 1 and 1.0 differ, as do `foo` and "foo"."""
    return ValueKind.of(a) is ValueKind.of(b) and a == b


def is_truthy(value: object) -> bool:
    """Expression truth: the symbol FALSE (and Python False/None) is false,
    everything else including nil and 0 is true."""
    if value is None:
        return False
    if isinstance(value, bool):
        return value
    if isinstance(value, Symbol):
        return value != FALSE
    return True
