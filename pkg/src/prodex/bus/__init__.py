"""In-process typed message bus: pub/sub topics and async services."""

from prodex.bus.bus import BusError, MessageBus
from prodex.bus.schema import FieldKind, MessageSchema, SchemaError, SchemaRegistry, builtin_registry

__all__ = [
    "BusError",
    "FieldKind",
    "MessageBus",
    "MessageSchema",
    "SchemaError",
    "SchemaRegistry",
    "builtin_registry",
]
