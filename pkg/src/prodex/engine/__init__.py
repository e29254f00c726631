"""Forward-chaining rule engine: fact store, Rete matcher, agenda, actions."""

from prodex.engine.kernel import EngineError, Kernel, RuntimeActionError
from prodex.engine.loader import load_constructs, load_file, load_text
from prodex.engine.model import (
    Activation,
    Fact,
    RuleDef,
    SlotDef,
    TemplateDef,
)

__all__ = [
    "Activation",
    "EngineError",
    "Fact",
    "Kernel",
    "RuleDef",
    "RuntimeActionError",
    "SlotDef",
    "TemplateDef",
    "load_constructs",
    "load_file",
    "load_text",
]
