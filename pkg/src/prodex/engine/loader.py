"""Load rule-language source into a kernel.

Reloading the same file is idempotent: a construct whose printed form
matches the already-defined one is skipped, so plugins can be unloaded
and loaded again without tripping redefinition errors.
"""

from __future__ import annotations

import os

from prodex.engine.kernel import EngineError, Kernel
from prodex.engine.model import SlotDef
from prodex.lang.constructs import Call, FactsDecl, RuleDecl, TemplateDecl, analyze_one
from prodex.lang.sexpr import ListExpr, parse, to_text


def load_text(kernel: Kernel, text: str, origin: str = "<string>") -> int:
    """Define every construct in `text`; returns the number applied
    (idempotent re-definitions count as applied)."""
    count = 0
    for expr in parse(text):
        construct = analyze_one(expr)
        source = to_text(expr)
        if isinstance(construct, TemplateDecl):
            existing = kernel.templates.get(construct.name)
            if existing is not None:
                if existing.source != source:
                    raise EngineError(
                        f"{origin}: template '{construct.name}' already defined differently"
                    )
            else:
                slots = [SlotDef(s.name, s.kind) for s in construct.slots]
                kernel.define_template(construct.name, slots, source)
        elif isinstance(construct, RuleDecl):
            existing_rule = kernel.rules.get(construct.name)
            if existing_rule is not None:
                if existing_rule.source != source:
                    raise EngineError(
                        f"{origin}: rule '{construct.name}' already defined differently"
                    )
            else:
                kernel.define_rule(construct, source)
        elif isinstance(construct, FactsDecl):
            existing_facts = kernel.deffacts.get(construct.name)
            if existing_facts is not None:
                if existing_facts[1] != source:
                    raise EngineError(
                        f"{origin}: deffacts '{construct.name}' already defined differently"
                    )
            else:
                kernel.add_deffacts(construct.name, list(construct.literals), source)
        else:
            assert isinstance(construct, Call)
            kernel.evaluator.call(construct.name, list(construct.args), {})
        count += 1
    return count


def load_file(kernel: Kernel, path: str) -> int:
    with open(path, "r", encoding="utf-8") as handle:
        text = handle.read()
    return load_text(kernel, text, origin=os.path.basename(path))


def load_constructs(kernel: Kernel, text: str) -> int:
    return load_text(kernel, text)
