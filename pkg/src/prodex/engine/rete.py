"""Rete match network.

Alpha memories are shared across rules and keyed by (template, ordered,
arity, literal tests). Each rule compiles to a linear chain of join /
negative / test nodes ending in a production node; tokens accumulate one
matched fact per positive pattern plus the variable bindings gathered so
far. Retraction cascades through per-fact token and negative-entry
backlinks, so no rescan is ever needed.
"""

from __future__ import annotations

from typing import Callable, Optional

from prodex.engine.model import (
    CompiledCE,
    CompiledNot,
    CompiledPattern,
    CompiledTest,
    Fact,
    RuleDef,
)
from prodex.values import FactRef, Value, values_equal


def extract_bindings(pattern: CompiledPattern, fact: Fact) -> Optional[dict[str, Value]]:
    """Bind the pattern's variables from a fact that already passed the
    alpha tests; None when a repeated variable binds inconsistently."""
    out: dict[str, Value] = {}
    for key, var in pattern.var_binds:
        value = fact.values[key]
        if var in out:
            if not values_equal(out[var], value):
                return None
        else:
            out[var] = value
    return out


def merge_bindings(
    base: dict[str, Value], delta: dict[str, Value]
) -> Optional[dict[str, Value]]:
    for var, value in delta.items():
        if var in base and not values_equal(base[var], value):
            return None
    merged = dict(base)
    merged.update(delta)
    return merged


class AlphaMemory:
    __slots__ = ("key", "facts", "successors")

    def __init__(self, key: tuple):
        self.key = key
        self.facts: dict[int, Fact] = {}
        self.successors: list = []  # JoinNode | NegNode

    def activate(self, fact: Fact) -> None:
        self.facts[fact.id] = fact
        fact.amems.append(self)
        for node in list(self.successors):
            node.on_fact(fact)

    def remove(self, fact: Fact) -> None:
        self.facts.pop(fact.id, None)
        for node in list(self.successors):
            node.on_fact_removed(fact)


class Token:
    __slots__ = ("memory", "parent", "fact", "bindings", "children")

    def __init__(
        self,
        memory: "BetaMemory",
        parent: Optional["Token"],
        fact: Optional[Fact],
        bindings: dict[str, Value],
    ):
        self.memory = memory
        self.parent = parent
        self.fact = fact
        self.bindings = bindings
        self.children: list["Token"] = []

    def fact_ids(self) -> tuple[int, ...]:
        ids: list[int] = []
        tok: Optional[Token] = self
        while tok is not None:
            if tok.fact is not None:
                ids.append(tok.fact.id)
            tok = tok.parent
        ids.reverse()
        return tuple(ids)


class BetaMemory:
    __slots__ = ("tokens", "children")

    def __init__(self):
        self.tokens: list[Token] = []
        self.children: list = []  # JoinNode | NegNode | TestNode | ProductionNode

    def left_activate(
        self, parent: Optional[Token], fact: Optional[Fact], bindings: dict[str, Value]
    ) -> Token:
        token = Token(self, parent, fact, bindings)
        self.tokens.append(token)
        if parent is not None:
            parent.children.append(token)
        if fact is not None:
            fact.tokens.append(token)
        for child in list(self.children):
            child.on_token(token)
        return token


def delete_token(token: Token) -> None:
    while token.children:
        delete_token(token.children[-1])
    memory = token.memory
    if token in memory.tokens:
        memory.tokens.remove(token)
    for child in list(memory.children):
        child.on_token_removed(token)
    if token.fact is not None and token in token.fact.tokens:
        token.fact.tokens.remove(token)
    if token.parent is not None and token in token.parent.children:
        token.parent.children.remove(token)


class JoinNode:
    __slots__ = ("parent", "amem", "pattern", "out")

    def __init__(self, parent: BetaMemory, amem: AlphaMemory, pattern: CompiledPattern):
        self.parent = parent
        self.amem = amem
        self.pattern = pattern
        self.out = BetaMemory()
        parent.children.append(self)
        amem.successors.append(self)

    def _try(self, token: Token, fact: Fact) -> None:
        delta = extract_bindings(self.pattern, fact)
        if delta is None:
            return
        merged = merge_bindings(token.bindings, delta)
        if merged is None:
            return
        if self.pattern.fact_var is not None:
            merged[self.pattern.fact_var] = FactRef(fact.id)
        self.out.left_activate(token, fact, merged)

    def on_token(self, token: Token) -> None:
        for fact in list(self.amem.facts.values()):
            self._try(token, fact)

    def on_token_removed(self, token: Token) -> None:
        pass

    def on_fact(self, fact: Fact) -> None:
        for token in list(self.parent.tokens):
            self._try(token, fact)

    def on_fact_removed(self, fact: Fact) -> None:
        pass  # handled by the token cascade


class NegEntry:
    __slots__ = ("node", "token", "results", "out_token")

    def __init__(self, node: "NegNode", token: Token):
        self.node = node
        self.token = token
        self.results: list[Fact] = []
        self.out_token: Optional[Token] = None


class NegNode:
    """Propagates a token only while no fact in the alpha memory joins
    consistently with it."""

    __slots__ = ("parent", "amem", "pattern", "out", "entries")

    def __init__(self, parent: BetaMemory, amem: AlphaMemory, pattern: CompiledPattern):
        self.parent = parent
        self.amem = amem
        self.pattern = pattern
        self.out = BetaMemory()
        self.entries: dict[int, NegEntry] = {}  # id(token) -> entry
        parent.children.append(self)
        amem.successors.append(self)

    def _joins(self, token: Token, fact: Fact) -> bool:
        delta = extract_bindings(self.pattern, fact)
        if delta is None:
            return False
        return merge_bindings(token.bindings, delta) is not None

    def on_token(self, token: Token) -> None:
        entry = NegEntry(self, token)
        self.entries[id(token)] = entry
        for fact in self.amem.facts.values():
            if self._joins(token, fact):
                entry.results.append(fact)
                fact.neg_entries.append(entry)
        if not entry.results:
            entry.out_token = self.out.left_activate(token, None, token.bindings)

    def on_token_removed(self, token: Token) -> None:
        entry = self.entries.pop(id(token), None)
        if entry is None:
            return
        for fact in entry.results:
            if entry in fact.neg_entries:
                fact.neg_entries.remove(entry)
        # out_token, if any, dies with the parent token cascade

    def on_fact(self, fact: Fact) -> None:
        for entry in list(self.entries.values()):
            if self._joins(entry.token, fact):
                entry.results.append(fact)
                fact.neg_entries.append(entry)
                if len(entry.results) == 1 and entry.out_token is not None:
                    out = entry.out_token
                    entry.out_token = None
                    delete_token(out)

    def on_fact_removed(self, fact: Fact) -> None:
        pass  # per-entry cleanup runs off the fact's neg_entries backlinks

    def entry_unblocked(self, entry: NegEntry) -> None:
        if not entry.results and entry.out_token is None and id(entry.token) in self.entries:
            entry.out_token = self.out.left_activate(entry.token, None, entry.token.bindings)


class TestNode:
    __slots__ = ("parent", "test_fn", "out")

    def __init__(self, parent: BetaMemory, test_fn: Callable[[dict[str, Value]], bool]):
        self.parent = parent
        self.test_fn = test_fn
        self.out = BetaMemory()
        parent.children.append(self)

    def on_token(self, token: Token) -> None:
        if self.test_fn(token.bindings):
            self.out.left_activate(token, None, token.bindings)

    def on_token_removed(self, token: Token) -> None:
        pass


class ProductionNode:
    __slots__ = ("parent", "rule", "on_match", "on_unmatch")

    def __init__(
        self,
        parent: BetaMemory,
        rule: RuleDef,
        on_match: Callable[[RuleDef, Token], None],
        on_unmatch: Callable[[RuleDef, Token], None],
    ):
        self.parent = parent
        self.rule = rule
        self.on_match = on_match
        self.on_unmatch = on_unmatch
        parent.children.append(self)

    def on_token(self, token: Token) -> None:
        self.on_match(self.rule, token)

    def on_token_removed(self, token: Token) -> None:
        self.on_unmatch(self.rule, token)


class ReteNetwork:
    def __init__(self, facts_source: Optional[Callable[[], "list[Fact]"]] = None):
        self.top = BetaMemory()
        self.dummy = self.top.left_activate(None, None, {})
        self.alpha: dict[tuple, AlphaMemory] = {}
        # (template, ordered) -> memories, for assert-time routing
        self.by_template: dict[tuple[str, bool], list[AlphaMemory]] = {}
        self._facts_source = facts_source

    def alpha_memory(self, pattern: CompiledPattern) -> AlphaMemory:
        key = (pattern.template, pattern.ordered, pattern.arity, pattern.literal_tests)
        mem = self.alpha.get(key)
        if mem is None:
            mem = AlphaMemory(key)
            self.alpha[key] = mem
            self.by_template.setdefault((pattern.template, pattern.ordered), []).append(mem)
            # backfill from facts asserted before this memory existed; no
            # successors are attached yet so nothing propagates here
            if self._facts_source is not None:
                for fact in self._facts_source():
                    if (
                        fact.template == pattern.template
                        and fact.ordered == pattern.ordered
                        and self._alpha_passes(mem, fact)
                    ):
                        mem.facts[fact.id] = fact
                        fact.amems.append(mem)
        return mem

    def _alpha_passes(self, mem: AlphaMemory, fact: Fact) -> bool:
        _, _, arity, literal_tests = mem.key
        if arity is not None and fact.arity() != arity:
            return False
        for key, literal in literal_tests:
            if key not in fact.values or not values_equal(fact.values[key], literal):
                return False
        return True

    def add_fact(self, fact: Fact) -> None:
        for mem in self.by_template.get((fact.template, fact.ordered), []):
            if self._alpha_passes(mem, fact):
                mem.activate(fact)

    def remove_fact(self, fact: Fact) -> None:
        for mem in list(fact.amems):
            mem.remove(fact)
        fact.amems.clear()
        while fact.tokens:
            delete_token(fact.tokens[-1])
        # facts blocking negative nodes: unblocking re-propagates
        while fact.neg_entries:
            entry = fact.neg_entries.pop()
            if fact in entry.results:
                entry.results.remove(fact)
            entry.node.entry_unblocked(entry)

    def add_production(
        self,
        rule: RuleDef,
        test_compiler: Callable[[CompiledTest], Callable[[dict[str, Value]], bool]],
        on_match: Callable[[RuleDef, Token], None],
        on_unmatch: Callable[[RuleDef, Token], None],
    ) -> None:
        """Compile the rule into a node chain and seed it from the facts
        already present in the shared alpha memories."""
        memory = self.top
        first_nodes: list = []
        for ce in rule.conditions:
            if isinstance(ce, CompiledPattern):
                node = JoinNode(memory, self.alpha_memory(ce), ce)
            elif isinstance(ce, CompiledNot):
                node = NegNode(memory, self.alpha_memory(ce.pattern), ce.pattern)
            else:
                node = TestNode(memory, test_compiler(ce))
            if memory is self.top:
                first_nodes.append(node)
            memory = node.out
        ProductionNode(memory, rule, on_match, on_unmatch)
        for node in first_nodes:
            node.on_token(self.dummy)
