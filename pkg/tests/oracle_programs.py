"""Seeded random rule programs, rendered twice from one draw: as source
text for the engine under test and as structures for the naive matcher.

The subset sticks to what both sides interpret identically: symbol and
integer values, template + ordered facts, literal and variable slot
tests, not / test conditions, assert and retract-of-bound-address
actions. Programs may loop; runners cap firings.
"""

from __future__ import annotations

import random
from typing import Dict, List, Optional, Tuple

from oracle_naive import NNot, NPattern, NRule, NTest, NaiveEngine

SYMBOLS = ["red", "green", "blue", "ok", "hot"]
INTS = [0, 1, 2, 3, 4, 5]

OPS = {
    "eq": lambda x, y: x == y,
    "neq": lambda x, y: x != y,
    "<": lambda x, y: x < y,
    ">": lambda x, y: x > y,
    "<=": lambda x, y: x <= y,
    ">=": lambda x, y: x >= y,
}


class Program:
    def __init__(self):
        self.clp: List[str] = []
        self.naive = NaiveEngine()

    @property
    def text(self) -> str:
        return "\n".join(self.clp) + "\n"


def _fmt(value) -> str:
    return str(value)


def generate(seed: int) -> Program:
    rng = random.Random(seed)
    prog = Program()

    # templates: name -> [(slot, kind)]; kinds are "sym" | "int"
    templates: Dict[str, List[Tuple[str, str]]] = {}
    for t in range(rng.randint(1, 5)):
        name = f"tpl{t}"
        slots = [
            (f"s{i}", rng.choice(["sym", "int"]))
            for i in range(rng.randint(1, 4))
        ]
        templates[name] = slots
        decl = " ".join(
            "(slot %s (type %s))" % (s, "SYMBOL" if k == "sym" else "INTEGER")
            for s, k in slots
        )
        prog.clp.append(f"(deftemplate {name} {decl})")

    # ordered heads: name -> fixed arity with per-position kinds
    ordered: Dict[str, List[str]] = {}
    for o in range(rng.randint(0, 2)):
        ordered[f"ord{o}"] = [
            rng.choice(["sym", "int"]) for _ in range(rng.randint(1, 3))
        ]

    def rand_value(kind: str):
        return rng.choice(INTS if kind == "int" else SYMBOLS)

    # deffacts
    fact_lines: List[str] = []
    for _ in range(rng.randint(0, 30)):
        if ordered and rng.random() < 0.3:
            head = rng.choice(sorted(ordered))
            values = [rand_value(k) for k in ordered[head]]
            fact_lines.append("(%s %s)" % (head, " ".join(map(_fmt, values))))
            prog.naive.deffacts.append(
                (head, True, tuple((str(i), ("lit", v)) for i, v in enumerate(values)))
            )
        else:
            head = rng.choice(sorted(templates))
            pairs = [(s, rand_value(k)) for s, k in templates[head]]
            fact_lines.append(
                "(%s %s)" % (head, " ".join(f"({s} {_fmt(v)})" for s, v in pairs))
            )
            prog.naive.deffacts.append(
                (head, False, tuple((s, ("lit", v)) for s, v in pairs))
            )
    if fact_lines:
        prog.clp.append("(deffacts seed-facts %s)" % " ".join(fact_lines))

    # rules
    n_rules = rng.randint(1, 8)
    for r in range(n_rules):
        name = f"r{r}"
        salience = rng.choice([-2, -1, 0, 0, 0, 0, 1, 2])
        lhs_text: List[str] = []
        ces: List[object] = []
        bound: Dict[str, str] = {}  # var -> kind
        addr_vars: List[str] = []
        var_counter = [0]

        def fresh_var(kind: str) -> str:
            var_counter[0] += 1
            v = f"v{r}x{var_counter[0]}"
            bound[v] = kind
            return v

        def make_pattern(allow_addr: bool, require_link: bool) -> Tuple[str, NPattern]:
            """Draw per-key specs first, then render both forms. A linked
            pattern shares a previously bound variable or constrains a key
            to a literal, keeping joins selective."""
            use_ordered = bool(ordered) and rng.random() < 0.3
            if use_ordered:
                head = rng.choice(sorted(ordered))
                keys = [(str(i), k) for i, k in enumerate(ordered[head])]
            else:
                head = rng.choice(sorted(templates))
                keys = list(templates[head])
            reusable = dict(bound)  # vars visible before this pattern
            # ("lit", v) | ("reuse", var) | ("fresh", kind) | ("self", idx) | ("skip",)
            specs: List[tuple] = []
            fresh_at: List[Tuple[int, str]] = []  # (spec index, kind)
            for idx, (_, kind) in enumerate(keys):
                roll = rng.random()
                same_kind = [v for v, k in reusable.items() if k == kind]
                self_kind = [j for j, k in fresh_at if k == kind]
                if roll < (0.35 if use_ordered else 0.3):
                    specs.append(("lit", rand_value(kind)))
                elif roll < 0.5 and same_kind:
                    specs.append(("reuse", rng.choice(same_kind)))
                elif roll < 0.55 and self_kind:
                    specs.append(("self", rng.choice(self_kind)))
                elif use_ordered or roll < 0.85:
                    specs.append(("fresh", kind))
                    fresh_at.append((idx, kind))
                else:
                    specs.append(("skip",))
            if require_link and not any(s[0] in ("lit", "reuse") for s in specs):
                referenced = {s[1] for s in specs if s[0] == "self"}
                i = rng.choice([j for j in range(len(specs)) if j not in referenced])
                _, kind = keys[i]
                same_kind = [v for v, k in reusable.items() if k == kind]
                if same_kind and rng.random() < 0.6:
                    specs[i] = ("reuse", rng.choice(same_kind))
                else:
                    specs[i] = ("lit", rand_value(kind))

            tests: List[Tuple[str, object]] = []
            binds: List[Tuple[str, str]] = []
            parts: List[str] = []
            var_at: Dict[int, str] = {}
            for idx, ((key, kind), spec) in enumerate(zip(keys, specs)):
                if spec[0] == "lit":
                    tests.append((key, spec[1]))
                    rendered = _fmt(spec[1])
                elif spec[0] == "reuse":
                    binds.append((key, spec[1]))
                    rendered = f"?{spec[1]}"
                elif spec[0] == "self":
                    var = var_at[spec[1]]
                    binds.append((key, var))
                    rendered = f"?{var}"
                elif spec[0] == "fresh":
                    var = fresh_var(kind)
                    var_at[idx] = var
                    binds.append((key, var))
                    rendered = f"?{var}"
                else:
                    continue
                parts.append(rendered if use_ordered else f"({key} {rendered})")
            body = "(%s%s)" % (head, (" " + " ".join(parts)) if parts else "")
            pattern = NPattern(
                head, use_ordered, len(keys) if use_ordered else None,
                tuple(tests), tuple(binds),
            )
            fact_var = None
            if allow_addr and rng.random() < 0.4:
                fact_var = f"a{r}x{len(addr_vars)}"
                addr_vars.append(fact_var)
                body = f"?{fact_var} <- {body}"
                pattern = NPattern(
                    pattern.head, pattern.ordered, pattern.arity,
                    pattern.tests, pattern.binds, fact_var,
                )
            return body, pattern

        n_patterns = rng.choice([1, 1, 1, 2, 2, 2, 2, 3, 3])
        for p in range(n_patterns):
            body, pattern = make_pattern(allow_addr=True, require_link=p > 0)
            lhs_text.append(body)
            ces.append(pattern)

        if rng.random() < 0.45:
            body, pattern = make_pattern(allow_addr=False, require_link=False)
            # a not-CE may bind fresh variables internally, but they are
            # invisible downstream; drop them from the rule's scope
            for _, var in pattern.binds:
                if var.startswith(f"v{r}x"):
                    bound.pop(var, None)
            lhs_text.append(f"(not {body})")
            ces.append(NNot(pattern))

        int_vars = [v for v, k in bound.items() if k == "int"]
        if rng.random() < 0.4 and int_vars:
            op = rng.choice(sorted(OPS))
            left = rng.choice(int_vars)
            if rng.random() < 0.5 and len(int_vars) > 1:
                right = rng.choice([v for v in int_vars if v != left])
                lhs_text.append(f"(test ({op} ?{left} ?{right}))")
                fn = OPS[op]
                ces.append(NTest(lambda b, f=fn, l=left, q=right: f(b[l], b[q])))
            else:
                lit = rng.choice(INTS)
                lhs_text.append(f"(test ({op} ?{left} {lit}))")
                fn = OPS[op]
                ces.append(NTest(lambda b, f=fn, l=left, q=lit: f(b[l], q)))

        # heads this rule's own positive patterns watch; asserting into
        # them feeds the rule its own output and the store balloons
        own_heads = {ce.head for ce in ces if isinstance(ce, NPattern)}
        assertable_ordered = sorted(set(ordered) - own_heads)
        assertable_tpl = sorted(set(templates) - own_heads)

        actions: List[tuple] = []
        rhs_text: List[str] = []
        retracted = False
        for _ in range(rng.randint(0, 2)):
            # one retract per rule: two addresses may alias the same fact,
            # and a double retract aborts the firing
            if addr_vars and not retracted and rng.random() < 0.4:
                var = addr_vars.pop(rng.randrange(len(addr_vars)))
                rhs_text.append(f"(retract ?{var})")
                actions.append(("retract", var))
                retracted = True
                continue
            if not assertable_tpl and not assertable_ordered:
                continue
            if assertable_ordered and (
                not assertable_tpl or rng.random() < 0.3
            ):
                head = rng.choice(assertable_ordered)
                parts, pairs = [], []
                for i, kind in enumerate(ordered[head]):
                    same_kind = [v for v, k in bound.items() if k == kind]
                    if same_kind and rng.random() < 0.4:
                        var = rng.choice(same_kind)
                        parts.append(f"?{var}")
                        pairs.append((str(i), ("var", var)))
                    else:
                        value = rand_value(kind)
                        parts.append(_fmt(value))
                        pairs.append((str(i), ("lit", value)))
                rhs_text.append(
                    "(assert (%s%s))" % (head, (" " + " ".join(parts)) if parts else "")
                )
                actions.append(("assert", head, True, tuple(pairs)))
            else:
                head = rng.choice(assertable_tpl)
                parts, pairs = [], []
                for slot, kind in templates[head]:
                    same_kind = [v for v, k in bound.items() if k == kind]
                    if same_kind and rng.random() < 0.4:
                        var = rng.choice(same_kind)
                        parts.append(f"({slot} ?{var})")
                        pairs.append((slot, ("var", var)))
                    else:
                        value = rand_value(kind)
                        parts.append(f"({slot} {_fmt(value)})")
                        pairs.append((slot, ("lit", value)))
                rhs_text.append("(assert (%s %s))" % (head, " ".join(parts)))
                actions.append(("assert", head, False, tuple(pairs)))

        # an asserting rule that can consume, does: cross-rule loops then
        # recycle facts instead of accumulating them
        if addr_vars and not retracted and any(a[0] == "assert" for a in actions):
            var = addr_vars.pop(rng.randrange(len(addr_vars)))
            rhs_text.insert(0, f"(retract ?{var})")
            actions.insert(0, ("retract", var))

        decl = f"(defrule {name} "
        if salience:
            decl += f"(declare (salience {salience})) "
        decl += " ".join(lhs_text) + " => " + " ".join(rhs_text) + ")"
        prog.clp.append(decl)
        prog.naive.add_rule(NRule(name, salience, tuple(ces), tuple(actions), r))

    return prog
