"""Hand-written blocks-world semantics: the ground truth for the PDDL
evaluator and the planner's optimal plan length.

Each operator's precondition and effect is spelled out as literal
Python over plain tuple-atoms, with no shared machinery with the
package. Grounding enumerates all argument combinations including
repeats; repeated-argument actions are simply never executable."""

from __future__ import annotations

import random
from collections import deque
from itertools import product
from typing import FrozenSet, Iterable, List, Optional, Tuple

Atom = Tuple[str, ...]
State = FrozenSet[Atom]


def initial_state(blocks: Iterable[str]) -> State:
    atoms = [("handempty",)]
    for b in blocks:
        atoms.append(("ontable", b))
        atoms.append(("clear", b))
    return frozenset(atoms)


def ground_actions(blocks: Iterable[str]) -> List[Tuple[str, Tuple[str, ...]]]:
    blocks = list(blocks)
    out: List[Tuple[str, Tuple[str, ...]]] = []
    for x in blocks:
        out.append(("pick-up", (x,)))
        out.append(("put-down", (x,)))
    for x, y in product(blocks, blocks):
        out.append(("stack", (x, y)))
        out.append(("unstack", (x, y)))
    return out


def precondition_holds(state: State, name: str, args: Tuple[str, ...]) -> bool:
    if name == "pick-up":
        (x,) = args
        return (
            ("clear", x) in state
            and ("ontable", x) in state
            and ("handempty",) in state
        )
    if name == "put-down":
        (x,) = args
        return ("holding", x) in state
    if name == "stack":
        x, y = args
        return ("holding", x) in state and ("clear", y) in state
    if name == "unstack":
        x, y = args
        return (
            ("on", x, y) in state
            and ("clear", x) in state
            and ("handempty",) in state
        )
    raise ValueError(f"unknown action {name}")


def apply_action(state: State, name: str, args: Tuple[str, ...]) -> State:
    """Successor state; assumes the precondition holds."""
    s = set(state)
    if name == "pick-up":
        (x,) = args
        s -= {("ontable", x), ("clear", x), ("handempty",)}
        s |= {("holding", x)}
    elif name == "put-down":
        (x,) = args
        s -= {("holding", x)}
        s |= {("clear", x), ("handempty",), ("ontable", x)}
    elif name == "stack":
        x, y = args
        s -= {("holding", x), ("clear", y)}
        s |= {("clear", x), ("handempty",), ("on", x, y)}
    elif name == "unstack":
        x, y = args
        s -= {("clear", x), ("handempty",), ("on", x, y)}
        s |= {("holding", x), ("clear", y)}
    else:
        raise ValueError(f"unknown action {name}")
    return frozenset(s)


def successors(state: State, blocks: Iterable[str]):
    for name, args in ground_actions(blocks):
        if precondition_holds(state, name, args):
            yield (name, args), apply_action(state, name, args)


def optimal_plan_length(
    start: State, goal: Iterable[Atom], blocks: Iterable[str]
) -> Optional[int]:
    """Length of a shortest plan reaching all goal atoms, or None."""
    blocks = list(blocks)
    goal = frozenset(goal)
    if goal <= start:
        return 0
    seen = {start}
    frontier = deque([(start, 0)])
    while frontier:
        state, depth = frontier.popleft()
        for _, nxt in successors(state, blocks):
            if nxt in seen:
                continue
            if goal <= nxt:
                return depth + 1
            seen.add(nxt)
            frontier.append((nxt, depth + 1))
    return None


def random_reachable_states(
    blocks: Iterable[str], count: int, seed: int, walk_length: int = 12
) -> List[State]:
    """States sampled by random walks from the initial state, so every
    one of them is reachable by construction."""
    blocks = list(blocks)
    rng = random.Random(seed)
    out: List[State] = []
    for _ in range(count):
        state = initial_state(blocks)
        for _ in range(rng.randint(0, walk_length)):
            options = list(successors(state, blocks))
            if not options:
                break
            _, state = rng.choice(options)
        out.append(state)
    return out
