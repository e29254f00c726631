"""Forward-search sequential planner.

Breadth-first search over ground states, which is uniform-cost search for
unit step costs and therefore returns a shortest plan. Durative actions are
collapsed to atomic steps: a step is applicable when its at-start and
over-all conditions hold, and its at-end conditions hold after the at-start
effects. Step start times in the result are the cumulative step index.

Successors are generated in lexicographic ground-action order, which makes
the found plan deterministic. Search stops at a configurable node budget.
Jobs can be cancelled; a cancelled or exhausted search fails and reports how
many nodes it explored.
"""

from __future__ import annotations

import enum
from collections import deque
from typing import FrozenSet, List, Optional, Set, Tuple

from prodex.pddl.instance import PddlInstance
from prodex.pddl.model import (
    AT_END,
    AT_START,
    Atom,
    GroundAction,
    Literal,
    OVER_ALL,
    PddlError,
    Plan,
    PlanStep,
)

DEFAULT_NODE_BUDGET = 10**6


class PlanStatus(enum.Enum):
    RUNNING = "running"
    SUCCEEDED = "succeeded"
    FAILED = "failed"


def _holds(lits: Tuple[Literal, ...], state: FrozenSet[Atom]) -> bool:
    return all((lit.atom in state) == lit.positive for lit in lits)


def _apply(
    state: FrozenSet[Atom], ga: GroundAction, phase: str
) -> FrozenSet[Atom]:
    out: Set[Atom] = set(state)
    effs = ga.effects.get(phase, ())
    for eff in effs:  # deletes first
        if isinstance(eff, Literal) and not eff.positive:
            out.discard(eff.atom)
    for eff in effs:
        if isinstance(eff, Literal) and eff.positive:
            out.add(eff.atom)
    return frozenset(out)


def _step(
    state: FrozenSet[Atom], ga: GroundAction
) -> Optional[FrozenSet[Atom]]:
    """Successor state if the action can run to completion here, else None."""
    if not _holds(ga.conditions.get(AT_START, ()), state):
        return None
    if not _holds(ga.conditions.get(OVER_ALL, ()), state):
        return None
    mid = _apply(state, ga, AT_START)
    if not _holds(ga.conditions.get(AT_END, ()), mid):
        return None
    return _apply(mid, ga, AT_END)


class PlanningJob:
    """One planning request. run() performs the search synchronously;
    cancel() may be called before or (from another thread) during it."""

    def __init__(
        self,
        instance: PddlInstance,
        goal_id: int,
        filter_id: Optional[int] = None,
        node_budget: int = DEFAULT_NODE_BUDGET,
    ):
        if goal_id not in instance.goals:
            raise PddlError(f"no goal with id {goal_id}")
        self.instance = instance
        self.goal_id = goal_id
        self.filter_id = filter_id
        self.node_budget = node_budget
        self.status = PlanStatus.RUNNING
        self.plan: Optional[Plan] = None
        self.error: Optional[str] = None
        self.explored = 0
        self._cancelled = False

    def cancel(self) -> None:
        self._cancelled = True

    def _fail(self, reason: str) -> None:
        self.status = PlanStatus.FAILED
        self.error = f"{reason} (explored {self.explored} nodes)"

    def run(self) -> "PlanningJob":
        if self.status is not PlanStatus.RUNNING:
            return self
        if self._cancelled:
            self._fail("cancelled")
            return self

        instance = self.instance
        goal = instance.goals[self.goal_id]
        actions = instance.ground_actions(self.filter_id)
        initial = instance.snapshot()

        frontier = deque([initial])
        # state -> (previous state, action taken to reach it)
        came_from = {initial: None}

        while frontier:
            if self._cancelled:
                self._fail("cancelled")
                return self
            state = frontier.popleft()
            self.explored += 1
            if _holds(goal, state):
                self._finish(state, came_from)
                return self
            if self.explored >= self.node_budget:
                self._fail("node budget exhausted")
                return self
            for ga in actions:
                nxt = _step(state, ga)
                if nxt is None or nxt in came_from:
                    continue
                came_from[nxt] = (state, ga)
                frontier.append(nxt)

        self._fail("no plan exists")
        return self

    def _finish(self, state, came_from) -> None:
        actions: List[GroundAction] = []
        cur = state
        while came_from[cur] is not None:
            prev, ga = came_from[cur]
            actions.append(ga)
            cur = prev
        actions.reverse()
        steps = tuple(
            PlanStep(time=float(i), action=ga) for i, ga in enumerate(actions)
        )
        self.plan = Plan(steps=steps, provenance="planner")
        self.status = PlanStatus.SUCCEEDED


def plan(
    instance: PddlInstance,
    goal_id: int,
    filter_id: Optional[int] = None,
    node_budget: int = DEFAULT_NODE_BUDGET,
) -> PlanningJob:
    """Plan synchronously and return the finished job."""
    return PlanningJob(instance, goal_id, filter_id, node_budget).run()


def validate_plan(
    instance: PddlInstance,
    plan: Plan,
    goal_id: Optional[int] = None,
    state: Optional[FrozenSet[Atom]] = None,
) -> FrozenSet[Atom]:
    """Executability check: walk the plan applying at-start then at-end
    effects, verifying each phase's conditions on the way. Raises on the
    first violated step, naming it; returns the final state. With a goal id
    the goal must hold in that final state."""
    if state is None:
        state = instance.snapshot()
    for index, step in enumerate(plan.steps):
        ga = step.action
        where = f"step {index} {ga}"
        if not _holds(ga.conditions.get(AT_START, ()), state):
            raise PddlError(f"{where}: at-start conditions not satisfied")
        if not _holds(ga.conditions.get(OVER_ALL, ()), state):
            raise PddlError(f"{where}: over-all conditions not satisfied")
        mid = _apply(state, ga, AT_START)
        if not _holds(ga.conditions.get(AT_END, ()), mid):
            raise PddlError(f"{where}: at-end conditions not satisfied")
        state = _apply(mid, ga, AT_END)
    if goal_id is not None and not instance.goal_satisfied(goal_id, set(state)):
        raise PddlError(f"plan does not reach goal {goal_id}")
    return state
