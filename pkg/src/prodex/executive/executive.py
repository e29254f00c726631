"""Partial-order plan executive.

A temporal plan is relaxed into groups of steps sharing a start time; the
frontier group plus a configurable lookahead window feeds the dispatcher.
Actions go to workers by type: robot actions bind the lowest-id idle robot,
machine actions publish an instruction and run unattended, agent actions
are refined into a sub-plan just before execution.

Effects follow the action lifecycle: at-start effects apply at dispatch,
at-end effects at completion, minus anything a sub-action feedback event
already applied early. Failures apply the failure model's variant effects,
then the action is retried in place while retries remain and its at-start
conditions still hold, otherwise the remaining plan is replaced by a fresh
plan from the current state; if replanning fails the goal is abandoned.
"""

from __future__ import annotations

from typing import Callable, Dict, List, Optional, Sequence

from prodex.executive.model import (
    ActionInstance,
    DISPATCHED,
    FAILED,
    FailureModel,
    PENDING,
    RUNNING,
    SUCCEEDED,
    SubActionMap,
    WORKER_TYPES,
    Worker,
    ExecutiveError,
    relax,
)
from prodex.pddl.manager import PddlManager
from prodex.pddl.model import (
    AT_END,
    AT_START,
    GroundAction,
    Literal,
    OVER_ALL,
    Plan,
)
from prodex.pddl.planner import PlanStatus

IDLE = "idle"
EXECUTING = "executing"
PLAN_SUCCEEDED = "succeeded"
ABANDONED = "abandoned"


def _literal_effects(
    ga: GroundAction, phases: Sequence[str]
) -> List[Literal]:
    out = []
    for phase in phases:
        for eff in ga.effects.get(phase, ()):
            if isinstance(eff, Literal):
                out.append(eff)
    return out


class PlanExecutive:
    def __init__(
        self,
        pddl: PddlManager,
        workers: Dict[str, str],
        action_types: Optional[Dict[str, str]] = None,
        submap: Optional[SubActionMap] = None,
        failures: Optional[FailureModel] = None,
        lookahead: int = 0,
        epsilon: float = 1e-6,
        max_retries: int = 1,
        on_dispatch: Optional[Callable[[ActionInstance, Optional[Worker]], None]] = None,
        log: Optional[Callable[[str, str], None]] = None,
        now: Optional[Callable[[], float]] = None,
    ):
        for wid, wtype in workers.items():
            if wtype not in WORKER_TYPES:
                raise ExecutiveError(
                    f"worker '{wid}' has unknown type '{wtype}'"
                )
        for name, wtype in (action_types or {}).items():
            if wtype not in WORKER_TYPES:
                raise ExecutiveError(
                    f"action '{name}' mapped to unknown worker type '{wtype}'"
                )
        self.pddl = pddl
        self.workers: Dict[str, Worker] = {
            wid: Worker(wid, wtype) for wid, wtype in sorted(workers.items())
        }
        self.action_types = dict(action_types or {})
        self.submap = submap or SubActionMap()
        self.failures = failures or FailureModel()
        self.lookahead = lookahead
        self.epsilon = epsilon
        self.max_retries = max_retries
        self.on_dispatch = on_dispatch
        self._log = log or (lambda level, text: None)
        self._now = now or (lambda: 0.0)

        self.state = IDLE
        self.instance_id: Optional[int] = None
        self.goal_id: Optional[int] = None
        self.refine_instance_id: Optional[int] = None
        self.groups: List[List[ActionInstance]] = []
        self.frontier = 0
        self.instances: Dict[int, ActionInstance] = {}
        self._next_action = 1
        self.last_replan: Optional[Plan] = None
        # state snapshot the replanner planned from, for auditing
        self.last_replan_state = None
        # chronological record of every decision, for inspection and tests;
        # each entry is (kind, timestamp, ...)
        self.trace: List[tuple] = []

    def _trace(self, kind: str, *payload) -> None:
        self.trace.append((kind, self._now()) + payload)

    # ------------------------------------------------------------ plan intake

    def _worker_type_of(self, name: str, refined: bool) -> str:
        wtype = self.action_types.get(name, "robot")
        if refined and wtype == "agent":
            # refinement plans are primitive; children are never re-refined
            wtype = "robot"
        return wtype

    def _new_instance(
        self, ga: GroundAction, pddl_instance: int, origin: str
    ) -> ActionInstance:
        refined = origin == "refinement"
        inst = ActionInstance(
            self._next_action,
            ga,
            self._worker_type_of(ga.name, refined),
            pddl_instance,
            origin,
        )
        self._next_action += 1
        self.instances[inst.id] = inst
        return inst

    def _build_groups(
        self, plan: Plan, pddl_instance: int, origin: str
    ) -> List[List[ActionInstance]]:
        groups = []
        for raw in relax(plan, self.epsilon):
            group = [self._new_instance(ga, pddl_instance, origin) for ga in raw]
            for inst in group:
                inst.group = group
            groups.append(group)
        return groups

    def start(self, instance_id: int, goal_id: int, plan: Plan) -> None:
        if self.state is EXECUTING:
            raise ExecutiveError("a plan is already executing")
        instance = self.pddl.instance(instance_id)  # validates the id
        if goal_id not in instance.goals:
            raise ExecutiveError(f"no goal with id {goal_id}")
        self.submap.validate(instance.domain)
        self.failures.validate(instance.domain)
        self.instance_id = instance_id
        self.goal_id = goal_id
        self.groups = self._build_groups(plan, instance_id, "plan")
        self.frontier = 0
        self.state = EXECUTING
        self._trace("start", instance_id, goal_id, len(self.groups))
        self._settle()

    # --------------------------------------------------------------- dispatch

    def eligible(self) -> List[ActionInstance]:
        """Pending actions in the lookahead window whose conditions hold."""
        out = []
        hi = min(len(self.groups), self.frontier + self.lookahead + 1)
        for group in self.groups[self.frontier:hi]:
            for inst in group:
                if inst.status == PENDING and self._conditions_hold(inst):
                    out.append(inst)
        return out

    def _conditions_hold(self, inst: ActionInstance) -> bool:
        instance = self.pddl.instance(inst.pddl_instance)
        return instance.check_condition(
            inst.action, AT_START
        ) and instance.check_condition(inst.action, OVER_ALL)

    def step(self) -> int:
        """One dispatch pass. Returns the number of actions dispatched."""
        if self.state is not EXECUTING:
            return 0
        dispatched = 0
        hi = min(len(self.groups), self.frontier + self.lookahead + 1)
        for group in list(self.groups[self.frontier:hi]):
            for inst in list(group):
                if inst.status != PENDING:
                    continue
                if not self._conditions_hold(inst):
                    continue
                if self._dispatch(inst):
                    dispatched += 1
        return dispatched

    def _dispatch(self, inst: ActionInstance) -> bool:
        if inst.worker_type == "agent" and not inst.refined:
            return self._refine(inst)

        worker: Optional[Worker] = None
        if inst.worker_type == "robot":
            idle = [
                w
                for _, w in sorted(self.workers.items())
                if w.type == "robot" and w.idle
            ]
            if not idle:
                return False
            worker = idle[0]

        # commit point: conditions must still hold
        if not self._conditions_hold(inst):
            self._log(
                "warn",
                f"dispatch of {inst.action} aborted, conditions changed",
            )
            inst.status = PENDING
            return False
        inst.status = DISPATCHED
        if worker is not None:
            worker.current = inst
            inst.worker_id = worker.id
        instance = self.pddl.instance(inst.pddl_instance)
        instance.apply_effects(inst.action, AT_START)
        inst.status = RUNNING
        self._trace("dispatch", inst.id, str(inst.action))
        started = _literal_effects(inst.action, (AT_START,))
        if started:
            self._trace("applied-effects", inst.id, "dispatch", tuple(started))
        self._log(
            "info",
            f"dispatched {inst.action} as action {inst.id}"
            + (f" to {worker.id}" if worker else ""),
        )
        if self.on_dispatch is not None:
            self.on_dispatch(inst, worker)
        return True

    # ------------------------------------------------------------- refinement

    def _refine(self, inst: ActionInstance) -> bool:
        target_id = (
            self.refine_instance_id
            if self.refine_instance_id is not None
            else inst.pddl_instance
        )
        target = self.pddl.instance(target_id)
        goal_lits = [
            Literal(True, lit.atom)
            for lit in _literal_effects(inst.action, (AT_START, AT_END))
            if lit.positive
        ]
        goal_id = target.add_goal(goal_lits)
        job = self.pddl.plan(target_id, goal_id)
        if job.status is not PlanStatus.SUCCEEDED:
            self._log(
                "warn",
                f"refinement of {inst.action} failed: {job.error}",
            )
            self._trace("refine-failed", inst.id)
            inst.status = FAILED
            self._repair_or_replan(inst)
            return False

        child_groups = self._build_groups(job.plan, target_id, "refinement")
        self._trace("refined", inst.id, len(child_groups))
        if not child_groups:
            # intended effects already hold
            inst.status = RUNNING
            self._succeed(inst)
            self._settle()
            return True
        position = self.groups.index(inst.group)
        self.groups[position:position] = child_groups
        inst.status = RUNNING
        inst.waiting_group = child_groups[-1]
        return True

    # ------------------------------------------------------ feedback & result

    def feedback(self, action_id: int, event: str) -> None:
        inst = self.instances.get(action_id)
        if inst is None:
            self._log("warn", f"feedback for unknown action {action_id}")
            return
        if inst.status != RUNNING:
            self._log(
                "warn",
                f"feedback '{event}' for action {action_id} ignored, "
                f"action is {inst.status}",
            )
            return
        sub_name = self.submap.lookup(inst.action.name, event)
        if sub_name is None:
            self._log(
                "warn",
                f"unmapped feedback event '{event}' for {inst.action}",
            )
            return
        instance = self.pddl.instance(inst.pddl_instance)
        sub = instance.ground_related(inst.action, sub_name)
        if not (
            instance.check_condition(sub, AT_START)
            and instance.check_condition(sub, OVER_ALL)
        ):
            self._log(
                "warn",
                f"sub-action {sub} conditions not met, deferring its "
                f"effects to completion",
            )
            return
        fresh = [
            lit
            for lit in _literal_effects(sub, (AT_START, AT_END))
            if lit not in inst.applied
        ]
        instance.apply_effect_literals(fresh)
        inst.applied.update(fresh)
        self._trace("feedback", action_id, event, len(fresh))
        if fresh:
            self._trace("applied-effects", action_id, "feedback", tuple(fresh))

    def complete(self, action_id: int, outcome: str) -> None:
        if outcome not in ("success", "failure"):
            raise ExecutiveError(f"unknown completion outcome '{outcome}'")
        inst = self.instances.get(action_id)
        if inst is None:
            self._log("warn", f"completion for unknown action {action_id}")
            return
        if inst.status not in (RUNNING, DISPATCHED):
            self._log(
                "warn",
                f"completion for action {action_id} ignored, "
                f"action is {inst.status}",
            )
            return
        if outcome == "success":
            self._succeed(inst)
            self._settle()
            return
        instance = self.pddl.instance(inst.pddl_instance)
        variant_name = self.failures.variants.get(inst.action.name)
        if variant_name is not None:
            variant = instance.ground_related(inst.action, variant_name)
            instance.apply_effects(variant, AT_START)
            instance.apply_effects(variant, AT_END)
            applied = _literal_effects(variant, (AT_START, AT_END))
            if applied:
                self._trace(
                    "applied-effects", inst.id, "failure-variant", tuple(applied)
                )
        inst.status = FAILED
        self._free_worker(inst)
        self._trace("failed", inst.id, str(inst.action))
        self._log("warn", f"action {inst.id} {inst.action} failed")
        self._repair_or_replan(inst)

    def _succeed(self, inst: ActionInstance) -> None:
        instance = self.pddl.instance(inst.pddl_instance)
        if inst.worker_type == "agent" and not inst.refined:
            # agent parents skip the dispatch-time application entirely
            phases: tuple = (AT_START, AT_END)
        else:
            phases = (AT_END,)
        remaining = [
            lit
            for lit in _literal_effects(inst.action, phases)
            if lit not in inst.applied
        ]
        instance.apply_effect_literals(remaining)
        for phase in phases:
            instance.apply_numeric(
                e
                for e in inst.action.effects.get(phase, ())
                if not isinstance(e, Literal)
            )
        inst.status = SUCCEEDED
        self._free_worker(inst)
        self._trace("complete", inst.id, str(inst.action))
        if remaining:
            self._trace(
                "applied-effects", inst.id, "completion", tuple(remaining)
            )

    def _free_worker(self, inst: ActionInstance) -> None:
        if inst.worker_id is not None:
            worker = self.workers[inst.worker_id]
            if worker.current is inst:
                worker.current = None
            inst.worker_id = None

    def _settle(self) -> None:
        """Resolve waiting agent parents and advance the frontier."""
        progressed = True
        while progressed:
            progressed = False
            for parent in list(self.instances.values()):
                if parent.waiting_group is None:
                    continue
                if all(c.status == SUCCEEDED for c in parent.waiting_group):
                    parent.waiting_group = None
                    self._succeed(parent)
                    progressed = True
            while self.frontier < len(self.groups) and all(
                a.status == SUCCEEDED for a in self.groups[self.frontier]
            ):
                self.frontier += 1
                progressed = True
        if self.state is EXECUTING and self.frontier >= len(self.groups):
            self.state = PLAN_SUCCEEDED
            self._trace("plan-succeeded", self.goal_id)
            self._log("info", "plan completed")

    # --------------------------------------------------------------- recovery

    def _move_to_frontier(self, inst: ActionInstance) -> None:
        if inst.group is not None and inst in inst.group:
            inst.group.remove(inst)
        group = self.groups[self.frontier]
        group.append(inst)
        inst.group = group

    def _repair_or_replan(self, inst: ActionInstance) -> str:
        instance = self.pddl.instance(inst.pddl_instance)
        if inst.retries < self.max_retries and instance.check_condition(
            inst.action, AT_START
        ):
            inst.retries += 1
            inst.applied.clear()
            inst.status = PENDING
            self._move_to_frontier(inst)
            self._trace("retried", inst.id, inst.retries)
            self._log(
                "info",
                f"retrying {inst.action} ({inst.retries}/{self.max_retries})",
            )
            return "retried"

        degraded = instance.snapshot()
        job = self.pddl.plan(self.instance_id, self.goal_id)
        if job.status is PlanStatus.SUCCEEDED:
            # still-running leaf actions stay tracked; waiting parents and
            # everything not yet started is replaced by the new plan
            carryover = [
                a
                for group in self.groups[self.frontier:]
                for a in group
                if a.status in (DISPATCHED, RUNNING) and a.waiting_group is None
            ]
            new_groups = self._build_groups(job.plan, self.instance_id, "replan")
            if carryover:
                for a in carryover:
                    a.group = carryover
                new_groups.insert(0, carryover)
            self.groups = new_groups
            self.frontier = 0
            self.last_replan = job.plan
            self.last_replan_state = degraded
            self._trace("replanned", inst.id, len(new_groups))
            self._log(
                "info",
                f"replanned after {inst.action} failed, "
                f"{len(job.plan.steps)} steps",
            )
            self._settle()
            return "replanned"

        self.state = ABANDONED
        self._trace("abandoned", self.goal_id)
        self._log(
            "error",
            f"replanning failed, goal {self.goal_id} is unreachable: "
            f"{job.error}",
        )
        return "abandoned"
