"""Tower-building scenario.

A rule chain loads the blocksworld instance, plans for its goal, and
hands the plan to the executive; a simulated arm acknowledges every
skill request on the next clock event, so actions complete within one
inference cycle. Variants: `tower` builds a-on-b-on-c, `done` starts
with the goal already satisfied (empty plan, immediate success), and
`filtered` forbids stacking so planning fails and the goal is abandoned.
"""

from __future__ import annotations

import os
from typing import Optional

import yaml

from prodex.clock import VirtualClock
from prodex.manager.config import config_from_dict
from prodex.manager.manager import Manager
from prodex.pddl.model import PddlError, Plan
from prodex.pddl.planfile import format_plan
from prodex.pddl.planner import validate_plan
from prodex.scenarios.report import ScenarioReport

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")
CONFIGS = {
    "tower": os.path.join(FIXTURES, "blocksworld", "config.yaml"),
    "done": os.path.join(FIXTURES, "blocksworld", "config-done.yaml"),
    "filtered": os.path.join(FIXTURES, "blocksworld", "config-filtered.yaml"),
}

EXEC_EVENT_FIELDS = [("id", "integer"), ("event", "string")]


class InstantArm:
    """Acknowledges every skill request with success on the next event."""

    def __init__(self, bus, clock, worker: str = "arm", owner: str = "arm-sim"):
        self.bus = bus
        self.clock = clock
        self.worker = worker
        self.owner = owner
        self.handled: list[tuple[float, str]] = []

    def start(self) -> None:
        self.bus.create_publisher(self.owner, "exec/result", "ExecEvent")
        self.bus.create_subscription(
            self.owner, f"{self.worker}/skill", "SkillRequest", self._on_request
        )

    def _on_request(self, topic: str, handle) -> None:
        action = self.bus.msg_get(handle, "action")
        action_id = self.bus.msg_get(handle, "id")
        self.bus.msg_destroy(handle)
        self.handled.append((self.clock.now(), action))
        self.clock.call_after(0.0, self._complete, action_id)

    def _complete(self, action_id: int) -> None:
        self.bus.publish("exec/result", {"id": action_id, "event": "success"})


def _facts(kernel, template: str) -> list:
    return [
        f
        for f in kernel.facts.values()
        if not f.ordered and f.template == template
    ]


def run_blocksworld(
    variant: str = "tower",
    config_path: Optional[str] = None,
    report: Optional[ScenarioReport] = None,
    **overrides,
) -> ScenarioReport:
    if config_path is None:
        if variant not in CONFIGS:
            raise ValueError(f"unknown blocksworld variant '{variant}'")
        config_path = CONFIGS[variant]
    with open(config_path, "r", encoding="utf-8") as fh:
        data = yaml.safe_load(fh)
    base_dir = os.path.dirname(os.path.abspath(config_path))
    scenario = dict(data.get("scenario") or {})
    scenario.update(overrides)
    variant = scenario.get("variant", variant)
    duration = float(scenario.get("duration_s", 3.0))
    cfg = config_from_dict(data, base_dir=base_dir)

    if report is None:
        report = ScenarioReport(f"blocksworld-{variant}")
    clock = VirtualClock()
    manager = Manager(cfg, clock=clock)
    manager.registry.register("ExecEvent", EXEC_EVENT_FIELDS)
    manager.configure()
    manager.activate()

    env_name = next(iter(cfg.environments))
    env = manager.environments[env_name]
    kernel = env.kernel
    pmgr = env.extensions["pddl"]
    executive = env.extensions["executive"]

    instances = _facts(kernel, "pddl-instance")
    instance_id = instances[0].values["instance"] if instances else None
    results = _facts(kernel, "pddl-plan-result")
    outcome = str(results[0].values["outcome"]) if results else None
    plan_id = results[0].values["plan"] if results else 0
    report.record(clock.now(), "planned", outcome=outcome, plan=plan_id)

    if variant == "filtered":
        abandoned = _facts(kernel, "exec-abandoned")
        report.check("planning-failed", outcome == "failed")
        report.check(
            "goal-abandoned",
            bool(abandoned) and abandoned[0].values["goal"] == 1,
        )
        report.check(
            "goal-not-reached",
            instance_id is not None
            and not pmgr.instance(instance_id).goal_satisfied(1),
        )
        manager.shutdown()
        return report

    plan = pmgr.get_plan(plan_id) if plan_id else None
    if plan is not None:
        for line in format_plan(plan).splitlines():
            report.record(clock.now(), "plan-step", step=line)

    if variant == "done":
        report.check("planning-succeeded", outcome == "succeeded")
        report.check("empty-plan", plan is not None and len(plan.steps) == 0)
        report.check(
            "immediate-success",
            executive.state == "succeeded" and clock.now() == 0.0,
        )
        report.check(
            "goal-satisfied",
            instance_id is not None
            and pmgr.instance(instance_id).goal_satisfied(1),
        )
        manager.shutdown()
        return report

    arm = InstantArm(manager.bus, clock)
    arm.start()
    clock.run_until(duration)

    report.check("planning-succeeded", outcome == "succeeded")
    report.check(
        "four-step-plan", plan is not None and len(plan.steps) == 4,
        length=None if plan is None else len(plan.steps),
    )
    goal_ok = instance_id is not None and pmgr.instance(
        instance_id
    ).goal_satisfied(1)
    report.check(
        "executed-to-goal", executive.state == "succeeded" and goal_ok,
        state=executive.state,
    )
    report.check("all-requests-served", len(arm.handled) == 4)
    for t, action in arm.handled:
        report.record(t, "skill-request", action=action)

    # executability checks run against an untouched twin instance
    twin = pmgr.instance(
        pmgr.create_instance_from_files(
            os.path.join(FIXTURES, "blocksworld", "domain.pddl"),
            os.path.join(FIXTURES, "blocksworld", "problem.pddl"),
        )
    )
    accepted = False
    if plan is not None:
        try:
            validate_plan(twin, plan, goal_id=1)
            accepted = True
        except PddlError:
            pass
    report.check("validator-accepts-plan", accepted)

    rejected = None
    if plan is not None and len(plan.steps) >= 2:
        mutated = Plan(
            steps=plan.steps[:1] + plan.steps[2:], provenance=plan.provenance
        )
        try:
            validate_plan(twin, mutated, goal_id=1)
        except PddlError as exc:
            rejected = str(exc)
    report.check(
        "validator-rejects-mutated",
        rejected is not None and "step" in rejected,
        error=rejected,
    )

    manager.shutdown()
    return report
