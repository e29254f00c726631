"""Two-robot transport scenario driven by an imported temporal plan.

Robot simulators report a picked-up event partway through each transport;
the mapped sub-action frees the origin station early, which is what lets
the second, dependent transport start while the first is still running
(given a lookahead window). Failure injection covers the retry and
replan recovery paths.
"""

from __future__ import annotations

import os
from typing import Dict, Optional, Tuple

import yaml

from prodex.clock import VirtualClock
from prodex.manager.config import config_from_dict
from prodex.manager.manager import Manager
from prodex.pddl.model import PddlError
from prodex.pddl.parser import parse_action_text
from prodex.pddl.planfile import read_plan_file
from prodex.pddl.planner import validate_plan
from prodex.scenarios.report import ScenarioReport

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")
CONFIG = os.path.join(FIXTURES, "logistics", "config.yaml")

EXEC_EVENT_FIELDS = [("id", "integer"), ("event", "string")]

TRAVEL_TIMES: Dict[Tuple[str, str], float] = {
    ("mill-out", "dock"): 40.0,
    ("input", "mill-out"): 30.0,
    ("mill-out", "mill-in"): 15.0,
    ("mill-in", "dock"): 15.0,
}


class LogisticsSim:
    """Drives the robot and machine sides of the transport plan.

    Transports take their travel time and report "picked-up" after
    `pickup_delay`. A `fail` spec ("(transport i1 mill-out dock)",
    delay) makes the first matching request fail after that delay
    instead, with no pickup and no completion."""

    def __init__(
        self,
        bus,
        clock,
        robots=("r1", "r2"),
        machine_topic: str = "machine/instruction",
        pickup_delay: float = 8.0,
        default_duration: float = 10.0,
        process_time: float = 20.0,
        fail: Optional[Tuple[str, float]] = None,
    ):
        self.bus = bus
        self.clock = clock
        self.robots = tuple(robots)
        self.machine_topic = machine_topic
        self.pickup_delay = pickup_delay
        self.default_duration = default_duration
        self.process_time = process_time
        self.fail = fail
        self.fail_used = False
        self.requests: list[tuple[float, str, str]] = []  # (t, worker, action)

    def start(self) -> None:
        self.bus.create_publisher("sim", "exec/feedback", "ExecEvent")
        self.bus.create_publisher("sim", "exec/result", "ExecEvent")
        for robot in self.robots:
            self.bus.create_subscription(
                "sim",
                f"{robot}/skill",
                "SkillRequest",
                lambda topic, handle, _r=robot: self._on_skill(_r, handle),
            )
        self.bus.create_subscription(
            "sim", self.machine_topic, "Instruction", self._on_instruction
        )

    def _read(self, handle) -> tuple[str, int]:
        action = self.bus.msg_get(handle, "action")
        action_id = self.bus.msg_get(handle, "id")
        self.bus.msg_destroy(handle)
        return action, action_id

    def _emit(self, topic: str, action_id: int, event: str) -> None:
        self.bus.publish(topic, {"id": action_id, "event": event})

    def _on_skill(self, robot: str, handle) -> None:
        action, action_id = self._read(handle)
        self.requests.append((self.clock.now(), robot, action))
        if self.fail is not None and not self.fail_used and action == self.fail[0]:
            self.fail_used = True
            self.clock.call_after(
                self.fail[1], self._emit, "exec/result", action_id, "failure"
            )
            return
        name, args = parse_action_text(action)
        if name == "transport":
            duration = TRAVEL_TIMES.get((args[1], args[2]), self.default_duration)
            self.clock.call_after(
                self.pickup_delay, self._emit, "exec/feedback", action_id, "picked-up"
            )
        else:
            duration = self.default_duration
        self.clock.call_after(
            duration, self._emit, "exec/result", action_id, "success"
        )

    def _on_instruction(self, topic: str, handle) -> None:
        action, action_id = self._read(handle)
        self.requests.append((self.clock.now(), "machine", action))
        self.clock.call_after(
            self.process_time, self._emit, "exec/result", action_id, "success"
        )


def run_logistics(
    config_path: str = CONFIG,
    report: Optional[ScenarioReport] = None,
    lookahead: Optional[int] = None,
    failure_model: Optional[str] = None,
    fail: Optional[Tuple[str, float]] = None,
    **overrides,
) -> ScenarioReport:
    with open(config_path, "r", encoding="utf-8") as fh:
        data = yaml.safe_load(fh)
    base_dir = os.path.dirname(os.path.abspath(config_path))
    scenario = dict(data.get("scenario") or {})
    scenario.update(overrides)
    exec_settings = data["plugins"]["exec"]
    if lookahead is not None:
        exec_settings["lookahead"] = int(lookahead)
    if failure_model is not None:
        exec_settings["failure_model"] = failure_model
    cfg = config_from_dict(data, base_dir=base_dir)

    duration = float(scenario.get("duration_s", 120.0))
    pickup_delay = float(scenario.get("pickup_delay_s", 8.0))
    plan_path = cfg.resolve(scenario.get("plan_file", "transport.plan"))

    if report is None:
        report = ScenarioReport("logistics")
    clock = VirtualClock()
    manager = Manager(cfg, clock=clock)
    manager.registry.register("ExecEvent", EXEC_EVENT_FIELDS)
    manager.configure()
    manager.activate()

    env_name = next(iter(cfg.environments))
    env = manager.environments[env_name]
    pmgr = env.extensions["pddl"]
    executive = env.extensions["executive"]

    instance_id = pmgr.create_instance_from_files(
        os.path.join(FIXTURES, "logistics", "domain.pddl"),
        os.path.join(FIXTURES, "logistics", "problem.pddl"),
    )
    instance = pmgr.instance(instance_id)
    plan = read_plan_file(plan_path, instance)
    plan_id = pmgr.store_plan(plan)
    report.record(
        clock.now(), "plan-imported", steps=len(plan.steps), source=plan.provenance
    )

    sim = LogisticsSim(
        manager.bus, clock, pickup_delay=pickup_delay, fail=fail
    )
    sim.start()
    exec_start = env.functions["exec-start"][1]
    with env.mutate("scenario-start"):
        exec_start(instance_id, 1, plan_id)

    clock.run_until(duration)

    by_action_id = {}
    for entry in executive.trace:
        kind, t = entry[0], entry[1]
        if kind == "dispatch":
            by_action_id[entry[2]] = entry[3]
            report.record(t, "dispatch", action=entry[3], id=entry[2])
        elif kind == "feedback":
            report.record(t, "feedback", id=entry[2], what=entry[3])
        elif kind == "applied-effects":
            report.record(
                t,
                "effects",
                id=entry[2],
                stage=entry[3],
                literals=[str(l) for l in entry[4]],
            )
        elif kind in ("complete", "failed"):
            report.record(t, kind, id=entry[2], action=entry[3])
        elif kind in ("retried", "replanned"):
            report.record(t, kind, id=entry[2])
        elif kind in ("abandoned", "plan-succeeded"):
            report.record(t, kind, goal=entry[2])

    report.check("plan-executed", executive.state == "succeeded",
                 state=executive.state)
    report.check("goal-satisfied", instance.goal_satisfied(1))

    replanned = [e for e in executive.trace if e[0] == "replanned"]
    if replanned:
        accepted = False
        error = None
        try:
            validate_plan(
                instance,
                executive.last_replan,
                goal_id=1,
                state=executive.last_replan_state,
            )
            accepted = True
        except PddlError as exc:
            error = str(exc)
        report.check("replan-validated-from-degraded-state", accepted, error=error)

    manager.shutdown()
    return report
