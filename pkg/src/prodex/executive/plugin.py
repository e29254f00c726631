"""Plugin hosting a plan executive inside an environment.

Requires the pddl plugin in the same environment (the executive plans and
applies effects through its registry). Dispatch goes out over the bus:
robot actions as SkillRequest messages on "<worker>/skill", machine actions
as Instruction messages on the configured machine topic. Feedback comes
back through the registered functions, normally called by rules reacting
to bus facts:

    (exec-start ?instance ?goal ?plan-id)
    (exec-step)
    (exec-feedback ?action-id ?event)
    (exec-complete ?action-id success|failure)
    (exec-refine-instance ?instance)

Settings: lookahead, epsilon, max_retries, workers (id -> robot|machine|
agent), action_types (action name -> worker type), sub_action_map and
failure_model (paths to structured text files), machine_topic.
"""

from __future__ import annotations

from typing import Optional

from prodex.engine.loader import load_file
from prodex.executive.executive import ABANDONED, PlanExecutive
from prodex.executive.model import (
    ActionInstance,
    ExecutiveError,
    FailureModel,
    SubActionMap,
    Worker,
)
from prodex.manager.plugins import Plugin, register_plugin_kind
from prodex.pddl.plugin import EXTENSION_KEY as PDDL_EXTENSION
from prodex.values import Symbol, TRUE

import os

RULES_FILE = os.path.join(os.path.dirname(__file__), "rules", "executive.clp")

EXTENSION_KEY = "executive"

SKILL_SCHEMA = "SkillRequest"
INSTRUCTION_SCHEMA = "Instruction"


class PlanExecPlugin(Plugin):
    kind = "plan_exec"

    def initialize(self) -> None:
        self.lookahead = int(self.settings.get("lookahead", 0))
        if self.lookahead < 0:
            raise ExecutiveError(f"plugin '{self.name}': lookahead must be >= 0")
        self.epsilon = float(self.settings.get("epsilon", 1e-6))
        self.max_retries = int(self.settings.get("max_retries", 1))
        self.workers = dict(self.settings.get("workers", {}))
        self.action_types = dict(self.settings.get("action_types", {}))
        self.machine_topic = self.settings.get(
            "machine_topic", "machine/instruction"
        )
        self.submap = SubActionMap()
        if self.settings.get("sub_action_map"):
            self.submap = SubActionMap.load(
                self.services.resolve(self.settings["sub_action_map"])
            )
        self.failures = FailureModel()
        if self.settings.get("failure_model"):
            self.failures = FailureModel.load(
                self.services.resolve(self.settings["failure_model"])
            )
        registry = self.services.registry
        fields = [("action", "string"), ("id", "integer")]
        for schema in (SKILL_SCHEMA, INSTRUCTION_SCHEMA):
            if schema not in registry.names():
                registry.register(schema, fields)

    def env_init(self, env) -> None:
        pddl = env.extensions.get(PDDL_EXTENSION)
        if pddl is None:
            raise ExecutiveError(
                f"plugin '{self.name}' requires the pddl plugin in "
                f"environment '{env.name}'"
            )
        bus = self.services.bus
        kernel = env.kernel
        load_file(kernel, RULES_FILE)

        bus.create_publisher(env.name, self.machine_topic, INSTRUCTION_SCHEMA)
        for worker_id, worker_type in sorted(self.workers.items()):
            if worker_type == "robot":
                bus.create_publisher(
                    env.name, f"{worker_id}/skill", SKILL_SCHEMA
                )

        def on_dispatch(inst: ActionInstance, worker: Optional[Worker]) -> None:
            payload = {"action": str(inst.action), "id": inst.id}
            if worker is not None:
                bus.publish(f"{worker.id}/skill", payload)
            elif inst.worker_type == "machine":
                bus.publish(self.machine_topic, payload)

        executive = PlanExecutive(
            pddl=pddl,
            workers=self.workers,
            action_types=self.action_types,
            submap=self.submap,
            failures=self.failures,
            lookahead=self.lookahead,
            epsilon=self.epsilon,
            max_retries=self.max_retries,
            on_dispatch=on_dispatch,
            log=lambda level, text: self.services.log(env.name, level, text),
            now=self.services.clock.now,
        )
        env.extensions[EXTENSION_KEY] = executive

        def sync_state() -> None:
            if "exec-state" not in kernel.templates:
                return
            desired = {
                "state": Symbol(executive.state),
                "frontier": executive.frontier,
                "groups": len(executive.groups),
            }
            current = [
                f
                for f in kernel.facts.values()
                if f.template == "exec-state" and not f.ordered
            ]
            if len(current) == 1 and current[0].values == desired:
                return
            for fact in current:
                kernel.retract_fact(fact.id)
            kernel.assert_fact("exec-state", desired)
            if executive.state is ABANDONED:
                already = any(
                    f.template == "exec-abandoned"
                    for f in kernel.facts.values()
                )
                if not already:
                    kernel.assert_fact(
                        "exec-abandoned",
                        {
                            "instance": executive.instance_id,
                            "goal": executive.goal_id,
                        },
                    )

        def exec_start(instance_id, goal_id, plan_id):
            plan = pddl.get_plan(int(plan_id))
            executive.start(int(instance_id), int(goal_id), plan)
            sync_state()
            return TRUE

        def exec_step():
            dispatched = executive.step()
            sync_state()
            return dispatched

        def exec_feedback(action_id, event):
            executive.feedback(int(action_id), str(event))
            sync_state()
            return TRUE

        def exec_complete(action_id, outcome):
            executive.complete(int(action_id), str(outcome))
            sync_state()
            return TRUE

        def exec_refine_instance(instance_id):
            pddl.instance(int(instance_id))  # validate
            executive.refine_instance_id = int(instance_id)
            return TRUE

        for fn_name, fn in (
            ("exec-start", exec_start),
            ("exec-step", exec_step),
            ("exec-feedback", exec_feedback),
            ("exec-complete", exec_complete),
            ("exec-refine-instance", exec_refine_instance),
        ):
            env.register_function(self.name, fn_name, fn)

    def env_destroyed(self, env) -> None:
        env.extensions.pop(EXTENSION_KEY, None)


register_plugin_kind("plan_exec", PlanExecPlugin)
