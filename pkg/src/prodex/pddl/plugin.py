"""Plugin exposing the planning registry to rule environments.

Loading it gives the environment a PddlManager (shared via
``env.extensions["pddl"]`` so the plan executive can reach it), a set of
registered functions, and helper rules that translate request facts into
those calls:

    (pddl-create-instance ?domain-path ?problem-path [key value ...])
    (pddl-add-goal ?instance ?formula-string)
    (pddl-add-filter ?instance ?kind ?names-string)
    (pddl-plan ?instance ?goal [?filter]) ; asserts result and step facts
    (pddl-check ?instance ?action-string ?phase)
    (pddl-apply ?instance ?action-string ?phase)
    (pddl-set-fluent ?instance ?formula-string)
    (pddl-goal-satisfied ?instance ?goal)

Phases are the symbols at-start, over-all and at-end. Formula strings may
be single atoms, (not ...) forms, or (and ...) conjunctions; negative
literals in a pddl-set-fluent formula clear the fluent.
"""

from __future__ import annotations

import os

from prodex.engine.loader import load_file
from prodex.manager.plugins import Plugin, register_plugin_kind
from prodex.pddl.manager import PddlManager
from prodex.pddl.model import GroundAction, PddlError
from prodex.pddl.parser import parse_action_text, parse_condition_text
from prodex.pddl.planner import DEFAULT_NODE_BUDGET, PlanStatus
from prodex.values import FALSE, Symbol, TRUE

RULES_FILE = os.path.join(os.path.dirname(__file__), "rules", "pddl.clp")

EXTENSION_KEY = "pddl"

_PHASES = ("at-start", "over-all", "at-end")


class PddlPlugin(Plugin):
    kind = "pddl"

    def initialize(self) -> None:
        budget = self.settings.get("node_budget", DEFAULT_NODE_BUDGET)
        if not isinstance(budget, int) or isinstance(budget, bool) or budget < 1:
            raise PddlError(
                f"plugin '{self.name}': node_budget must be a positive integer"
            )
        self.node_budget = budget

    def env_init(self, env) -> None:
        if EXTENSION_KEY in env.extensions:
            raise PddlError(
                f"environment '{env.name}' already has a planning registry"
            )
        manager = PddlManager(node_budget=self.node_budget)
        env.extensions[EXTENSION_KEY] = manager
        load_file(env.kernel, RULES_FILE)

        kernel = env.kernel
        resolve = self.services.resolve

        def create_instance(domain, problem, *subs):
            if len(subs) % 2 != 0:
                raise PddlError(
                    "pddl-create-instance substitutions come in key value pairs"
                )
            mapping = {
                str(subs[i]): str(subs[i + 1]) for i in range(0, len(subs), 2)
            }
            return manager.create_instance_from_files(
                resolve(str(domain)), resolve(str(problem)), mapping or None
            )

        def add_goal(instance_id, formula):
            literals = parse_condition_text(str(formula), "goal")
            return manager.add_goal(int(instance_id), literals)

        def ground(instance_id, action_text) -> GroundAction:
            name, args = parse_action_text(str(action_text))
            return manager.instance(int(instance_id)).ground(name, args)

        def check(instance_id, action_text, phase):
            phase = str(phase)
            if phase not in _PHASES:
                raise PddlError(f"unknown condition phase '{phase}'")
            inst = manager.instance(int(instance_id))
            ok = inst.check_condition(ground(instance_id, action_text), phase)
            return TRUE if ok else FALSE

        def apply(instance_id, action_text, phase):
            phase = str(phase)
            if phase not in ("at-start", "at-end"):
                raise PddlError(f"unknown effect phase '{phase}'")
            inst = manager.instance(int(instance_id))
            inst.apply_effects(ground(instance_id, action_text), phase)
            return TRUE

        def set_fluent(instance_id, formula):
            inst = manager.instance(int(instance_id))
            for lit in parse_condition_text(str(formula), "set-fluent"):
                if lit.positive:
                    inst.set_fluent(lit.atom)
                else:
                    inst.clear_fluent(lit.atom)
            return TRUE

        def goal_satisfied(instance_id, goal_id):
            inst = manager.instance(int(instance_id))
            return TRUE if inst.goal_satisfied(int(goal_id)) else FALSE

        def add_filter(instance_id, kind, items):
            kind = str(kind)
            if kind not in ("actions", "objects", "predicates"):
                raise PddlError(
                    f"filter kind must be actions, objects or predicates, "
                    f"not '{kind}'"
                )
            inst = manager.instance(int(instance_id))
            return inst.add_filter(**{kind: str(items).split()})

        def run_planner(instance_id, goal_id, filter_id=None):
            instance_id, goal_id = int(instance_id), int(goal_id)
            filter_id = int(filter_id) if filter_id is not None else None
            job = manager.plan(instance_id, goal_id, filter_id)
            if job.status is PlanStatus.SUCCEEDED:
                plan_id = manager.store_plan(job.plan)
            else:
                plan_id = 0
                self.services.log(
                    env.name,
                    "warn",
                    f"planning failed for instance {instance_id} "
                    f"goal {goal_id}: {job.error}",
                )
            if "pddl-plan-result" in kernel.templates:
                kernel.assert_fact(
                    "pddl-plan-result",
                    {
                        "instance": instance_id,
                        "goal": goal_id,
                        "plan": plan_id,
                        "outcome": Symbol(job.status.value),
                    },
                )
                if job.plan is not None:
                    for index, step in enumerate(job.plan.steps):
                        kernel.assert_fact(
                            "pddl-plan-step",
                            {
                                "plan": plan_id,
                                "index": index,
                                "start": step.time,
                                "action": str(step.action),
                                "duration": step.action.duration,
                            },
                        )
            return plan_id if plan_id else FALSE

        for fn_name, fn in (
            ("pddl-create-instance", create_instance),
            ("pddl-add-goal", add_goal),
            ("pddl-add-filter", add_filter),
            ("pddl-plan", run_planner),
            ("pddl-check", check),
            ("pddl-apply", apply),
            ("pddl-set-fluent", set_fluent),
            ("pddl-goal-satisfied", goal_satisfied),
        ):
            env.register_function(self.name, fn_name, fn)

    def env_destroyed(self, env) -> None:
        env.extensions.pop(EXTENSION_KEY, None)


register_plugin_kind("pddl", PddlPlugin)
