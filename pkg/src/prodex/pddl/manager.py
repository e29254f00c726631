"""Registry holding planning instances, finished plans, and planning jobs.

Domain and problem sources may contain {{key}} placeholders that are filled
from a substitution map before parsing; an unresolved placeholder is an
error naming the key.
"""

from __future__ import annotations

import re
from typing import Dict, Iterable, Optional, Tuple

from prodex.pddl.instance import PddlInstance
from prodex.pddl.model import Atom, Literal, PddlError, Plan
from prodex.pddl.parser import parse_domain, parse_problem
from prodex.pddl.planner import DEFAULT_NODE_BUDGET, PlanningJob

_PLACEHOLDER_RE = re.compile(r"\{\{\s*([A-Za-z0-9_-]+)\s*\}\}")


def substitute_template(text: str, substitutions: Optional[Dict[str, str]]) -> str:
    subs = substitutions or {}

    def repl(match: re.Match) -> str:
        key = match.group(1)
        if key not in subs:
            raise PddlError(f"unresolved template placeholder '{{{{{key}}}}}'")
        return str(subs[key])

    return _PLACEHOLDER_RE.sub(repl, text)


class PddlManager:
    def __init__(self, node_budget: int = DEFAULT_NODE_BUDGET):
        self.node_budget = node_budget
        self.instances: Dict[int, PddlInstance] = {}
        self.plans: Dict[int, Plan] = {}
        self.jobs: Dict[int, PlanningJob] = {}
        self._next_instance = 1
        self._next_plan = 1
        self._next_job = 1

    # --- instances -----------------------------------------------------------

    def create_instance(
        self,
        domain_text: str,
        problem_text: str,
        substitutions: Optional[Dict[str, str]] = None,
    ) -> int:
        domain = parse_domain(substitute_template(domain_text, substitutions))
        problem = parse_problem(
            substitute_template(problem_text, substitutions), domain
        )
        iid = self._next_instance
        self._next_instance += 1
        self.instances[iid] = PddlInstance(iid, domain, problem)
        return iid

    def create_instance_from_files(
        self,
        domain_path: str,
        problem_path: str,
        substitutions: Optional[Dict[str, str]] = None,
    ) -> int:
        with open(domain_path, "r", encoding="utf-8") as fh:
            domain_text = fh.read()
        with open(problem_path, "r", encoding="utf-8") as fh:
            problem_text = fh.read()
        return self.create_instance(domain_text, problem_text, substitutions)

    def instance(self, instance_id: int) -> PddlInstance:
        inst = self.instances.get(instance_id)
        if inst is None:
            raise PddlError(f"no planning instance with id {instance_id}")
        return inst

    def destroy_instance(self, instance_id: int) -> None:
        self.instance(instance_id)
        del self.instances[instance_id]

    # --- goals and fluents ------------------------------------------------------

    def add_goal(self, instance_id: int, literals: Iterable[Literal]) -> int:
        return self.instance(instance_id).add_goal(literals)

    def set_fluent(self, instance_id: int, atom: Atom) -> None:
        self.instance(instance_id).set_fluent(atom)

    def clear_fluent(self, instance_id: int, atom: Atom) -> None:
        self.instance(instance_id).clear_fluent(atom)

    # --- planning ------------------------------------------------------------------

    def create_job(
        self,
        instance_id: int,
        goal_id: int,
        filter_id: Optional[int] = None,
    ) -> Tuple[int, PlanningJob]:
        job = PlanningJob(
            self.instance(instance_id), goal_id, filter_id, self.node_budget
        )
        job_id = self._next_job
        self._next_job += 1
        self.jobs[job_id] = job
        return job_id, job

    def plan(
        self,
        instance_id: int,
        goal_id: int,
        filter_id: Optional[int] = None,
    ) -> PlanningJob:
        """Run a planning job to completion."""
        _, job = self.create_job(instance_id, goal_id, filter_id)
        return job.run()

    def store_plan(self, plan: Plan) -> int:
        plan_id = self._next_plan
        self._next_plan += 1
        self.plans[plan_id] = plan
        return plan_id

    def get_plan(self, plan_id: int) -> Plan:
        plan = self.plans.get(plan_id)
        if plan is None:
            raise PddlError(f"no plan with id {plan_id}")
        return plan
