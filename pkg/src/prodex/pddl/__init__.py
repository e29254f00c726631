"""PDDL management: parsing, grounded instances, goals, filters, planning."""

from prodex.pddl.manager import PddlManager
from prodex.pddl.model import (
    AT_END,
    AT_START,
    OVER_ALL,
    Action,
    Domain,
    GroundAction,
    PddlError,
    Plan,
    PlanStep,
    Problem,
)
from prodex.pddl.parser import parse_domain, parse_problem
from prodex.pddl.planner import PlanningJob, PlanStatus
from prodex.pddl.instance import PddlInstance

__all__ = [
    "AT_END",
    "AT_START",
    "Action",
    "Domain",
    "GroundAction",
    "OVER_ALL",
    "PddlError",
    "PddlInstance",
    "PddlManager",
    "Plan",
    "PlanStatus",
    "PlanStep",
    "PlanningJob",
    "Problem",
    "parse_domain",
    "parse_problem",
]
