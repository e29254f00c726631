"""Partial-order plan execution: relaxation, dispatch, feedback, recovery."""

from prodex.executive.executive import (
    ABANDONED,
    EXECUTING,
    IDLE,
    PLAN_SUCCEEDED,
    PlanExecutive,
)
from prodex.executive.model import (
    ActionInstance,
    ExecutiveError,
    FailureModel,
    SubActionMap,
    Worker,
    relax,
)

__all__ = [
    "ABANDONED",
    "ActionInstance",
    "EXECUTING",
    "ExecutiveError",
    "FailureModel",
    "IDLE",
    "PLAN_SUCCEEDED",
    "PlanExecutive",
    "SubActionMap",
    "Worker",
    "relax",
]
