"""Execution-side model: workers, tracked action instances, relaxed plans,
and the two structured text side files (sub-action map, failure model)."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Set, Tuple

from prodex.pddl.model import GroundAction, Literal, PddlError, Plan

WORKER_TYPES = ("robot", "machine", "agent")

PENDING = "pending"
DISPATCHED = "dispatched"
RUNNING = "running"
SUCCEEDED = "succeeded"
FAILED = "failed"

DEFAULT_EPSILON = 1e-6


class ExecutiveError(Exception):
    pass


@dataclass
class Worker:
    id: str
    type: str
    current: Optional["ActionInstance"] = None

    @property
    def idle(self) -> bool:
        return self.current is None


class ActionInstance:
    """One step of a plan as tracked by the executive."""

    def __init__(
        self,
        instance_id: int,
        action: GroundAction,
        worker_type: str,
        pddl_instance: int,
        origin: str = "plan",
    ):
        self.id = instance_id
        self.action = action
        self.worker_type = worker_type
        self.pddl_instance = pddl_instance  # where conditions/effects live
        self.origin = origin
        self.status = PENDING
        self.retries = 0
        self.worker_id: Optional[str] = None
        self.group: List["ActionInstance"] = []
        # effect literals already applied early via sub-action feedback
        self.applied: Set[Literal] = set()
        # set on refined children so they are never refined again
        self.refined = origin == "refinement"
        # for agent parents: the spliced plan's final group
        self.waiting_group: Optional[List["ActionInstance"]] = None

    def __repr__(self) -> str:
        return f"<action {self.id} {self.action} {self.status}>"


def relax(plan: Plan, epsilon: float = DEFAULT_EPSILON) -> List[List[GroundAction]]:
    """Group consecutive steps whose start times differ by at most epsilon.

    The plan's steps must already be sorted by start time; group order is
    ascending start time and the groups partition the steps.
    """
    times = [s.time for s in plan.steps]
    if times != sorted(times):
        raise ExecutiveError("plan steps are not sorted by start time")
    groups: List[List[GroundAction]] = []
    prev_time: Optional[float] = None
    for step in plan.steps:
        if prev_time is None or abs(step.time - prev_time) > epsilon:
            groups.append([])
        groups[-1].append(step.action)
        prev_time = step.time
    return groups


def _read_columns(
    text: str, n_columns: int, what: str
) -> List[Tuple[str, ...]]:
    """Whitespace-separated columns, one record per line, '#' comments."""
    rows = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != n_columns:
            raise ExecutiveError(
                f"{what} line {lineno}: expected {n_columns} columns, "
                f"got {len(parts)}"
            )
        rows.append(tuple(p.lower() for p in parts))
    return rows


@dataclass
class SubActionMap:
    """(parent action name, feedback event name) -> sub-action name."""

    entries: Dict[Tuple[str, str], str] = field(default_factory=dict)

    @classmethod
    def parse(cls, text: str) -> "SubActionMap":
        entries = {}
        for parent, event, sub in _read_columns(text, 3, "sub-action map"):
            key = (parent, event)
            if key in entries:
                raise ExecutiveError(
                    f"sub-action map: duplicate entry for {parent}/{event}"
                )
            entries[key] = sub
        return cls(entries)

    @classmethod
    def load(cls, path: str) -> "SubActionMap":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.parse(fh.read())

    def lookup(self, action_name: str, event: str) -> Optional[str]:
        return self.entries.get((action_name, event))

    def validate(self, domain) -> None:
        for (parent, event), sub in self.entries.items():
            if parent not in domain.actions:
                raise ExecutiveError(
                    f"sub-action map: unknown parent action '{parent}'"
                )
            if sub not in domain.actions:
                raise ExecutiveError(
                    f"sub-action map: unknown sub-action '{sub}'"
                )


@dataclass
class FailureModel:
    """action name -> failure-variant action name."""

    variants: Dict[str, str] = field(default_factory=dict)

    @classmethod
    def parse(cls, text: str) -> "FailureModel":
        variants = {}
        for action, variant in _read_columns(text, 2, "failure model"):
            if action in variants:
                raise ExecutiveError(
                    f"failure model: duplicate entry for '{action}'"
                )
            variants[action] = variant
        return cls(variants)

    @classmethod
    def load(cls, path: str) -> "FailureModel":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.parse(fh.read())

    def validate(self, domain) -> None:
        for action, variant in self.variants.items():
            if action not in domain.actions:
                raise ExecutiveError(
                    f"failure model: unknown action '{action}'"
                )
            if variant not in domain.actions:
                raise ExecutiveError(
                    f"failure model: unknown failure variant '{variant}'"
                )
