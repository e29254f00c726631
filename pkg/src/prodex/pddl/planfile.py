"""Plan file import/export.

One step per line in the common solution format:

    0.000: (pick-up b)  [1.000]

Blank lines and ';' comments are skipped. Import validates each step is
well typed against the instance (action exists, arguments are known objects
of fitting types) but does not check executability; the executive finds out
at dispatch time.
"""

from __future__ import annotations

import re
from typing import List

from prodex.pddl.instance import PddlInstance
from prodex.pddl.model import PddlError, Plan, PlanStep

_STEP_RE = re.compile(
    r"^\s*(?P<time>\d+(?:\.\d+)?)\s*:\s*"
    r"\(\s*(?P<body>[^)]*?)\s*\)\s*"
    r"\[\s*(?P<duration>\d+(?:\.\d+)?)\s*\]\s*$"
)


def parse_plan(text: str, instance: PddlInstance) -> Plan:
    steps: List[PlanStep] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split(";", 1)[0].strip()
        if not line:
            continue
        m = _STEP_RE.match(line)
        if m is None:
            raise PddlError(
                f"plan line {lineno}: expected 'time: (action args) "
                f"[duration]', got {raw.strip()!r}"
            )
        body = m.group("body").split()
        if not body:
            raise PddlError(f"plan line {lineno}: empty action")
        name, args = body[0].lower(), [a.lower() for a in body[1:]]
        try:
            ga = instance.ground(name, args)
        except PddlError as exc:
            raise PddlError(f"plan line {lineno}: {exc}") from exc
        # plan files carry their own duration; keep it over the computed one
        duration = float(m.group("duration"))
        if duration != ga.duration:
            ga = type(ga)(
                name=ga.name,
                args=ga.args,
                duration=duration,
                conditions=ga.conditions,
                effects=ga.effects,
            )
        steps.append(PlanStep(time=float(m.group("time")), action=ga))
    return Plan(steps=tuple(steps), provenance="file")


def format_plan(plan: Plan) -> str:
    lines = []
    for step in plan.steps:
        lines.append(
            "%.3f: %s  [%.3f]" % (step.time, step.action, step.action.duration)
        )
    return "\n".join(lines) + ("\n" if lines else "")


def read_plan_file(path: str, instance: PddlInstance) -> Plan:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_plan(fh.read(), instance)


def write_plan_file(path: str, plan: Plan) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_plan(plan))
