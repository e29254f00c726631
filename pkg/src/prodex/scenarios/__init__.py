"""Self-contained demo scenarios that exercise the whole stack on a
virtual clock. Each runner returns a ScenarioReport whose check lines
decide pass/fail."""

from prodex.scenarios.blocks import run_blocksworld
from prodex.scenarios.logistics import run_logistics
from prodex.scenarios.report import ScenarioReport
from prodex.scenarios.turtle import run_turtle

SCENARIOS = {
    "turtle": run_turtle,
    "blocksworld": run_blocksworld,
    "logistics": run_logistics,
}


def run_scenario(name: str, **kwargs) -> ScenarioReport:
    try:
        runner = SCENARIOS[name]
    except KeyError:
        raise ValueError(
            "unknown scenario %r (choose from %s)"
            % (name, ", ".join(sorted(SCENARIOS)))
        ) from None
    return runner(**kwargs)


__all__ = [
    "SCENARIOS",
    "ScenarioReport",
    "run_blocksworld",
    "run_logistics",
    "run_scenario",
    "run_turtle",
]
