"""Command line front end.

Subcommands:
    run <scenario|config>        run a named scenario or a scenario config file
    facts [--config F] <env>     dump an environment's fact store
    step [--config F] <env> [k]  run up to k rule firings (default 1)
    plan <domain> <problem> <goal-id>      one-shot planning to stdout
    validate <domain> <problem> <plan>     executability check of a plan file
    version
"""

from __future__ import annotations

import argparse
import os
import sys
from typing import Optional

import yaml


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="prodex", description="rule-driven plan executive"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario by name or config path")
    p_run.add_argument("scenario", help="scenario name or path to a config file")
    p_run.add_argument(
        "--report", metavar="FILE", default=None, help="append the report here too"
    )

    p_facts = sub.add_parser("facts", help="dump an environment's fact store")
    p_facts.add_argument("--config", metavar="FILE", default=None)
    p_facts.add_argument("env", help="environment name")

    p_step = sub.add_parser("step", help="run up to k rule firings")
    p_step.add_argument("--config", metavar="FILE", default=None)
    p_step.add_argument("env", help="environment name")
    p_step.add_argument("k", nargs="?", type=int, default=1)

    p_plan = sub.add_parser("plan", help="plan for a goal, print the plan")
    p_plan.add_argument("domain")
    p_plan.add_argument("problem")
    p_plan.add_argument("goal", type=int, help="goal id (the problem goal is 1)")

    p_val = sub.add_parser("validate", help="check a plan file is executable")
    p_val.add_argument("domain")
    p_val.add_argument("problem")
    p_val.add_argument("plan")

    sub.add_parser("version", help="print the package version")
    return parser


def _cmd_run(args) -> int:
    from prodex.scenarios import SCENARIOS, run_scenario

    target = args.scenario
    if os.path.exists(target):
        with open(target, "r", encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
        scenario = (data or {}).get("scenario") or {}
        name = scenario.get("name")
        if name not in SCENARIOS:
            print(
                f"error: config {target!r} names no known scenario "
                f"(scenario.name must be one of {', '.join(sorted(SCENARIOS))})",
                file=sys.stderr,
            )
            return 2
        report = run_scenario(name, config_path=target)
    elif target in SCENARIOS:
        report = run_scenario(target)
    else:
        print(
            f"error: {target!r} is neither a scenario name nor a config file",
            file=sys.stderr,
        )
        return 2
    sys.stdout.write(report.to_text())
    if args.report:
        report.write(args.report)
    return 0 if report.passed else 1


def _manager_env(config: Optional[str], env_name: str):
    """A (manager, environment) pair, or (None, bare kernel) without a config."""
    from prodex.clock import VirtualClock
    from prodex.engine.kernel import Kernel
    from prodex.manager.config import load_config
    from prodex.manager.manager import Manager

    if config is None:
        return None, Kernel(env_name)
    cfg = load_config(config)
    manager = Manager(cfg, clock=VirtualClock())
    manager.configure()
    manager.activate()
    env = manager.environments.get(env_name)
    if env is None:
        manager.shutdown()
        raise KeyError(env_name)
    return manager, env


def _cmd_facts(args) -> int:
    try:
        manager, env = _manager_env(args.config, args.env)
    except KeyError:
        print(f"error: no environment named {args.env!r}", file=sys.stderr)
        return 2
    kernel = env if manager is None else env.kernel
    for line in kernel.fact_lines():
        print(line)
    if manager is not None:
        manager.shutdown()
    return 0


def _cmd_step(args) -> int:
    try:
        manager, env = _manager_env(args.config, args.env)
    except KeyError:
        print(f"error: no environment named {args.env!r}", file=sys.stderr)
        return 2
    if manager is None:
        fired = env.run(args.k)
    else:
        with env.mutate("cli-step"):
            fired = env.kernel.run(args.k)
        manager.shutdown()
    print(f"fired {fired}")
    return 0


def _cmd_plan(args) -> int:
    from prodex.pddl.manager import PddlManager
    from prodex.pddl.model import PddlError
    from prodex.pddl.planfile import format_plan
    from prodex.pddl.planner import PlanStatus

    mgr = PddlManager()
    try:
        iid = mgr.create_instance_from_files(args.domain, args.problem)
        job = mgr.plan(iid, args.goal)
    except (OSError, PddlError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if job.status is not PlanStatus.SUCCEEDED:
        print(f"error: planning failed: {job.error}", file=sys.stderr)
        return 1
    sys.stdout.write(format_plan(job.plan))
    return 0


def _cmd_validate(args) -> int:
    from prodex.pddl.manager import PddlManager
    from prodex.pddl.model import PddlError
    from prodex.pddl.planfile import read_plan_file
    from prodex.pddl.planner import validate_plan

    mgr = PddlManager()
    try:
        iid = mgr.create_instance_from_files(args.domain, args.problem)
        instance = mgr.instance(iid)
        plan = read_plan_file(args.plan, instance)
        validate_plan(instance, plan, goal_id=1)
    except (OSError, PddlError) as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return 1
    print("valid")
    return 0


def _cmd_version(_args) -> int:
    try:
        from importlib.metadata import version

        print(version("prodex"))
    except Exception:
        print("0.1.0")
    return 0


_COMMANDS = {
    "run": _cmd_run,
    "facts": _cmd_facts,
    "step": _cmd_step,
    "plan": _cmd_plan,
    "validate": _cmd_validate,
    "version": _cmd_version,
}


def main(argv: Optional[list] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    return _COMMANDS[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
