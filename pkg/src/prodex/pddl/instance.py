"""A grounded planning instance: world state, goals, filters, grounding.

State is a set of ground atoms plus a numeric valuation for function values.
Effects apply deletes before adds within each phase. Ground actions are
enumerated in lexicographic order of (action name, argument names) so that
planning is deterministic.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, List, Optional, Set, Tuple

from prodex.pddl.model import (
    AT_END,
    AT_START,
    Atom,
    COND_PHASES,
    Domain,
    Duration,
    EFFECT_PHASES,
    GroundAction,
    Literal,
    NumericEffect,
    OVER_ALL,
    PddlError,
    Problem,
)


@dataclass(frozen=True)
class Filter:
    """Allow-lists for grounding; None means everything is allowed."""

    actions: Optional[FrozenSet[str]] = None
    objects: Optional[FrozenSet[str]] = None
    predicates: Optional[FrozenSet[str]] = None


class PddlInstance:
    def __init__(self, instance_id: int, domain: Domain, problem: Problem):
        self.id = instance_id
        self.domain = domain
        self.problem = problem
        self.objects: Dict[str, str] = dict(problem.objects)
        self.state: Set[Atom] = set(problem.init)
        self.numeric: Dict[Atom, float] = {
            fn: value for fn, value in problem.numeric_init
        }
        self.goals: Dict[int, Tuple[Literal, ...]] = {}
        self.filters: Dict[int, Filter] = {}
        self._next_goal = 1
        self._next_filter = 1
        self._ground_cache: Optional[List[GroundAction]] = None
        if problem.goal:
            self.add_goal(problem.goal)

    # --- fluents ------------------------------------------------------------

    def _check_atom(self, atom: Atom, where: str) -> None:
        pred = self.domain.predicates.get(atom[0])
        if pred is None:
            raise PddlError(f"{where}: undeclared predicate '{atom[0]}'")
        if len(atom) - 1 != len(pred.param_types):
            raise PddlError(
                f"{where}: predicate '{atom[0]}' takes "
                f"{len(pred.param_types)} arguments, got {len(atom) - 1}"
            )
        for arg, expected in zip(atom[1:], pred.param_types):
            ty = self.objects.get(arg)
            if ty is None:
                raise PddlError(f"{where}: unknown object '{arg}'")
            if not self.domain.is_subtype(ty, expected):
                raise PddlError(
                    f"{where}: object '{arg}' has type '{ty}', "
                    f"'{atom[0]}' expects '{expected}'"
                )

    def set_fluent(self, atom: Atom) -> None:
        self._check_atom(atom, "set-fluent")
        self.state.add(tuple(atom))

    def clear_fluent(self, atom: Atom) -> None:
        self._check_atom(atom, "clear-fluent")
        self.state.discard(tuple(atom))

    def set_function(self, fn: Atom, value: float) -> None:
        decl = self.domain.functions.get(fn[0])
        if decl is None:
            raise PddlError(f"set-function: undeclared function '{fn[0]}'")
        if len(fn) - 1 != len(decl.param_types):
            raise PddlError(
                f"set-function: '{fn[0]}' takes {len(decl.param_types)} "
                f"arguments, got {len(fn) - 1}"
            )
        for arg in fn[1:]:
            if arg not in self.objects:
                raise PddlError(f"set-function: unknown object '{arg}'")
        self.numeric[tuple(fn)] = float(value)
        self._ground_cache = None  # durations may change

    def fluents(self) -> List[Atom]:
        return sorted(self.state)

    def add_object(self, name: str, type_name: str) -> None:
        if type_name != "object" and type_name not in self.domain.types:
            raise PddlError(f"add-object: undeclared type '{type_name}'")
        if name in self.objects:
            raise PddlError(f"add-object: object '{name}' already exists")
        self.objects[name] = type_name
        self._ground_cache = None

    # --- goals ----------------------------------------------------------------

    def add_goal(self, literals: Iterable[Literal]) -> int:
        lits = tuple(literals)
        for lit in lits:
            self._check_atom(lit.atom, "add-goal")
        goal_id = self._next_goal
        self._next_goal += 1
        self.goals[goal_id] = lits
        return goal_id

    def remove_goal(self, goal_id: int) -> None:
        if goal_id not in self.goals:
            raise PddlError(f"no goal with id {goal_id}")
        del self.goals[goal_id]

    def goal_satisfied(
        self, goal_id: int, state: Optional[Set[Atom]] = None
    ) -> bool:
        if goal_id not in self.goals:
            raise PddlError(f"no goal with id {goal_id}")
        if state is None:
            state = self.state
        return all(
            (lit.atom in state) == lit.positive for lit in self.goals[goal_id]
        )

    # --- filters ---------------------------------------------------------------

    def add_filter(
        self,
        actions: Optional[Iterable[str]] = None,
        objects: Optional[Iterable[str]] = None,
        predicates: Optional[Iterable[str]] = None,
    ) -> int:
        filter_id = self._next_filter
        self._next_filter += 1
        self.filters[filter_id] = Filter(
            actions=None if actions is None else frozenset(actions),
            objects=None if objects is None else frozenset(objects),
            predicates=None if predicates is None else frozenset(predicates),
        )
        return filter_id

    def _passes_filter(self, ga: GroundAction, flt: Filter) -> bool:
        if flt.actions is not None and ga.name not in flt.actions:
            return False
        if flt.objects is not None and any(
            arg not in flt.objects for arg in ga.args
        ):
            return False
        if flt.predicates is not None:
            used = set()
            for phase in COND_PHASES:
                for lit in ga.conditions.get(phase, ()):
                    used.add(lit.atom[0])
            for phase in EFFECT_PHASES:
                for eff in ga.effects.get(phase, ()):
                    if isinstance(eff, Literal):
                        used.add(eff.atom[0])
            if not used <= flt.predicates:
                return False
        return True

    # --- grounding ----------------------------------------------------------------

    def _objects_of_type(self, type_name: str) -> List[str]:
        return sorted(
            name
            for name, ty in self.objects.items()
            if self.domain.is_subtype(ty, type_name)
        )

    def _resolve_duration(self, duration: Duration) -> float:
        if duration.fluent is None:
            return float(duration.constant or 0.0)
        return self.numeric.get(duration.fluent, 0.0)

    def _instantiate(self, action, args: Tuple[str, ...]) -> GroundAction:
        binding = {var: arg for (var, _), arg in zip(action.params, args)}
        conditions = {
            phase: tuple(lit.substitute(binding) for lit in lits)
            for phase, lits in action.conditions.items()
        }
        effects = {}
        for phase, effs in action.effects.items():
            effects[phase] = tuple(eff.substitute(binding) for eff in effs)
        duration = self._resolve_duration(action.duration.substitute(binding))
        return GroundAction(
            name=action.name,
            args=args,
            duration=duration,
            conditions=conditions,
            effects=effects,
        )

    def ground_actions(
        self, filter_id: Optional[int] = None
    ) -> List[GroundAction]:
        flt = None
        if filter_id is not None:
            flt = self.filters.get(filter_id)
            if flt is None:
                raise PddlError(f"no filter with id {filter_id}")
        if self._ground_cache is None:
            out: List[GroundAction] = []
            for name in sorted(self.domain.actions):
                action = self.domain.actions[name]
                pools = [
                    self._objects_of_type(ty) for _, ty in action.params
                ]
                for combo in itertools.product(*pools):
                    out.append(self._instantiate(action, tuple(combo)))
            self._ground_cache = out
        if flt is None:
            return list(self._ground_cache)
        return [ga for ga in self._ground_cache if self._passes_filter(ga, flt)]

    def ground(self, name: str, args: Iterable[str]) -> GroundAction:
        """Instantiate one action, validating arity and argument types."""
        action = self.domain.actions.get(name)
        if action is None:
            raise PddlError(f"unknown action '{name}'")
        args = tuple(args)
        if len(args) != len(action.params):
            raise PddlError(
                f"action '{name}' takes {len(action.params)} arguments, "
                f"got {len(args)}"
            )
        for arg, (var, ty) in zip(args, action.params):
            actual = self.objects.get(arg)
            if actual is None:
                raise PddlError(f"unknown object '{arg}' for '{name}'")
            if not self.domain.is_subtype(actual, ty):
                raise PddlError(
                    f"argument '{arg}' of '{name}' has type '{actual}', "
                    f"expected '{ty}'"
                )
        return self._instantiate(action, args)

    def ground_related(
        self, parent: GroundAction, target_name: str
    ) -> GroundAction:
        """Ground another action by reusing the parent's bindings, matched by
        parameter name. Used for sub-actions and failure variants, whose
        parameters must be a subset of the parent's."""
        parent_def = self.domain.actions.get(parent.name)
        if parent_def is None:
            raise PddlError(f"unknown action '{parent.name}'")
        target = self.domain.actions.get(target_name)
        if target is None:
            raise PddlError(f"unknown action '{target_name}'")
        binding = {
            var: arg for (var, _), arg in zip(parent_def.params, parent.args)
        }
        args = []
        for var, _ in target.params:
            if var not in binding:
                raise PddlError(
                    f"action '{target_name}' parameter '{var}' is not bound "
                    f"by '{parent.name}'"
                )
            args.append(binding[var])
        return self.ground(target_name, tuple(args))

    # --- checking and applying ------------------------------------------------------

    def check_condition(
        self,
        ga: GroundAction,
        phase: str,
        state: Optional[Set[Atom]] = None,
    ) -> bool:
        if phase not in COND_PHASES:
            raise PddlError(f"unknown condition phase '{phase}'")
        if state is None:
            state = self.state
        return all(
            (lit.atom in state) == lit.positive
            for lit in ga.conditions.get(phase, ())
        )

    def _numeric_value(self, ref) -> float:
        if isinstance(ref, float):
            return ref
        return self.numeric.get(ref, 0.0)

    def apply_effects(
        self,
        ga: GroundAction,
        phase: str,
        state: Optional[Set[Atom]] = None,
    ) -> Set[Atom]:
        """Apply one phase's effects. With an explicit state the result is a
        new set and numeric effects are skipped; otherwise the instance state
        mutates in place."""
        if phase not in EFFECT_PHASES:
            raise PddlError(f"unknown effect phase '{phase}'")
        mutating = state is None
        target = self.state if mutating else set(state)
        effs = ga.effects.get(phase, ())
        for eff in effs:  # deletes first
            if isinstance(eff, Literal) and not eff.positive:
                target.discard(eff.atom)
        for eff in effs:
            if isinstance(eff, Literal) and eff.positive:
                target.add(eff.atom)
        if mutating:
            self.apply_numeric(e for e in effs if isinstance(e, NumericEffect))
        return target

    def apply_effect_literals(self, literals: Iterable[Literal]) -> None:
        """Apply a specific set of literal effects, deletes before adds."""
        literals = list(literals)
        for lit in literals:
            if not lit.positive:
                self.state.discard(lit.atom)
        for lit in literals:
            if lit.positive:
                self.state.add(lit.atom)

    def apply_numeric(self, effects: Iterable[NumericEffect]) -> None:
        for eff in effects:
            value = self._numeric_value(eff.value)
            if eff.op == "assign":
                self.numeric[eff.function] = value
            elif eff.op == "increase":
                self.numeric[eff.function] = (
                    self.numeric.get(eff.function, 0.0) + value
                )
            else:
                self.numeric[eff.function] = (
                    self.numeric.get(eff.function, 0.0) - value
                )
            self._ground_cache = None

    def snapshot(self) -> FrozenSet[Atom]:
        return frozenset(self.state)
