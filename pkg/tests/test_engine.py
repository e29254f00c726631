"""Kernel semantics: fact store, agenda ordering, refraction, actions."""

import pytest

from prodex.engine.kernel import EngineError, Kernel
from prodex.engine.loader import load_text
from prodex.engine.model import SlotDef
from prodex.values import NIL, Symbol, ValueKind


@pytest.fixture
def kernel():
    return Kernel("test")


def fired_names(kernel):
    """Run to quiescence, returning rule names in firing order."""
    order = []
    real_pop = kernel.agenda.pop_top

    def spy():
        act = real_pop()
        if act is not None:
            order.append(act.rule.name)
        return act

    kernel.agenda.pop_top = spy
    try:
        kernel.run()
    finally:
        kernel.agenda.pop_top = real_pop
    return order


class TestFactStore:
    def test_initial_fact_present(self, kernel):
        assert kernel.fact_lines() == ["f-0 (initial-fact)"]

    def test_template_fact_round_trip(self, kernel):
        kernel.define_template(
            "goal", [SlotDef("id", ValueKind.INTEGER), SlotDef("mode", ValueKind.SYMBOL)]
        )
        fid = kernel.assert_fact("goal", {"id": 3, "mode": Symbol("FORMULATED")})
        assert fid == 1
        assert "f-1 (goal (id 3) (mode FORMULATED))" in kernel.fact_lines()

    def test_untyped_slot_defaults_to_nil(self, kernel):
        kernel.define_template("t", [SlotDef("a", None)])
        fid = kernel.assert_fact("t", {})
        assert kernel.facts[fid].values["a"] == NIL

    def test_missing_typed_slot_rejected(self, kernel):
        kernel.define_template("t", [SlotDef("a", ValueKind.INTEGER)])
        with pytest.raises(EngineError, match="missing value"):
            kernel.assert_fact("t", {})

    def test_unknown_slot_rejected(self, kernel):
        kernel.define_template("t", [SlotDef("a", None)])
        with pytest.raises(EngineError, match="no slot 'b'"):
            kernel.assert_fact("t", {"b": 1})

    def test_slot_type_enforced(self, kernel):
        kernel.define_template("t", [SlotDef("a", ValueKind.INTEGER)])
        with pytest.raises(EngineError, match="expects integer"):
            kernel.assert_fact("t", {"a": Symbol("x")})

    def test_int_widens_in_float_slot(self, kernel):
        kernel.define_template("t", [SlotDef("a", ValueKind.FLOAT)])
        fid = kernel.assert_fact("t", {"a": 2})
        assert kernel.facts[fid].values["a"] == 2.0
        assert isinstance(kernel.facts[fid].values["a"], float)

    def test_ordered_facts_for_undeclared_heads(self, kernel):
        fid = kernel.assert_fact("stage", [Symbol("running"), 2])
        assert kernel.facts[fid].ordered
        assert "f-1 (stage running 2)" in kernel.fact_lines()

    def test_dict_values_need_a_template(self, kernel):
        with pytest.raises(EngineError, match="unknown template"):
            kernel.assert_fact("nope", {"a": 1})

    def test_duplicate_content_gets_distinct_ids(self, kernel):
        a = kernel.assert_fact("m", [1])
        b = kernel.assert_fact("m", [1])
        assert a != b

    def test_ids_are_never_reused(self, kernel):
        a = kernel.assert_fact("m", [1])
        kernel.retract_fact(a)
        b = kernel.assert_fact("m", [1])
        assert b == a + 1

    def test_double_retract_rejected(self, kernel):
        fid = kernel.assert_fact("m", [])
        kernel.retract_fact(fid)
        with pytest.raises(EngineError, match="does not exist"):
            kernel.retract_fact(fid)

    def test_duplicate_template_rejected(self, kernel):
        kernel.define_template("t", [])
        with pytest.raises(EngineError, match="already defined"):
            kernel.define_template("t", [])


class TestReset:
    def test_reset_restores_initial_fact_and_deffacts(self, kernel):
        load_text(kernel, "(deffacts base (stage one) (stage two))")
        kernel.assert_fact("junk", [])
        kernel.reset()
        assert kernel.fact_lines() == [
            "f-0 (initial-fact)",
            "f-1 (stage one)",
            "f-2 (stage two)",
        ]

    def test_reset_clears_refraction(self, kernel):
        load_text(kernel, "(defrule boot => (assert (booted)))")
        kernel.reset()
        assert kernel.run() == 1
        assert kernel.run() == 0
        kernel.reset()
        assert kernel.run() == 1


class TestFiring:
    def test_empty_agenda_runs_zero(self, kernel):
        assert kernel.run() == 0

    def test_empty_antecedent_fires_once(self, kernel):
        load_text(kernel, "(defrule boot => (assert (ok)))")
        kernel.reset()
        assert kernel.run() == 1
        assert any("(ok)" in line for line in kernel.fact_lines())
        # refraction: the initial-fact token is unchanged
        assert kernel.run() == 0

    def test_run_limit(self, kernel):
        load_text(
            kernel,
            """
            (defrule grow (count ?n) (test (< ?n 10)) =>
              (assert (count (+ ?n 1))))
            """,
        )
        kernel.assert_fact("count", [0])
        assert kernel.run(3) == 3
        assert kernel.run() == 7

    def test_salience_orders_firing(self, kernel):
        load_text(
            kernel,
            """
            (defrule low (declare (salience -5)) (go) => (assert (saw low)))
            (defrule high (declare (salience 5)) (go) => (assert (saw high)))
            (defrule mid (go) => (assert (saw mid)))
            """,
        )
        kernel.assert_fact("go", [])
        assert fired_names(kernel) == ["high", "mid", "low"]

    def test_recency_breaks_salience_ties(self, kernel):
        load_text(kernel, "(defrule r (item ?x) => (assert (seen ?x)))")
        kernel.assert_fact("item", [Symbol("first")])
        kernel.assert_fact("item", [Symbol("second")])
        kernel.run()
        lines = kernel.fact_lines()
        # the newer item fires first, so (seen second) has the lower id
        assert lines.index("f-3 (seen second)") < lines.index("f-4 (seen first)")

    def test_definition_order_breaks_recency_ties(self, kernel):
        load_text(
            kernel,
            """
            (defrule early (go) => (assert (from early)))
            (defrule late (go) => (assert (from late)))
            """,
        )
        kernel.assert_fact("go", [])
        assert fired_names(kernel) == ["early", "late"]

    def test_refraction_survives_unrelated_asserts(self, kernel):
        load_text(kernel, "(defrule r (trigger) => (assert (out)))")
        kernel.assert_fact("trigger", [])
        assert kernel.run() == 1
        kernel.assert_fact("noise", [])
        assert kernel.run() == 0

    def test_new_fact_is_a_new_activation(self, kernel):
        load_text(kernel, "(defrule r ?t <- (trigger) => (retract ?t))")
        kernel.assert_fact("trigger", [])
        assert kernel.run() == 1
        kernel.assert_fact("trigger", [])
        assert kernel.run() == 1

    def test_retract_removes_pending_activation(self, kernel):
        load_text(kernel, "(defrule r (trigger) => (assert (out)))")
        fid = kernel.assert_fact("trigger", [])
        kernel.retract_fact(fid)
        assert kernel.run() == 0

    def test_variable_join_across_patterns(self, kernel):
        load_text(
            kernel,
            """
            (defrule pair (left ?x) (right ?x) => (assert (match ?x)))
            """,
        )
        kernel.assert_fact("left", [Symbol("a")])
        kernel.assert_fact("left", [Symbol("b")])
        kernel.assert_fact("right", [Symbol("b")])
        kernel.run()
        matches = [l for l in kernel.fact_lines() if "(match" in l]
        assert matches == ["f-4 (match b)"]

    def test_repeated_variable_within_pattern(self, kernel):
        load_text(kernel, "(defrule twin (pair ?x ?x) => (assert (twin ?x)))")
        kernel.assert_fact("pair", [1, 2])
        kernel.assert_fact("pair", [3, 3])
        kernel.run()
        assert any("(twin 3)" in l for l in kernel.fact_lines())
        assert not any("(twin 1)" in l for l in kernel.fact_lines())


class TestNegation:
    def test_not_blocks_while_present(self, kernel):
        load_text(
            kernel,
            """
            (defrule quiet (go) (not (blocker)) => (assert (ran)))
            """,
        )
        kernel.assert_fact("go", [])
        blocker = kernel.assert_fact("blocker", [])
        assert kernel.run() == 0
        kernel.retract_fact(blocker)
        assert kernel.run() == 1

    def test_not_toggle_allows_refire(self, kernel):
        # firing dies when the blocker appears, so refraction is dropped and
        # the rule may fire again once the blocker goes away
        load_text(kernel, "(defrule r (go) (not (blocker)) => (assert (out)))")
        kernel.assert_fact("go", [])
        assert kernel.run() == 1
        blocker = kernel.assert_fact("blocker", [])
        kernel.retract_fact(blocker)
        assert kernel.run() == 1

    def test_not_with_bound_variable(self, kernel):
        load_text(
            kernel,
            """
            (defrule lonely (item ?x) (not (partner ?x)) => (assert (single ?x)))
            """,
        )
        kernel.assert_fact("item", [Symbol("a")])
        kernel.assert_fact("item", [Symbol("b")])
        kernel.assert_fact("partner", [Symbol("a")])
        kernel.run()
        singles = sorted(l for l in kernel.fact_lines() if "(single" in l)
        assert len(singles) == 1
        assert "(single b)" in singles[0]


class TestCEAndActions:
    def test_test_ce_filters(self, kernel):
        load_text(
            kernel,
            """
            (defrule big (n ?v) (test (> ?v 10)) => (assert (big ?v)))
            """,
        )
        kernel.assert_fact("n", [5])
        kernel.assert_fact("n", [15])
        kernel.run()
        bigs = [l for l in kernel.fact_lines() if "(big" in l]
        assert bigs == ["f-3 (big 15)"]

    def test_test_rejects_unbound_variable(self, kernel):
        with pytest.raises(EngineError, match="not bound"):
            load_text(kernel, "(defrule r (a) (test (> ?v 1)) => )")

    def test_test_rejects_impure_calls(self, kernel):
        kernel.register_function("now", lambda: 0.0)
        with pytest.raises(EngineError, match="not allowed in a test"):
            load_text(kernel, "(defrule r (n ?v) (test (> (now) ?v)) => )")

    def test_action_rejects_unbound_variable(self, kernel):
        with pytest.raises(EngineError, match="unbound"):
            load_text(kernel, "(defrule r (a) => (assert (out ?v)))")

    def test_bind_introduces_action_variable(self, kernel):
        load_text(
            kernel,
            """
            (defrule r (n ?v) => (bind ?w (* ?v 2)) (assert (double ?w)))
            """,
        )
        kernel.assert_fact("n", [4])
        kernel.run()
        assert any("(double 8)" in l for l in kernel.fact_lines())

    def test_fact_var_retract(self, kernel):
        load_text(kernel, "(defrule consume ?f <- (job ?n) => (retract ?f))")
        kernel.assert_fact("job", [1])
        kernel.assert_fact("job", [2])
        kernel.run()
        assert not any("(job" in l for l in kernel.fact_lines())

    def test_action_error_aborts_rule_but_run_continues(self, kernel):
        load_text(
            kernel,
            """
            (defrule bad (declare (salience 10)) ?f <- (go) =>
              (retract ?f) (retract ?f))
            (defrule good (go) => (assert (survived)))
            """,
        )
        kernel.assert_fact("go", [])
        fired = kernel.run()
        # bad aborts mid-action (double retract), still counts as fired;
        # good lost its activation when (go) went away
        assert fired == 1
        assert ("ERROR", "rule 'bad' aborted: EngineError: fact f-1 does not exist") in [
            (lvl, txt) for lvl, txt in kernel.log_records
        ]
        assert not any("(survived)" in l for l in kernel.fact_lines())

    def test_printout_collects_console_lines(self, kernel):
        load_text(
            kernel,
            """
            (defrule speak (n ?v) => (printout t "value=" ?v crlf))
            """,
        )
        kernel.assert_fact("n", [9])
        kernel.run()
        assert kernel.console == ["value=9"]


class TestEvalAndFunctions:
    def test_arithmetic(self, kernel):
        assert kernel.eval_text("(+ 1 2 3)") == 6
        assert kernel.eval_text("(- 10 4 1)") == 5
        assert kernel.eval_text("(/ 7 2)") == 3.5
        assert kernel.eval_text("(mod 7 3)") == 1

    def test_type_aware_equality(self, kernel):
        assert kernel.eval_text("(eq 1 1.0)") == Symbol("FALSE")
        assert kernel.eval_text('(eq foo "foo")') == Symbol("FALSE")
        assert kernel.eval_text("(eq foo foo)") == Symbol("TRUE")
        assert kernel.eval_text("(neq 1 2)") == Symbol("TRUE")

    def test_comparison_chains(self, kernel):
        assert kernel.eval_text("(< 1 2 3)") == Symbol("TRUE")
        assert kernel.eval_text("(< 1 3 2)") == Symbol("FALSE")

    def test_string_and_symbol_cat(self, kernel):
        assert kernel.eval_text('(str-cat "a" b 1)') == "ab1"
        assert kernel.eval_text("(sym-cat a - b)") == Symbol("a-b")

    def test_registered_function_callable_from_rules(self, kernel):
        seen = []
        kernel.register_function("record", lambda v: seen.append(v) or Symbol("TRUE"))
        load_text(kernel, "(defrule r (n ?v) => (record ?v))")
        kernel.assert_fact("n", [42])
        kernel.run()
        assert seen == [42]

    def test_builtin_shadowing_rejected(self, kernel):
        with pytest.raises(EngineError, match="shadow"):
            kernel.register_function("assert", lambda: None)
        with pytest.raises(EngineError, match="shadow"):
            kernel.register_function("+", lambda: None)


class TestLoader:
    def test_counts_constructs(self, kernel):
        n = load_text(
            kernel,
            """
            (deftemplate t (slot a))
            (deffacts base (t (a x)))
            (defrule r (t (a ?v)) => (assert (saw ?v)))
            """,
        )
        assert n == 3

    def test_reload_is_idempotent(self, kernel):
        src = "(deftemplate t (slot a)) (defrule r (t (a ?v)) => )"
        load_text(kernel, src)
        load_text(kernel, src)  # same text: no redefinition error
        assert len(kernel.rules) == 1

    def test_conflicting_redefinition_rejected(self, kernel):
        load_text(kernel, "(defrule r (a) => )")
        with pytest.raises(EngineError, match="already defined differently"):
            load_text(kernel, "(defrule r (b) => )")

    def test_top_level_call_is_evaluated(self, kernel):
        load_text(kernel, "(assert (seeded 1))")
        assert any("(seeded 1)" in l for l in kernel.fact_lines())

    def test_duplicate_rule_names_across_sources(self, kernel, tmp_path):
        from prodex.engine.loader import load_file

        path = tmp_path / "rules.clp"
        path.write_text("(defrule r (a) => )\n")
        load_file(kernel, str(path))
        with pytest.raises(EngineError, match="rules.clp"):
            load_text(kernel, "(defrule r (c) => )", origin="rules.clp")
