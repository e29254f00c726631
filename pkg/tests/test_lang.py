"""Lexer, reader and construct analysis."""

import pytest
from hypothesis import given, strategies as st

from prodex.lang.constructs import (
    AnalysisError,
    Call,
    FactsDecl,
    NotCE,
    PatternCE,
    RuleDecl,
    TemplateDecl,
    TestCE,
    analyze,
    analyze_one,
)
from prodex.lang.lexer import LexError, Token, TokenKind, tokenize

TestCE.__test__ = False  # dataclass, not a test case
from prodex.lang.sexpr import Atom, ListExpr, ParseError, parse, structurally_equal, to_text
from prodex.values import ValueKind


def kinds(text):
    return [t.kind for t in tokenize(text)]


class TestLexer:
    def test_basic_kinds(self):
        toks = tokenize('(assert (goal (id 7) (weight 1.5) (who ?r) (note "hi")))')
        assert [t.kind for t in toks[:3]] == [
            TokenKind.LPAREN,
            TokenKind.SYMBOL,
            TokenKind.LPAREN,
        ]
        by_text = {t.text: t.kind for t in toks}
        assert by_text["7"] is TokenKind.INTEGER
        assert by_text["1.5"] is TokenKind.FLOAT
        assert by_text["?r"] is TokenKind.VARIABLE
        assert by_text["hi"] is TokenKind.STRING

    def test_positions_are_one_based(self):
        toks = tokenize("(a\n  b)")
        assert (toks[0].line, toks[0].column) == (1, 1)
        assert (toks[1].line, toks[1].column) == (1, 2)
        b = toks[2]
        assert (b.text, b.line, b.column) == ("b", 2, 3)

    def test_comments_run_to_end_of_line(self):
        toks = tokenize("a ; everything (here) is skipped\nb")
        assert [t.text for t in toks] == ["a", "b"]
        assert toks[1].line == 2

    def test_string_escapes(self):
        toks = tokenize(r'"a\"b\\c"')
        assert toks[0].kind is TokenKind.STRING
        assert toks[0].text == 'a"b\\c'

    def test_unknown_escape_kept_verbatim(self):
        toks = tokenize(r'"a\nb"')
        assert toks[0].text == "a\\nb"

    def test_unterminated_string_reports_start(self):
        with pytest.raises(LexError) as err:
            tokenize('x\n  "oops')
        assert err.value.line == 2
        assert err.value.column == 3

    def test_bare_question_mark_rejected(self):
        with pytest.raises(LexError):
            tokenize("(? )")

    @pytest.mark.parametrize(
        "word,kind",
        [
            ("12", TokenKind.INTEGER),
            ("-12", TokenKind.INTEGER),
            ("+5", TokenKind.INTEGER),
            ("1.5", TokenKind.FLOAT),
            ("1e3", TokenKind.FLOAT),
            ("1.5e-3", TokenKind.FLOAT),
            ("1e", TokenKind.SYMBOL),
            ("1.2.3", TokenKind.SYMBOL),
            ("-", TokenKind.SYMBOL),
            ("=>", TokenKind.SYMBOL),
            ("a1", TokenKind.SYMBOL),
            ("nil", TokenKind.SYMBOL),
        ],
    )
    def test_numeric_grammar(self, word, kind):
        toks = tokenize(word)
        assert len(toks) == 1
        assert toks[0].kind is kind


class TestReader:
    def test_nesting(self):
        (expr,) = parse("(a (b c) ())")
        assert isinstance(expr, ListExpr)
        assert len(expr) == 3
        inner = expr[1]
        assert isinstance(inner, ListExpr)
        assert [a.text for a in inner] == ["b", "c"]
        assert len(expr[2]) == 0

    def test_multiple_top_level(self):
        exprs = parse("(a) b (c)")
        assert len(exprs) == 3
        assert isinstance(exprs[1], Atom)

    def test_unmatched_open(self):
        with pytest.raises(ParseError) as err:
            parse("(a (b)")
        assert err.value.column == 1

    def test_unmatched_close(self):
        with pytest.raises(ParseError):
            parse("(a))")

    def test_print_examples(self):
        (expr,) = parse('(p  1   "a b"  ?x)')
        assert to_text(expr) == '(p 1 "a b" ?x)'


# --- print/parse round trip -------------------------------------------------

_symbol = st.from_regex(r"[a-z][a-z0-9<>=+*-]{0,8}", fullmatch=True).filter(
    lambda s: tokenize(s)[0].kind is TokenKind.SYMBOL
)
_variable = st.from_regex(r"\?[a-z][a-z0-9-]{0,6}", fullmatch=True)
_integer = st.integers(-10**9, 10**9).map(str)
_float = st.floats(allow_nan=False, allow_infinity=False).map(repr)
_string = st.text(max_size=20)


def _atom(kind, text):
    return Atom(Token(kind, text, 0, 0))


_atoms = st.one_of(
    _symbol.map(lambda t: _atom(TokenKind.SYMBOL, t)),
    _variable.map(lambda t: _atom(TokenKind.VARIABLE, t)),
    _integer.map(lambda t: _atom(TokenKind.INTEGER, t)),
    _float.map(lambda t: _atom(TokenKind.FLOAT, t)),
    _string.map(lambda t: _atom(TokenKind.STRING, t)),
)

_sexprs = st.recursive(
    _atoms,
    lambda children: st.lists(children, max_size=5).map(lambda xs: ListExpr(tuple(xs))),
    max_leaves=25,
)


@given(_sexprs)
def test_print_parse_round_trip(expr):
    """Printing any expression and reading it back is the identity, up to
    source positions."""
    text = to_text(expr)
    if isinstance(expr, Atom):
        # bare atoms re-parse as a single top-level atom
        (back,) = parse(text)
    else:
        (back,) = parse(text)
    assert structurally_equal(expr, back)
    # and printing is stable from then on
    assert to_text(back) == text


@given(st.lists(_sexprs, max_size=4))
def test_round_trip_preserves_top_level_count(exprs):
    text = " ".join(to_text(e) for e in exprs)
    back = parse(text)
    assert len(back) == len(exprs)
    for a, b in zip(exprs, back):
        assert structurally_equal(a, b)


# --- construct analysis -----------------------------------------------------


def analyze_text(text):
    return analyze(parse(text))


class TestTemplates:
    def test_slots_and_types(self):
        (decl,) = analyze_text(
            "(deftemplate goal (slot id (type INTEGER)) (slot mode (type SYMBOL)) (slot misc))"
        )
        assert isinstance(decl, TemplateDecl)
        assert decl.name == "goal"
        assert [s.name for s in decl.slots] == ["id", "mode", "misc"]
        assert decl.slots[0].kind is ValueKind.INTEGER
        assert decl.slots[2].kind is None

    def test_duplicate_slot(self):
        with pytest.raises(AnalysisError, match="duplicate slot"):
            analyze_text("(deftemplate t (slot a) (slot a))")

    def test_unknown_type(self):
        with pytest.raises(AnalysisError, match="unknown slot type"):
            analyze_text("(deftemplate t (slot a (type BLOB)))")

    def test_body_must_be_slots(self):
        with pytest.raises(AnalysisError):
            analyze_text("(deftemplate t (field a))")

    def test_requires_name(self):
        with pytest.raises(AnalysisError, match="requires a name"):
            analyze_text("(deftemplate (slot a))")


class TestRules:
    def test_full_rule(self):
        (decl,) = analyze_text(
            """
            (defrule pick
              "docstring is allowed and skipped"
              (declare (salience -10))
              ?g <- (goal (id ?id) (mode FORMULATED))
              (not (blocked (goal ?id)))
              (test (> ?id 0))
              =>
              (retract ?g)
              (assert (goal (id ?id) (mode SELECTED))))
            """
        )
        assert isinstance(decl, RuleDecl)
        assert decl.salience == -10
        pat, neg, chk = decl.conditions
        assert isinstance(pat, PatternCE)
        assert pat.fact_var == "?g"
        assert pat.head == "goal"
        assert pat.slot_pairs is not None and pat.positional is None
        assert isinstance(neg, NotCE)
        assert neg.pattern.head == "blocked"
        assert isinstance(chk, TestCE)
        assert len(decl.actions) == 2

    def test_ordered_and_bare_patterns(self):
        (decl,) = analyze_text("(defrule r (stage running) (marker) => )")
        a, b = decl.conditions
        assert a.positional == tuple(a.positional) and len(a.positional) == 1
        assert b.positional == ()

    def test_missing_arrow(self):
        with pytest.raises(AnalysisError, match="no '=>'"):
            analyze_text("(defrule r (a))")

    def test_dangling_fact_var(self):
        with pytest.raises(AnalysisError, match="<-"):
            analyze_text("(defrule r ?f (a) => )")

    def test_action_must_be_call(self):
        with pytest.raises(AnalysisError, match="action must be a function call"):
            analyze_text("(defrule r (a) => 42)")

    def test_declare_rejects_non_integer(self):
        with pytest.raises(AnalysisError, match="salience"):
            analyze_text("(defrule r (declare (salience high)) (a) => )")

    def test_not_takes_one_pattern(self):
        with pytest.raises(AnalysisError):
            analyze_text("(defrule r (not (a) (b)) => )")

    def test_pattern_values_flat(self):
        with pytest.raises(AnalysisError, match="literals or variables"):
            analyze_text("(defrule r (goal (id (nested list))) => )")


class TestFactsAndCalls:
    def test_deffacts(self):
        (decl,) = analyze_text("(deffacts base (stage one) (goal (id 1)))")
        assert isinstance(decl, FactsDecl)
        assert len(decl.literals) == 2

    def test_deffacts_rejects_atoms(self):
        with pytest.raises(AnalysisError):
            analyze_text("(deffacts base stray)")

    def test_unknown_head_is_call(self):
        (decl,) = analyze_text("(watch rules)")
        assert isinstance(decl, Call)
        assert decl.name == "watch"

    def test_top_level_atom_rejected(self):
        with pytest.raises(AnalysisError):
            analyze_one(parse("bare")[0])
