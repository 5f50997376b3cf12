import os

import pytest

from pfwcsp.ir import FTrue, Kind, Sort, check_well_sorted
from pfwcsp.parser import (
    ParseError, parse_pfwcsp, parse_solution, parse_transition_system,
    print_pfwcsp,
)
from conftest import BENCH


def test_top_head_clause():
    p = parse_pfwcsp("top :- Inv(d, b, x1, x2), x1 <= 0, x2 <= 0.")
    (c,) = p.clauses
    assert isinstance(c.theory, FTrue)
    assert c.neg[0].pred == "Inv"


def test_theory_head_clause():
    p = parse_pfwcsp("y1 = y2 :- Inv(y1, y2), z1 <= 0, z2 <= 0.")
    (c,) = p.clauses
    assert len(c.neg) == 1 and not c.pos


def test_empty_input_is_an_error():
    with pytest.raises(ParseError, match="at least one clause"):
        parse_pfwcsp("")


def test_kind_conflict_on_prefix():
    with pytest.raises(ParseError, match="kind-conflict"):
        parse_pfwcsp("ord WF_X(int, int).\nWF_X(0, 1).")


def test_prefix_kind_defaults():
    p = parse_pfwcsp("WF_W(0, 1).\nFN_F(0, 1).\nP(0).")
    assert p.kinding["WF_W"].kind is Kind.WF
    assert p.kinding["FN_F"].kind is Kind.FN
    assert p.kinding["P"].kind is Kind.ORD


def test_sort_annotation_unification():
    p = parse_pfwcsp("Inv(b1 : bool, x).\nInv(b2, y) :- y > 0.")
    assert p.kinding["Inv"].sig == (Sort.BOOL, Sort.INT)


def test_sort_annotation_conflict():
    with pytest.raises(ParseError):
        parse_pfwcsp("Inv(b1 : bool).\nInv(x) :- x > 0.")


def test_arity_conflict():
    with pytest.raises(ParseError, match="arities"):
        parse_pfwcsp("P(0).\nP(0, 1).")


def test_single_clause_roundtrip():
    out = print_pfwcsp(parse_pfwcsp("P(0)."))
    assert print_pfwcsp(parse_pfwcsp(out)) == out


def test_three_kinds_declared_roundtrip():
    text = """ord P(int).
wf W(int, int).
fn F(int, int).

P(0).
W(1, 0) :- P(0).
F(2, 3).
"""
    p = parse_pfwcsp(text)
    assert p.kinding["W"].kind is Kind.WF and p.kinding["F"].kind is Kind.FN
    out = print_pfwcsp(p)
    p2 = parse_pfwcsp(out)
    assert p2.kinding == p.kinding
    assert print_pfwcsp(p2) == out


def test_nested_fn_is_lifted():
    p = parse_pfwcsp("P(x) :- h and FN_F(x, y) or !h and y = 0, y > 0.")
    (c,) = p.clauses
    assert any(a.pred == "FN_F" for a in c.neg)


def test_nested_ord_rejected():
    with pytest.raises(ParseError, match="top-level"):
        parse_pfwcsp("P(x) :- h and Q(x) or !h.")


def test_nested_comments():
    p = parse_pfwcsp("(* a (* nested *) comment *) P(0).")
    assert len(p.clauses) == 1


def test_corpus_parse_print_fixpoint():
    corpus = os.path.join(BENCH, "corpus")
    for name in sorted(os.listdir(corpus)):
        with open(os.path.join(corpus, name)) as fh:
            text = fh.read()
        problem = parse_pfwcsp(text)
        assert check_well_sorted(problem) == [], name
        printed = print_pfwcsp(problem)
        again = print_pfwcsp(parse_pfwcsp(printed))
        assert printed == again, name


def test_transition_system_sections():
    ts = parse_transition_system(
        "vars x, b : bool; final !b; trans b and x' = x + 1 and !b' "
        "or !b and !b' and x' = x;")
    assert ts.vars == [("x", Sort.INT), ("b", Sort.BOOL)]
    assert ts.final is not None


def test_transition_system_missing_final():
    with pytest.raises(ParseError, match="final"):
        parse_transition_system("vars x; trans x' = x;")


def test_transition_system_undeclared_var():
    with pytest.raises(ParseError, match="undeclared"):
        parse_transition_system("vars x; final x <= 0; trans y' = y;")


def test_choice_trans_parses():
    ts = parse_transition_system(
        "vars x; final x <= 0; trans x' = x - 1; "
        "choice_trans r : x' = x - r;")
    assert ts.choice_var == ("r", Sort.INT)


def test_solution_parse_and_closedness():
    sol = parse_solution("P(a, b : bool) := a >= 0 and b.")
    assert sol["P"].params == (("a", Sort.INT), ("b", Sort.BOOL))
    with pytest.raises(ParseError, match="not closed"):
        parse_solution("P(a) := a >= c.")
