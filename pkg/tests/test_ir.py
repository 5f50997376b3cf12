import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pfwcsp.ir import (
    Add, And, Atom, BoolConst, BoolVar, Clause, ExampleInstance, FFalse,
    FTrue, GroundAtom, IntConst, Kind, Kinding, Not, Or, PfwCSP, PredApp,
    PredicateDefinition, PredSig, Scale, Sort, Sub, Var, check_well_sorted,
    eval_formula, fnot, fold_formula, ground, substitute_predicates,
)


def X(*args):
    return PredApp("X", tuple(args))


def test_sort_mismatch_reported():
    k = Kinding()
    k["X"] = PredSig(Kind.ORD, (Sort.INT,))
    clause = Clause(FFalse(), (PredApp("X", (BoolConst(True),)),), ())
    errs = check_well_sorted(PfwCSP([clause], k))
    assert errs and "X" in str(errs[0])


def test_empty_problem_well_sorted():
    assert check_well_sorted(PfwCSP([], Kinding())) == []


def test_wf_signature_halves_checked():
    k = Kinding()
    k["WF_W"] = PredSig(Kind.WF, (Sort.INT, Sort.BOOL))
    errs = check_well_sorted(PfwCSP([], k))
    assert errs


def test_substitute_predicates_beta_reduces():
    x = Var("x")
    clause = Clause(FFalse(), (X(Add(x, IntConst(1))),), (X(x),))
    sigma = {"X": PredicateDefinition((("a", Sort.INT),),
                                      Atom(">=", Var("a"), IntConst(0)))}
    (f,) = substitute_predicates([clause], sigma)
    want_pos = Atom(">=", Add(x, IntConst(1)), IntConst(0))
    assert f == Or((Atom("<", x, IntConst(0)), want_pos)) or \
        f == Or((want_pos, Atom("<", x, IntConst(0))))


def test_substitute_identity_on_theory_clause():
    clause = Clause(Atom(">=", Var("x"), IntConst(0)))
    (f,) = substitute_predicates([clause], {})
    assert f == Atom(">=", Var("x"), IntConst(0))


def test_substitution_output_has_no_predapp():
    clause = Clause(FFalse(), (X(Var("x")),), ())
    sigma = {"X": PredicateDefinition((("a", Sort.INT),), FTrue())}
    (f,) = substitute_predicates([clause], sigma)

    def no_pred(g):
        if isinstance(g, PredApp):
            return False
        if isinstance(g, (And, Or)):
            return all(no_pred(a) for a in g.args)
        if isinstance(g, Not):
            return no_pred(g.arg)
        return True

    assert no_pred(f)


def test_ground_folds_and_discards():
    x = Var("x")
    # theory disjunct folds to true -> trivially-true instance
    clause = Clause(Atom(">=", x, IntConst(0)), (X(x),), ())
    assert ground(clause, {"x": 5}).trivially_true
    inst = ground(clause, {"x": -1})
    assert not inst.trivially_true
    assert inst.pos == (GroundAtom("X", (-1,)),)


def test_ground_two_atom_clause():
    x, xp = Var("x"), Var("x'")
    clause = Clause(FFalse(), (PredApp("X", (xp,)),), (PredApp("X", (x,)),))
    inst = ground(clause, {"x": 0, "x'": 1})
    assert inst.pos == (GroundAtom("X", (1,)),)
    assert inst.neg == (GroundAtom("X", (0,)),)


def test_ground_requires_total_substitution():
    from pfwcsp.ir import IncompleteSubstitution
    clause = Clause(FFalse(), (X(Var("x")),), ())
    with pytest.raises(IncompleteSubstitution):
        ground(clause, {})


term_values = st.integers(min_value=-4, max_value=4)


@settings(max_examples=200, deadline=None)
@given(a=term_values, b=term_values, c=term_values,
       vx=term_values, vy=term_values)
def test_ground_substitute_commute(a, b, c, vx, vy):
    """ground then substitute == substitute then instantiate and fold."""
    x, y = Var("x"), Var("y")
    clause = Clause(Atom(">=", Add(Scale(a, x), IntConst(b)), IntConst(0)),
                    (PredApp("X", (x, y)),),
                    (PredApp("X", (y, IntConst(c))),))
    sigma = {"X": PredicateDefinition(
        (("u", Sort.INT), ("v", Sort.INT)),
        Atom(">=", Add(Var("u"), Var("v")), IntConst(c)))}
    theta = {"x": vx, "y": vy}
    inst = ground(clause, theta)
    env = dict(theta)
    direct = eval_formula(fold_formula(
        substitute_predicates([clause], sigma)[0]), env)
    if inst.trivially_true:
        assert direct
    else:
        via = eval_formula(substitute_predicates(
            [__import__("pfwcsp.ir", fromlist=["example_to_clause"])
             .example_to_clause(inst)], sigma)[0], {})
        assert via == direct


def test_fold_formula_units():
    f = And((FTrue(), Atom(">=", IntConst(3), IntConst(2)), BoolVar("b")))
    assert fold_formula(f) == BoolVar("b")
    assert fold_formula(Or((FFalse(), Atom(">", IntConst(0), IntConst(1))))) \
        == FFalse()


def test_fnot_flips_relations():
    assert fnot(Atom("<=", Var("x"), IntConst(0))) == \
        Atom(">", Var("x"), IntConst(0))
    assert fnot(Not(BoolVar("b"))) == BoolVar("b")
