from pfwcsp import lia
from pfwcsp.ir import (
    Add, And, Atom, BoolVar, IntConst, Not, Or, Scale, Sub, Var,
)

x, y, u, v = Var("x"), Var("y"), Var("u"), Var("v")
b = BoolVar("b")


def test_simple_conflict_with_core():
    r = lia.solve_formulas([("a", Atom(">=", x, IntConst(1))),
                            ("b", Atom("<=", x, IntConst(0))),
                            ("c", Atom("=", y, y))], need_core=True)
    assert r.status == "unsat"
    assert sorted(r.core) == ["a", "b"]


def test_sat_with_model():
    r = lia.solve_formulas([("a", Atom("=", Add(x, y), IntConst(3))),
                            ("b", Atom("=", x, IntConst(1)))])
    assert r.status == "sat" and r.model == {"x": 1, "y": 2}


def test_gcd_tightening():
    r = lia.solve_formulas([("a", Atom("=", Scale(2, x), IntConst(1)))])
    assert r.status == "unsat"


def test_branch_and_bound_parity():
    r = lia.solve_formulas([("a", Atom(">=", Scale(2, x), IntConst(3))),
                            ("b", Atom("<=", Scale(2, x), IntConst(3)))])
    assert r.status == "unsat"


def test_cross_row_lattice_conflict():
    # x = 2u and x = 2v + 1 has no integer solution
    r = lia.solve_formulas([("a", Atom("=", x, Scale(2, u))),
                            ("b", Atom("=", x, Add(Scale(2, v), IntConst(1))))])
    assert r.status == "unsat"


def test_boolean_integer_mix():
    f = Or((And((b, Atom("=", x, IntConst(5)))),
            And((Not(b), Atom("=", x, IntConst(7))))))
    r = lia.solve_formulas([("a", f), ("c", Atom(">=", x, IntConst(6)))])
    assert r.status == "sat" and r.model == {"x": 7, "b": False}


def test_validity_and_equivalence():
    assert lia.is_valid(Or((b, Not(b)))) is True
    assert lia.is_valid(b) is False
    assert lia.equivalent(Atom("<=", x, IntConst(3)),
                          Not(Atom(">=", x, IntConst(4)))) is True
    assert lia.equivalent(Atom("<=", x, IntConst(3)),
                          Atom("<=", x, IntConst(4))) is False


def test_strict_and_neq_relations():
    r = lia.solve_formulas([("a", Atom("<", x, IntConst(3))),
                            ("b", Atom(">", x, IntConst(1))),
                            ("c", Atom("<>", x, IntConst(2)))])
    assert r.status == "unsat"


def test_bool_equality_atom():
    bb = Var("p", __import__("pfwcsp.ir", fromlist=["Sort"]).Sort.BOOL)
    r = lia.solve_formulas([("a", Atom("=", bb, bb))])
    assert r.status == "sat"
    r = lia.solve_formulas([("a", Atom("<>", bb, bb))])
    assert r.status == "unsat"


def test_unconstrained_vars_defaulted():
    r = lia.solve_formulas([("a", Or((Atom("=", x, IntConst(1)),
                                      Atom("=", y, IntConst(1)))))])
    assert r.status == "sat"
    assert set(r.model) == {"x", "y"}


def test_model_satisfies_assertions():
    from pfwcsp.ir import eval_formula
    fs = [("a", Or((Atom(">=", Sub(x, y), IntConst(2)), b))),
          ("c", Atom("<=", Add(x, Scale(3, y)), IntConst(-1))),
          ("d", Not(And((b, Atom("=", x, IntConst(0))))))]
    r = lia.solve_formulas(fs)
    assert r.status == "sat"
    for _, f in fs:
        assert eval_formula(f, r.model)
