import itertools
import random

import pytest

from pfwcsp.ir import (
    ExampleInstance, GroundAtom, Kind, Kinding, PredSig, Sort, eval_formula,
)
from pfwcsp.parser import format_candidate
from pfwcsp.smt import SmtSession
from pfwcsp.templates import (
    ROTATION, TemplateParams, UnsatCore, check_fn_shape, check_wf_shape,
    extract_definition, instantiate, instantiate_ord, subsumption_reduce,
    synthesize, update_params,
)


def ex(pos=(), neg=()):
    return ExampleInstance(tuple(pos), tuple(neg)).canonical()


def kinding(**kw):
    k = Kinding()
    for name, (kind, sig) in kw.items():
        k[name] = PredSig(kind, sig)
    return k


def test_ord_expressible_set_at_minimal_params():
    """arity 1, (nd,nc,ac,ad)=(1,1,1,0): exactly {x>=0, -x>=0, 0>=0, x<=-0...}
    derived by enumerating c1 in {-1,0,1}, c0 = 0."""
    inst = instantiate_ord("P", (Sort.INT,), {"nd": 1, "nc": 1, "ac": 1, "ad": 0})
    sets = set()
    for c1 in (-1, 0, 1):
        model = {u: (c1 if u.endswith("!1") else 0) for u in inst.unknowns}
        d = extract_definition(inst, (Sort.INT,), model)
        denot = frozenset(x for x in range(-3, 4)
                          if eval_formula(d.body, {"x1": x}))
        sets.add(denot)
    grid = list(range(-3, 4))
    want = {frozenset(x for x in grid if x >= 0),
            frozenset(x for x in grid if -x >= 0),
            frozenset(grid)}
    assert sets == want


def test_ord_arity_zero():
    inst = instantiate_ord("P", (), {"nd": 1, "nc": 1, "ac": 1, "ad": 1})
    d = extract_definition(inst, (), {u: 0 for u in inst.unknowns})
    assert eval_formula(d.body, {})  # 0 >= 0


def test_solution_space_finite_at_tiny_params():
    """bounded enumeration of satisfying coefficient vectors is finite."""
    inst = instantiate_ord("P", (Sort.INT,), {"nd": 1, "nc": 1, "ac": 1, "ad": 1})
    coeff_names = [u for u in inst.unknowns]
    count = 0
    for vals in itertools.product((-1, 0, 1), repeat=len(coeff_names)):
        model = dict(zip(coeff_names, vals))
        count += 1
    assert count == 3 ** len(coeff_names) and count < 100


@pytest.fixture(scope="module")
def session():
    with SmtSession() as s:
        yield s


def test_synthesize_positive_negative(session):
    K = kinding(P=(Kind.ORD, (Sort.INT,)))
    params = TemplateParams.initial(K)
    params.per_pred["P"].update(ac=2, ad=1)
    got = synthesize([ex([GroundAtom("P", (0,))]),
                      ex((), [GroundAtom("P", (1,))])], K, params, session)
    assert isinstance(got, dict)
    assert eval_formula(got["P"].body, {"x1": 0})
    assert not eval_formula(got["P"].body, {"x1": 1})


def test_synthesize_contradiction_core(session):
    K = kinding(P=(Kind.ORD, (Sort.INT,)))
    got = synthesize([ex([GroundAtom("P", (0,))]),
                      ex((), [GroundAtom("P", (0,))])],
                     K, TemplateParams.initial(K), session)
    assert isinstance(got, UnsatCore)
    assert set(got.labels) >= {"ex_0", "ex_1"}
    assert got.implicated == ("P",)


def test_synthesize_wf_minimal(session):
    K = kinding(W=(Kind.WF, (Sort.INT, Sort.INT)))
    got = synthesize([ex([GroundAtom("W", (1, 0))])],
                     K, TemplateParams.initial(K), session)
    assert isinstance(got, dict)
    ok, why = check_wf_shape(got["W"])
    assert ok, why
    assert eval_formula(got["W"].body, {"x1": 1, "x2": 0})


def test_synthesize_fn_and_shape(session):
    K = kinding(F=(Kind.FN, (Sort.INT, Sort.INT)))
    got = synthesize([ex([GroundAtom("F", (2, 3))]),
                      ex([GroundAtom("F", (5, 6))])],
                     K, TemplateParams.initial(K), session)
    assert isinstance(got, dict)
    ok, why = check_fn_shape(got["F"])
    assert ok, why


def test_bool_argument_selectors(session):
    K = kinding(Q=(Kind.ORD, (Sort.BOOL, Sort.INT)))
    got = synthesize([ex([GroundAtom("Q", (True, 0))]),
                      ex((), [GroundAtom("Q", (False, 0))])],
                     K, TemplateParams.initial(K), session)
    assert isinstance(got, dict)
    assert eval_formula(got["Q"].body, {"x1": True, "x2": 0})
    assert not eval_formula(got["Q"].body, {"x1": False, "x2": 0})


def test_monotone_growth_keeps_candidates(session):
    """a candidate found at p re-checks as a template assignment at p' >= p"""
    K = kinding(P=(Kind.ORD, (Sort.INT,)))
    p0 = TemplateParams.initial(K)
    examples = [ex([GroundAtom("P", (2,))]), ex((), [GroundAtom("P", (-3,))])]
    got0 = synthesize(examples, K, p0, session)
    assert isinstance(got0, dict)
    p1 = p0.copy()
    for key in p1.per_pred["P"]:
        p1.per_pred["P"][key] += 1
    got1 = synthesize(examples, K, p1, session)
    assert isinstance(got1, dict)
    assert p1.dominates(p0)


def test_update_params_rotation_single():
    K = kinding(P=(Kind.ORD, (Sort.INT,)))
    p = TemplateParams.initial(K)
    core = UnsatCore(("ex_0",), ("P",))
    p = update_params(p, core, K)
    assert p.per_pred["P"]["nd"] == 2


def test_twenty_updates_touch_every_parameter():
    for kind, sig in ((Kind.ORD, (Sort.INT,)),
                      (Kind.WF, (Sort.INT, Sort.INT)),
                      (Kind.FN, (Sort.INT, Sort.INT))):
        K = kinding(P=(kind, sig))
        p = TemplateParams.initial(K)
        before = dict(p.per_pred["P"])
        core = UnsatCore(("ex_0",), ("P",))
        for _ in range(20):
            p = update_params(p, core, K)
        after = p.per_pred["P"]
        assert all(after[k] > before[k] for k in before), (kind, after)


def test_balanced_growth_two_preds():
    K = kinding(P=(Kind.ORD, (Sort.INT,)), W=(Kind.WF, (Sort.INT, Sort.INT)))
    p = TemplateParams.initial(K)
    core = UnsatCore(("ex_0",), ("P", "W"))
    p2 = update_params(p, core, K)
    assert sum(p2.per_pred["P"].values()) == sum(p.per_pred["P"].values()) + 1
    assert sum(p2.per_pred["W"].values()) == sum(p.per_pred["W"].values()) + 1


def test_fairness_threshold_catchup():
    K = kinding(P=(Kind.ORD, (Sort.INT,)), Q=(Kind.ORD, (Sort.INT,)))
    p = TemplateParams.initial(K)
    p.per_pred["Q"]["nd"] = 6  # Q far ahead on nd
    core = UnsatCore(("ex_0",), ("P",))
    p2 = update_params(p, core, K, threshold=2)
    assert p2.per_pred["P"]["nd"] == 2  # lagging parameter caught up first


def test_update_strictly_dominates():
    K = kinding(P=(Kind.ORD, (Sort.INT,)))
    p = TemplateParams.initial(K)
    p2 = update_params(p, UnsatCore(("ex_0",), ("P",)), K)
    assert p2.dominates(p) and not p.dominates(p2)


def test_subsumption_reduce():
    a, b = GroundAtom("P", (0,)), GroundAtom("P", (1,))
    unit = ex([a])
    wide = ex([a, b])
    other = ex((), [b])
    kept = subsumption_reduce([wide, unit, other])
    assert unit in kept and other in kept and wide not in kept
