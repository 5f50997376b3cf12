import random

from pfwcsp.examples_unsat import (
    brute_force_unsat, check_examples_unsat, enumerate_simple_cycles,
)
from pfwcsp.ir import ExampleInstance, GroundAtom, Kind, Kinding, PredSig, Sort

K = Kinding()
K["W"] = PredSig(Kind.WF, (Sort.INT, Sort.INT))
K["F"] = PredSig(Kind.FN, (Sort.INT, Sort.INT))
K["P"] = PredSig(Kind.ORD, (Sort.INT,))


def W(a, b):
    return GroundAtom("W", (a, b))


def F(a, b):
    return GroundAtom("F", (a, b))


def P(a):
    return GroundAtom("P", (a,))


def ex(pos=(), neg=()):
    return ExampleInstance(tuple(pos), tuple(neg)).canonical()


def test_wf_two_cycle_unsat():
    r = check_examples_unsat([ex([W(0, 1)]), ex([W(1, 0)])], K)
    assert r.status == "unsat"


def test_fn_pair_unsat():
    r = check_examples_unsat([ex([F(1, 2)]), ex([F(1, 3)])], K)
    assert r.status == "unsat"


def test_propositional_unsat():
    r = check_examples_unsat(
        [ex([P(0)]), ex([P(1)], [P(0)]), ex((), [P(1)])], K)
    assert r.status == "unsat"


def test_acyclic_wf_sat():
    r = check_examples_unsat([ex([W(0, 1)]), ex([W(1, 2)])], K)
    assert r.status == "sat"
    assert r.assignment[W(0, 1)] and r.assignment[W(1, 2)]


def test_trivially_true_filtered():
    r = check_examples_unsat([ExampleInstance(trivially_true=True)], K)
    assert r.status == "sat"


def test_cycle_enumeration_cases():
    assert enumerate_simple_cycles({(5,): {(5,)}}) == [[(5,)]]
    g = {(1,): {(2,)}, (2,): {(1,), (3,)}, (3,): set()}
    assert enumerate_simple_cycles(g) == [[(1,), (2,)]]
    g3 = {(i,): {(j,) for j in range(3) if j != i} for i in range(3)}
    assert len(enumerate_simple_cycles(g3)) == 5


def test_cycle_limit_respected():
    g3 = {(i,): {(j,) for j in range(4) if j != i} for i in range(4)}
    assert len(enumerate_simple_cycles(g3, limit=3)) == 3


def test_random_agreement_with_bruteforce():
    rng = random.Random(11)
    for _ in range(200):
        exs = []
        for _ in range(rng.randint(1, 6)):
            pos, neg = [], []
            for _ in range(rng.randint(1, 3)):
                p = rng.choice(["W", "F", "P"])
                if p == "P":
                    a = P(rng.randint(0, 2))
                elif p == "W":
                    a = W(rng.randint(0, 2), rng.randint(0, 2))
                else:
                    a = F(rng.randint(0, 2), rng.randint(0, 2))
                (pos if rng.random() < 0.6 else neg).append(a)
            exs.append(ex(pos, neg))
        assert brute_force_unsat(exs, K) == \
            (check_examples_unsat(exs, K).status == "unsat")
