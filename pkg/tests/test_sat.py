import random

from pfwcsp import sat


def test_basic_sat():
    m = sat.solve_cnf(3, [[1, 2], [-1, 2], [-2, 3]])
    assert m is not None and m[2] and m[3]


def test_basic_unsat():
    assert sat.solve_cnf(2, [[1], [-1]]) is None
    assert sat.solve_cnf(2, [[1, 2], [1, -2], [-1, 2], [-1, -2]]) is None


def test_empty_clause_unsat():
    assert sat.solve_cnf(1, [[]]) is None


def test_theory_callback_veto():
    # theory rejects any model with both 1 and 2 true
    def theory(model):
        if model[1] and model[2]:
            return [-1, -2]
        return None

    m = sat.solve_cnf(2, [[1, 2]], theory=theory)
    assert m is not None and not (m[1] and m[2])


def test_theory_callback_unsat():
    def theory(model):
        return [(-1 if model[1] else 1)]

    assert sat.solve_cnf(1, [[1, -1]], theory=theory) is None


def test_random_against_bruteforce():
    rng = random.Random(7)
    for _ in range(300):
        n = rng.randint(1, 8)
        clauses = []
        for _ in range(rng.randint(1, 18)):
            width = rng.randint(1, 3)
            clause = [rng.choice([1, -1]) * rng.randint(1, n)
                      for _ in range(width)]
            clauses.append(clause)
        want = any(
            all(any((lit > 0) == bool(mask >> (abs(lit) - 1) & 1)
                    for lit in clause) for clause in clauses)
            for mask in range(1 << n))
        got = sat.solve_cnf(n, clauses) is not None
        assert want == got, (n, clauses)
