#!/usr/bin/env python3
"""Generate case-analysis benchmark variants by fixing Boolean variables.

Usage: specialize.py IN.pfw OUT.pfw name=true [name=false ...]

Fixes the named Boolean variables to the given constants, folds every formula,
drops predicate argument positions that carried exactly those variables, and
drops clauses that became trivially satisfied.
"""

import sys

sys.path.insert(0, "src")

from pfwcsp.ir import (  # noqa: E402
    BoolConst, Clause, FFalse, FTrue, Kinding, PfwCSP, PredApp, PredSig, Var,
    check_well_sorted, fold_formula, subst_formula,
)
from pfwcsp.parser import parse_pfwcsp, print_pfwcsp  # noqa: E402


def specialize(problem: PfwCSP, assignment: dict) -> PfwCSP:
    theta = {name: BoolConst(value) for name, value in assignment.items()}
    drop: dict = {}
    for c in problem.clauses:
        for a, _ in c.atoms():
            positions = {i for i, t in enumerate(a.args)
                         if isinstance(t, Var) and t.name in assignment}
            prev = drop.setdefault(a.pred, positions)
            if prev != positions:
                raise SystemExit(f"inconsistent positions for {a.pred}")

    def map_app(a: PredApp) -> PredApp:
        keep = [t for i, t in enumerate(a.args) if i not in drop.get(a.pred, ())]
        return PredApp(a.pred, tuple(
            fold_formula_term(subst_term_local(t)) for t in keep))

    from pfwcsp.ir import fold_term, subst_term
    subst_term_local = lambda t: subst_term(t, theta)
    fold_formula_term = fold_term

    clauses = []
    for c in problem.clauses:
        theory = fold_formula(subst_formula(c.theory, theta))
        if isinstance(theory, FTrue):
            continue
        pos = tuple(map_app(a) for a in c.pos)
        neg = tuple(map_app(a) for a in c.neg)
        heads = body = None
        if c.pres_heads is not None:
            heads = [fold_formula(subst_formula(h, theta)) for h in c.pres_heads]
            heads = [h for h in heads if not isinstance(h, (FTrue, FFalse))]
            body = [fold_formula(subst_formula(b, theta)) for b in c.pres_body]
            body = [b for b in body if not isinstance(b, FTrue)]
        clauses.append(Clause(theory, pos, neg,
                              tuple(heads) if heads is not None else None,
                              tuple(body) if body is not None else None))
    kinding = Kinding()
    for name, sig in problem.kinding.items():
        keep = tuple(s for i, s in enumerate(sig.sig)
                     if i not in drop.get(name, ()))
        kinding[name] = PredSig(sig.kind, keep)
    out = PfwCSP(clauses, kinding)
    errs = check_well_sorted(out)
    if errs:
        raise SystemExit("; ".join(str(e) for e in errs))
    return out


def main():
    src, dst = sys.argv[1], sys.argv[2]
    assignment = {}
    for pair in sys.argv[3:]:
        name, value = pair.split("=")
        assignment[name] = value == "true"
    with open(src) as fh:
        problem = parse_pfwcsp(fh.read())
    out = specialize(problem, assignment)
    with open(dst, "w") as fh:
        fh.write(print_pfwcsp(out))
    print(f"{dst}: {len(out.clauses)} clauses")


if __name__ == "__main__":
    main()
