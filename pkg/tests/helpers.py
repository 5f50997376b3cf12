"""Shared test utilities: vectorized formula evaluation over value grids."""

import numpy as np

from pfwcsp.ir import (
    Add, And, Atom, BoolConst, BoolVar, FFalse, FTrue, IntConst, Neg, Not, Or,
    Scale, Sub, Var,
)

_REL = {
    "=": lambda a, b: a == b,
    "<>": lambda a, b: a != b,
    "<=": lambda a, b: a <= b,
    "<": lambda a, b: a < b,
    ">=": lambda a, b: a >= b,
    ">": lambda a, b: a > b,
}


def eval_term_grid(t, env):
    if isinstance(t, Var):
        return env[t.name]
    if isinstance(t, IntConst):
        return t.value
    if isinstance(t, BoolConst):
        return t.value
    if isinstance(t, Neg):
        return -eval_term_grid(t.arg, env)
    if isinstance(t, Add):
        return eval_term_grid(t.left, env) + eval_term_grid(t.right, env)
    if isinstance(t, Sub):
        return eval_term_grid(t.left, env) - eval_term_grid(t.right, env)
    if isinstance(t, Scale):
        return t.coeff * eval_term_grid(t.arg, env)
    raise TypeError(t)


def eval_formula_grid(f, env):
    """Evaluates a predicate-free formula over numpy-array environments."""
    if isinstance(f, FTrue):
        return np.bool_(True)
    if isinstance(f, FFalse):
        return np.bool_(False)
    if isinstance(f, BoolVar):
        return env[f.name]
    if isinstance(f, Atom):
        return _REL[f.rel](eval_term_grid(f.lhs, env), eval_term_grid(f.rhs, env))
    if isinstance(f, Not):
        return ~np.asarray(eval_formula_grid(f.arg, env))
    if isinstance(f, And):
        out = None
        for a in f.args:
            v = eval_formula_grid(a, env)
            out = v if out is None else out & v
        return out if out is not None else np.bool_(True)
    if isinstance(f, Or):
        out = None
        for a in f.args:
            v = eval_formula_grid(a, env)
            out = v if out is None else out | v
        return out if out is not None else np.bool_(False)
    raise TypeError(f)
