"""Lowering of predicate-free IR formulas to SMT-LIB2 text."""

from __future__ import annotations

import re

from ..ir import (
    Add, And, Atom, BoolConst, BoolVar, FFalse, FTrue, Formula, IntConst,
    Mul, Neg, Not, Or, Scale, Sort, Sub, Term, Var,
)

_SIMPLE = re.compile(r"[A-Za-z~!@$%^&*_+=<>.?/-][A-Za-z0-9~!@$%^&*_+=<>.?/-]*$")


def smt_symbol(name: str) -> str:
    if _SIMPLE.match(name):
        return name
    if "|" in name or "\\" in name:
        raise ValueError(f"name {name!r} cannot be an SMT-LIB symbol")
    return f"|{name}|"


def _int(v: int) -> str:
    return str(v) if v >= 0 else f"(- {-v})"


def lower_term(t: Term) -> str:
    if isinstance(t, Var):
        return smt_symbol(t.name)
    if isinstance(t, IntConst):
        return _int(t.value)
    if isinstance(t, BoolConst):
        return "true" if t.value else "false"
    if isinstance(t, Neg):
        return f"(- {lower_term(t.arg)})"
    if isinstance(t, Add):
        return f"(+ {lower_term(t.left)} {lower_term(t.right)})"
    if isinstance(t, Sub):
        return f"(- {lower_term(t.left)} {lower_term(t.right)})"
    if isinstance(t, Scale):
        return f"(* {_int(t.coeff)} {lower_term(t.arg)})"
    if isinstance(t, Mul):
        raise ValueError("unfolded nonlinear product reached the SMT lowering")
    raise TypeError(t)


_REL = {"=": "=", "<=": "<=", "<": "<", ">=": ">=", ">": ">"}


def lower_formula(f: Formula) -> str:
    if isinstance(f, FTrue):
        return "true"
    if isinstance(f, FFalse):
        return "false"
    if isinstance(f, BoolVar):
        return smt_symbol(f.name)
    if isinstance(f, Atom):
        if f.rel == "<>":
            return f"(not (= {lower_term(f.lhs)} {lower_term(f.rhs)}))"
        return f"({_REL[f.rel]} {lower_term(f.lhs)} {lower_term(f.rhs)})"
    if isinstance(f, Not):
        return f"(not {lower_formula(f.arg)})"
    if isinstance(f, And):
        if not f.args:
            return "true"
        return f"(and {' '.join(lower_formula(a) for a in f.args)})"
    if isinstance(f, Or):
        if not f.args:
            return "false"
        return f"(or {' '.join(lower_formula(a) for a in f.args)})"
    raise TypeError(f"cannot lower {f!r} (predicate applications must be substituted first)")


def declare_const(name: str, sort: Sort) -> str:
    s = "Bool" if sort is Sort.BOOL else "Int"
    return f"(declare-const {smt_symbol(name)} {s})"
