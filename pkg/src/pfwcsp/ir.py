r"""Many-sorted IR for predicate constraint problems.

Terms are linear integer/Boolean expressions; formulas are quantifier-free
combinations of theory atoms and predicate-variable applications.  A clause is
kept in the normal form

    theory  \/  X_1(t..) \/ ... \/ X_l(t..)  \/  !Y_1(t..) \/ ... \/ !Y_m(t..)

with the theory part free of predicate applications.  All values are immutable
and hashable, so they can be shared freely between workers.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence, Union


class Sort(enum.Enum):
    INT = "int"
    BOOL = "bool"

    def __repr__(self) -> str:
        return self.value


class Kind(enum.Enum):
    ORD = "ord"
    WF = "wf"
    FN = "fn"

    def __repr__(self) -> str:
        return self.value


Value = Union[int, bool]


# ---------------------------------------------------------------------------
# Terms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Var:
    name: str
    sort: Sort = Sort.INT


@dataclass(frozen=True)
class IntConst:
    value: int


@dataclass(frozen=True)
class BoolConst:
    value: bool


@dataclass(frozen=True)
class Neg:
    arg: "Term"


@dataclass(frozen=True)
class Add:
    left: "Term"
    right: "Term"


@dataclass(frozen=True)
class Sub:
    left: "Term"
    right: "Term"


@dataclass(frozen=True)
class Scale:
    """Multiplication by an integer literal; keeps terms in the linear fragment."""

    coeff: int
    arg: "Term"


@dataclass(frozen=True)
class Mul:
    """Product of two terms.

    Only produced inside template skeletons (unknown coefficient times argument
    variable).  It must be folded away (one side becoming a literal) before a
    term can appear in a clause or be lowered to the solver; the well-sortedness
    check rejects it.
    """

    left: "Term"
    right: "Term"


Term = Union[Var, IntConst, BoolConst, Neg, Add, Sub, Scale, Mul]


def term_sort(t: Term) -> Sort:
    if isinstance(t, Var):
        return t.sort
    if isinstance(t, BoolConst):
        return Sort.BOOL
    return Sort.INT


def term_vars(t: Term, acc: Optional[dict] = None) -> dict:
    """Free variables of a term as an ordered name -> sort mapping."""
    if acc is None:
        acc = {}
    if isinstance(t, Var):
        prev = acc.get(t.name)
        if prev is not None and prev is not t.sort:
            raise SortError(f"variable {t.name} used at both sorts")
        acc[t.name] = t.sort
    elif isinstance(t, Neg):
        term_vars(t.arg, acc)
    elif isinstance(t, (Add, Sub, Mul)):
        term_vars(t.left, acc)
        term_vars(t.right, acc)
    elif isinstance(t, Scale):
        term_vars(t.arg, acc)
    return acc


def subst_term(t: Term, theta: Mapping[str, Term]) -> Term:
    if isinstance(t, Var):
        return theta.get(t.name, t)
    if isinstance(t, (IntConst, BoolConst)):
        return t
    if isinstance(t, Neg):
        return Neg(subst_term(t.arg, theta))
    if isinstance(t, Add):
        return Add(subst_term(t.left, theta), subst_term(t.right, theta))
    if isinstance(t, Sub):
        return Sub(subst_term(t.left, theta), subst_term(t.right, theta))
    if isinstance(t, Scale):
        return Scale(t.coeff, subst_term(t.arg, theta))
    if isinstance(t, Mul):
        return Mul(subst_term(t.left, theta), subst_term(t.right, theta))
    raise TypeError(t)


def fold_term(t: Term) -> Term:
    """Constant-fold a term; resolves Mul against literal operands."""
    if isinstance(t, (Var, IntConst, BoolConst)):
        return t
    if isinstance(t, Neg):
        a = fold_term(t.arg)
        if isinstance(a, IntConst):
            return IntConst(-a.value)
        return Neg(a)
    if isinstance(t, (Add, Sub)):
        a, b = fold_term(t.left), fold_term(t.right)
        if isinstance(a, IntConst) and isinstance(b, IntConst):
            return IntConst(a.value + b.value if isinstance(t, Add) else a.value - b.value)
        if isinstance(b, IntConst) and b.value == 0:
            return a
        if isinstance(a, IntConst) and a.value == 0:
            return b if isinstance(t, Add) else fold_term(Neg(b))
        return type(t)(a, b)
    if isinstance(t, Scale):
        a = fold_term(t.arg)
        if t.coeff == 0:
            return IntConst(0)
        if isinstance(a, IntConst):
            return IntConst(t.coeff * a.value)
        if t.coeff == 1:
            return a
        if t.coeff == -1:
            return Neg(a)
        return Scale(t.coeff, a)
    if isinstance(t, Mul):
        a, b = fold_term(t.left), fold_term(t.right)
        if isinstance(a, IntConst):
            return fold_term(Scale(a.value, b))
        if isinstance(b, IntConst):
            return fold_term(Scale(b.value, a))
        return Mul(a, b)
    raise TypeError(t)


def eval_term(t: Term, env: Mapping[str, Value]) -> Value:
    if isinstance(t, Var):
        return env[t.name]
    if isinstance(t, (IntConst, BoolConst)):
        return t.value
    if isinstance(t, Neg):
        return -eval_term(t.arg, env)
    if isinstance(t, Add):
        return eval_term(t.left, env) + eval_term(t.right, env)
    if isinstance(t, Sub):
        return eval_term(t.left, env) - eval_term(t.right, env)
    if isinstance(t, Scale):
        return t.coeff * eval_term(t.arg, env)
    if isinstance(t, Mul):
        return eval_term(t.left, env) * eval_term(t.right, env)
    raise TypeError(t)


def value_term(v: Value) -> Term:
    return BoolConst(v) if isinstance(v, bool) else IntConst(v)


# ---------------------------------------------------------------------------
# Formulas
# ---------------------------------------------------------------------------

RELATIONS = ("=", "<>", "<=", "<", ">=", ">")
_REL_NEG = {"=": "<>", "<>": "=", "<=": ">", ">": "<=", "<": ">=", ">=": "<"}
_REL_EVAL = {
    "=": lambda a, b: a == b,
    "<>": lambda a, b: a != b,
    "<=": lambda a, b: a <= b,
    "<": lambda a, b: a < b,
    ">=": lambda a, b: a >= b,
    ">": lambda a, b: a > b,
}


@dataclass(frozen=True)
class PredApp:
    pred: str
    args: tuple  # tuple[Term, ...]


@dataclass(frozen=True)
class Atom:
    rel: str
    lhs: Term
    rhs: Term


@dataclass(frozen=True)
class BoolVar:
    name: str


@dataclass(frozen=True)
class Not:
    arg: "Formula"


@dataclass(frozen=True)
class And:
    args: tuple  # tuple[Formula, ...]


@dataclass(frozen=True)
class Or:
    args: tuple  # tuple[Formula, ...]


@dataclass(frozen=True)
class FTrue:
    pass


@dataclass(frozen=True)
class FFalse:
    pass


Formula = Union[PredApp, Atom, BoolVar, Not, And, Or, FTrue, FFalse]

TRUE = FTrue()
FALSE = FFalse()


def fand(args: Iterable[Formula]) -> Formula:
    """Conjunction with flattening, stable dedup, and unit/absorbing folding."""
    acc = []
    seen = set()
    for a in args:
        if isinstance(a, FTrue):
            continue
        if isinstance(a, FFalse):
            return FALSE
        for part in (a.args if isinstance(a, And) else (a,)):
            if part not in seen:
                seen.add(part)
                acc.append(part)
    if not acc:
        return TRUE
    if len(acc) == 1:
        return acc[0]
    return And(tuple(acc))


def forr(args: Iterable[Formula]) -> Formula:
    acc = []
    seen = set()
    for a in args:
        if isinstance(a, FFalse):
            continue
        if isinstance(a, FTrue):
            return TRUE
        for part in (a.args if isinstance(a, Or) else (a,)):
            if part not in seen:
                seen.add(part)
                acc.append(part)
    if not acc:
        return FALSE
    if len(acc) == 1:
        return acc[0]
    return Or(tuple(acc))


def fnot(f: Formula) -> Formula:
    if isinstance(f, FTrue):
        return FALSE
    if isinstance(f, FFalse):
        return TRUE
    if isinstance(f, Not):
        return f.arg
    if isinstance(f, Atom) and term_sort(f.lhs) is Sort.INT:
        return Atom(_REL_NEG[f.rel], f.lhs, f.rhs)
    return Not(f)


def implies(a: Formula, b: Formula) -> Formula:
    return forr([fnot(a), b])


def formula_preds(f: Formula, acc: Optional[dict] = None) -> dict:
    """Predicate applications by name (ordered)."""
    if acc is None:
        acc = {}
    if isinstance(f, PredApp):
        acc.setdefault(f.pred, []).append(f)
    elif isinstance(f, Not):
        formula_preds(f.arg, acc)
    elif isinstance(f, (And, Or)):
        for a in f.args:
            formula_preds(a, acc)
    return acc


def formula_vars(f: Formula, acc: Optional[dict] = None) -> dict:
    if acc is None:
        acc = {}
    if isinstance(f, PredApp):
        for t in f.args:
            term_vars(t, acc)
    elif isinstance(f, Atom):
        term_vars(f.lhs, acc)
        term_vars(f.rhs, acc)
    elif isinstance(f, BoolVar):
        prev = acc.get(f.name)
        if prev is not None and prev is not Sort.BOOL:
            raise SortError(f"variable {f.name} used at both sorts")
        acc[f.name] = Sort.BOOL
    elif isinstance(f, Not):
        formula_vars(f.arg, acc)
    elif isinstance(f, (And, Or)):
        for a in f.args:
            formula_vars(a, acc)
    return acc


def term_to_formula(t: Term) -> Formula:
    """Coerce a Boolean-sorted term to a formula."""
    if isinstance(t, Var) and t.sort is Sort.BOOL:
        return BoolVar(t.name)
    if isinstance(t, BoolConst):
        return TRUE if t.value else FALSE
    raise SortError(f"expected a Boolean term, got {t}")


def subst_formula(f: Formula, theta: Mapping[str, Term]) -> Formula:
    if isinstance(f, PredApp):
        return PredApp(f.pred, tuple(subst_term(t, theta) for t in f.args))
    if isinstance(f, Atom):
        return Atom(f.rel, subst_term(f.lhs, theta), subst_term(f.rhs, theta))
    if isinstance(f, BoolVar):
        t = theta.get(f.name)
        if t is None:
            return f
        return term_to_formula(t)
    if isinstance(f, Not):
        return fnot(subst_formula(f.arg, theta))
    if isinstance(f, And):
        return fand(subst_formula(a, theta) for a in f.args)
    if isinstance(f, Or):
        return forr(subst_formula(a, theta) for a in f.args)
    return f


def fold_formula(f: Formula) -> Formula:
    """Partial evaluation: folds ground atoms and prunes constant branches."""
    if isinstance(f, Atom):
        lhs, rhs = fold_term(f.lhs), fold_term(f.rhs)
        if isinstance(lhs, (IntConst, BoolConst)) and isinstance(rhs, (IntConst, BoolConst)):
            return TRUE if _REL_EVAL[f.rel](lhs.value, rhs.value) else FALSE
        return Atom(f.rel, lhs, rhs)
    if isinstance(f, PredApp):
        return PredApp(f.pred, tuple(fold_term(t) for t in f.args))
    if isinstance(f, Not):
        return fnot(fold_formula(f.arg))
    if isinstance(f, And):
        return fand(fold_formula(a) for a in f.args)
    if isinstance(f, Or):
        return forr(fold_formula(a) for a in f.args)
    return f


def eval_formula(f: Formula, env: Mapping[str, Value]) -> bool:
    if isinstance(f, Atom):
        return _REL_EVAL[f.rel](eval_term(f.lhs, env), eval_term(f.rhs, env))
    if isinstance(f, BoolVar):
        return bool(env[f.name])
    if isinstance(f, Not):
        return not eval_formula(f.arg, env)
    if isinstance(f, And):
        return all(eval_formula(a, env) for a in f.args)
    if isinstance(f, Or):
        return any(eval_formula(a, env) for a in f.args)
    if isinstance(f, FTrue):
        return True
    if isinstance(f, FFalse):
        return False
    raise SortError(f"cannot evaluate predicate application {f}")


# ---------------------------------------------------------------------------
# Clauses, kinding, problems
# ---------------------------------------------------------------------------

class SortError(Exception):
    pass


@dataclass(frozen=True)
class Clause:
    """theory \\/ (pos_1 \\/ ... \\/ pos_l) \\/ (!neg_1 \\/ ... \\/ !neg_m).

    pres_heads/pres_body are printing hints only (the heads :- body split the
    clause was written or generated with); they never affect clause identity.
    """

    theory: Formula
    pos: tuple = ()
    neg: tuple = ()
    pres_heads: Optional[tuple] = field(default=None, compare=False)
    pres_body: Optional[tuple] = field(default=None, compare=False)

    def with_presentation(self, heads, body) -> "Clause":
        return Clause(self.theory, self.pos, self.neg, tuple(heads), tuple(body))

    def free_vars(self) -> dict:
        acc: dict = {}
        formula_vars(self.theory, acc)
        for a in self.pos + self.neg:
            formula_vars(a, acc)
        return acc

    def atoms(self):
        for a in self.pos:
            yield a, True
        for a in self.neg:
            yield a, False

    def pred_names(self) -> set:
        return {a.pred for a in self.pos} | {a.pred for a in self.neg}

    def map_formulas(self, fn) -> "Clause":
        return Clause(fn(self.theory), tuple(fn(a) for a in self.pos),
                      tuple(fn(a) for a in self.neg))

    def to_formula(self) -> Formula:
        return forr([self.theory, *self.pos, *(fnot(a) for a in self.neg)])


@dataclass(frozen=True)
class PredSig:
    kind: Kind
    sig: tuple  # tuple[Sort, ...]

    @property
    def arity(self) -> int:
        return len(self.sig)


class Kinding(dict):
    """Map predicate-variable name -> PredSig."""

    def kind_of(self, name: str) -> Kind:
        return self[name].kind

    def sig_of(self, name: str) -> tuple:
        return self[name].sig


@dataclass
class PfwCSP:
    clauses: list
    kinding: Kinding

    def pred_names(self) -> set:
        s = set()
        for c in self.clauses:
            s |= c.pred_names()
        return s


@dataclass(frozen=True)
class PredicateDefinition:
    """A closed predicate  lambda params. body  (body has no PredApp)."""

    params: tuple  # tuple[tuple[str, Sort], ...]
    body: Formula

    def apply(self, args: Sequence[Term]) -> Formula:
        if len(args) != len(self.params):
            raise SortError(
                f"definition of arity {len(self.params)} applied to {len(args)} arguments")
        theta = {}
        for (name, sort), t in zip(self.params, args):
            if term_sort(t) is not sort:
                raise SortError(f"argument {t} for parameter {name} has the wrong sort")
            theta[name] = t
        return fold_formula(subst_formula(self.body, theta))


Candidate = dict  # name -> PredicateDefinition


class MissingDefinition(Exception):
    def __init__(self, pred: str):
        super().__init__(f"no definition for predicate variable {pred}")
        self.pred = pred


def substitute_predicates(clauses: Sequence[Clause], sigma: Candidate) -> list:
    """Apply a predicate substitution; results contain no PredApp."""
    out = []
    for c in clauses:
        parts = [c.theory]
        for a in c.pos:
            if a.pred not in sigma:
                raise MissingDefinition(a.pred)
            parts.append(sigma[a.pred].apply(a.args))
        for a in c.neg:
            if a.pred not in sigma:
                raise MissingDefinition(a.pred)
            parts.append(fnot(sigma[a.pred].apply(a.args)))
        out.append(fold_formula(forr(parts)))
    return out


# ---------------------------------------------------------------------------
# Ground example instances
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GroundAtom:
    pred: str
    values: tuple  # tuple[Value, ...]

    def __str__(self) -> str:
        return f"{self.pred}({', '.join(_fmt_value(v) for v in self.values)})"


def _fmt_value(v: Value) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


@dataclass(frozen=True)
class ExampleInstance:
    """A ground clause: disjunction of ground literals (theory part folded away).

    An instance whose theory part folded to true is represented explicitly with
    trivially_true=True; callers filter those at the example-set boundary.
    """

    pos: tuple = ()  # tuple[GroundAtom, ...]
    neg: tuple = ()
    trivially_true: bool = False

    def canonical(self) -> "ExampleInstance":
        return ExampleInstance(tuple(sorted(set(self.pos), key=_atom_key)),
                               tuple(sorted(set(self.neg), key=_atom_key)),
                               self.trivially_true)

    def is_empty(self) -> bool:
        return not self.trivially_true and not self.pos and not self.neg

    def is_tautological(self) -> bool:
        return self.trivially_true or bool(set(self.pos) & set(self.neg))

    def literals(self):
        for a in self.pos:
            yield a, True
        for a in self.neg:
            yield a, False

    def pred_names(self) -> set:
        return {a.pred for a in self.pos} | {a.pred for a in self.neg}

    def __str__(self) -> str:
        if self.trivially_true:
            return "true"
        lits = [str(a) for a in self.pos] + [f"!{a}" for a in self.neg]
        return " or ".join(lits) if lits else "false"


def _atom_key(a: GroundAtom):
    return (a.pred, tuple((int(isinstance(v, bool)), int(v)) for v in a.values))


class IncompleteSubstitution(Exception):
    pass


def ground(clause: Clause, theta: Mapping[str, Value]) -> ExampleInstance:
    """Instantiate every free variable of the clause and fold the theory part."""
    fv = clause.free_vars()
    missing = [n for n in fv if n not in theta]
    if missing:
        raise IncompleteSubstitution(f"substitution missing variables: {missing}")
    for n, s in fv.items():
        v = theta[n]
        if isinstance(v, bool) != (s is Sort.BOOL):
            raise IncompleteSubstitution(f"value for {n} has the wrong sort")
    term_theta = {n: value_term(theta[n]) for n in fv}
    th = fold_formula(subst_formula(clause.theory, term_theta))
    if isinstance(th, FTrue):
        return ExampleInstance(trivially_true=True)
    if not isinstance(th, FFalse):
        raise SortError(f"theory part did not fold to a constant: {th}")

    def ground_atom(a: PredApp) -> GroundAtom:
        vals = []
        for t in a.args:
            ft = fold_term(subst_term(t, term_theta))
            if isinstance(ft, IntConst):
                vals.append(ft.value)
            elif isinstance(ft, BoolConst):
                vals.append(ft.value)
            else:
                raise SortError(f"argument {t} did not fold to a constant")
        return GroundAtom(a.pred, tuple(vals))

    return ExampleInstance(tuple(ground_atom(a) for a in clause.pos),
                           tuple(ground_atom(a) for a in clause.neg)).canonical()


def example_to_clause(e: ExampleInstance) -> Clause:
    if e.trivially_true:
        return Clause(TRUE)
    mk = lambda a: PredApp(a.pred, tuple(value_term(v) for v in a.values))
    return Clause(FALSE, tuple(mk(a) for a in e.pos), tuple(mk(a) for a in e.neg))


# ---------------------------------------------------------------------------
# Well-sortedness
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SortProblem:
    clause_index: Optional[int]
    message: str

    def __str__(self) -> str:
        where = "declarations" if self.clause_index is None else f"clause {self.clause_index + 1}"
        return f"{where}: {self.message}"


def _check_term(t: Term, errs: list, where: int, want: Optional[Sort] = None) -> Optional[Sort]:
    if isinstance(t, Mul):
        errs.append(SortProblem(where, "nonlinear product in clause term"))
        return Sort.INT
    if isinstance(t, (Neg, Add, Sub, Scale)):
        subs = [t.arg] if isinstance(t, (Neg, Scale)) else [t.left, t.right]
        for s in subs:
            got = _check_term(s, errs, where, Sort.INT)
            if got is Sort.BOOL:
                errs.append(SortProblem(where, f"Boolean term used in arithmetic: {s}"))
        got = Sort.INT
    else:
        got = term_sort(t)
    if want is not None and got is not want:
        errs.append(SortProblem(where, f"term {t} has sort {got.value}, expected {want.value}"))
    return got


def _check_formula(f: Formula, kinding: Kinding, errs: list, where: int,
                   var_sorts: dict, allow_preds: bool) -> None:
    if isinstance(f, PredApp):
        if not allow_preds:
            errs.append(SortProblem(where, f"predicate application {f.pred} in theory position"))
        sig = kinding.get(f.pred)
        if sig is None:
            errs.append(SortProblem(where, f"predicate variable {f.pred} not in kinding"))
            return
        if len(f.args) != sig.arity:
            errs.append(SortProblem(
                where, f"{f.pred} has arity {sig.arity}, applied to {len(f.args)} arguments"))
            return
        for i, (t, s) in enumerate(zip(f.args, sig.sig)):
            got = _check_term(t, errs, where, None)
            if got is not s:
                errs.append(SortProblem(
                    where, f"argument {i + 1} of {f.pred} has sort {got.value}, "
                           f"expected {s.value}"))
        _record_vars(f, errs, where, var_sorts)
        return
    if isinstance(f, Atom):
        ls = _check_term(f.lhs, errs, where)
        rs = _check_term(f.rhs, errs, where)
        if ls is not rs:
            errs.append(SortProblem(where, f"comparison between sorts in {f}"))
        elif ls is Sort.BOOL and f.rel not in ("=", "<>"):
            errs.append(SortProblem(where, f"ordering relation on Boolean terms in {f}"))
        _record_vars(f, errs, where, var_sorts)
        return
    if isinstance(f, BoolVar):
        _record_vars(f, errs, where, var_sorts)
        return
    if isinstance(f, Not):
        _check_formula(f.arg, kinding, errs, where, var_sorts, allow_preds)
        return
    if isinstance(f, (And, Or)):
        for a in f.args:
            _check_formula(a, kinding, errs, where, var_sorts, allow_preds)


def _record_vars(f: Formula, errs: list, where: int, var_sorts: dict) -> None:
    try:
        formula_vars(f, var_sorts)
    except SortError as e:
        errs.append(SortProblem(where, str(e)))


def check_well_sorted(problem: PfwCSP) -> list:
    """Returns [] when the problem is well sorted, else a list of SortProblem."""
    errs: list = []
    for name, sig in problem.kinding.items():
        if sig.kind is Kind.WF:
            n = sig.arity
            if n % 2 != 0 or sig.sig[: n // 2] != sig.sig[n // 2:]:
                errs.append(SortProblem(
                    None, f"WF predicate {name} signature must split into equal halves"))
        elif sig.kind is Kind.FN:
            if sig.arity < 1:
                errs.append(SortProblem(None, f"FN predicate {name} needs an output position"))
    for i, c in enumerate(problem.clauses):
        var_sorts: dict = {}
        _check_formula(c.theory, problem.kinding, errs, i, var_sorts, allow_preds=False)
        for a in c.pos + c.neg:
            _check_formula(a, problem.kinding, errs, i, var_sorts, allow_preds=True)
        for name in c.pred_names():
            if name not in problem.kinding:
                errs.append(SortProblem(i, f"predicate variable {name} not in kinding"))
    return errs
