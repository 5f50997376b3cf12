"""Encoders from relational verification problems to predicate constraint sets.

Covers k-safety, co-termination (optionally symmetric), and the
termination-insensitive / termination-sensitive generalized-non-interference
encodings with prophecy variables and angelic-choice handling (functional
predicates for infinitary choice, head disjunctions for finitary choice).

Conventions (fixed so golden-file comparisons are stable):
  * system i's variable v is renamed v{i}; its successor v{i}' when v has a
    primed occurrence in the transition formula, else the unprimed name is
    reused in successor tuples;
  * finitary branch successors are v{i}{j} for branch j;
  * argument order of invariant/scheduler predicates is: step-difference d and
    bound b first (when present), then prophecy variables, then system
    variables in system order;
  * the fairness clause for the full schedule set is a tautology and is
    omitted.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from . import lia
from .ir import (
    Add, And, Atom, BoolVar, Clause, FFalse, FTrue, Formula, IntConst, Kind,
    Kinding, Neg, Not, Or, PfwCSP, PredApp, PredSig, Sort, Sub, Term, Var,
    check_well_sorted, fand, fnot, fold_formula, formula_preds, formula_vars,
    forr, subst_formula, term_sort,
)
from .parser import RawTransitionSystem

CHOOSE = "choose"


class EncodeError(Exception):
    pass


# ---------------------------------------------------------------------------
# Renamed system view
# ---------------------------------------------------------------------------

def _base_name(name: str) -> str:
    return re.match(r"[A-Za-z_][A-Za-z0-9_]*", name).group(0)


@dataclass
class SystemView:
    index: int                       # 1-based copy index
    var_names: List[str]             # renamed, in declaration order
    sorts: Dict[str, Sort]
    trans: Formula
    final: Formula
    inputs: List[str]
    outputs: List[str]
    ranked: List[str]
    modified: set                    # renamed names with primed occurrence in trans
    branch: Optional[Tuple[int, Formula, List[set]]] = None  # (n, formula, modified-per-branch)
    choice: Optional[Tuple[str, Sort, Formula, set]] = None  # (r, sort, U, modified)
    diverging: Optional[Tuple[int, Formula, List[set]]] = None

    def cur(self) -> tuple:
        return tuple(Var(v, self.sorts[v]) for v in self.var_names)

    def succ(self, modified: Optional[set] = None, branch: Optional[int] = None) -> tuple:
        mod = self.modified if modified is None else modified
        out = []
        for v in self.var_names:
            if v in mod:
                nm = f"{v}'" if branch is None else f"{v}{branch}"
                out.append(Var(nm, self.sorts[v]))
            else:
                out.append(Var(v, self.sorts[v]))
        return tuple(out)

    def final_neg(self) -> Formula:
        return fnot(self.final)


def view_system(ts: RawTransitionSystem, index: int) -> SystemView:
    names = [v for v, _ in ts.vars]
    rn: Dict[str, str] = {}
    sorts: Dict[str, Sort] = {}
    for v, s in ts.vars:
        rn[v] = f"{v}{index}"
        sorts[rn[v]] = s

    def rename_in(f: Optional[Formula], branches: Optional[int] = None):
        """Renames vars; returns (formula, modified-per-branch or flat set)."""
        if f is None:
            return None, None
        mapping = {}
        mod_flat = set()
        mod_branch = [set() for _ in range(branches or 0)]
        for name in formula_vars(f):
            base = _base_name(name)
            if base not in rn and ts.choice_var and base == ts.choice_var[0]:
                mapping[name] = Var(f"{base}{index}", ts.choice_var[1])
                continue
            if base not in rn:
                raise EncodeError(f"undeclared variable {name} in system formula")
            suffix = name[len(base):]
            sort = sorts[rn[base]]
            if suffix == "":
                mapping[name] = Var(rn[base], sort)
            elif suffix == "'":
                mapping[name] = Var(f"{rn[base]}'", sort)
                mod_flat.add(rn[base])
            elif suffix.startswith("'") and suffix[1:].isdigit():
                j = int(suffix[1:])
                if branches is None or not (1 <= j <= branches):
                    raise EncodeError(f"branch-indexed variable {name} outside a "
                                      f"branch formula")
                mapping[name] = Var(f"{rn[base]}{j}", sort)
                mod_branch[j - 1].add(rn[base])
            else:
                raise EncodeError(f"cannot interpret variable {name}")
        renamed = subst_formula(f, mapping)
        return renamed, (mod_branch if branches else mod_flat)

    trans, modified = rename_in(ts.trans)
    final, _ = rename_in(ts.final)
    pick = lambda lst: [rn[v] for v in (lst if lst is not None else names)]
    sv = SystemView(index, [rn[v] for v in names], sorts, trans, final,
                    pick(ts.inputs), pick(ts.outputs), pick(ts.ranked), modified)
    if ts.branch_trans is not None:
        bf, mods = rename_in(ts.branch_trans, branches=ts.branches)
        sv.branch = (ts.branches, bf, mods)
    if ts.choice_trans is not None:
        rname = f"{ts.choice_var[0]}{index}"
        uf, umod = rename_in(ts.choice_trans)
        sv.choice = (rname, ts.choice_var[1], uf, umod)
    if ts.diverging is not None:
        n = ts.diverging_branches
        df, dmods = rename_in(ts.diverging, branches=n)
        sv.diverging = (n or 0, df, dmods if n else [dmods])
    return sv


# ---------------------------------------------------------------------------
# Relational problems
# ---------------------------------------------------------------------------

@dataclass
class RelationalProblem:
    kind: str  # ksafety | coterm | tigni | tsgni
    systems: List[RawTransitionSystem]
    pre: Formula
    post: Optional[Formula] = None
    symmetric: bool = False


def encode(problem: RelationalProblem) -> PfwCSP:
    if problem.kind == "ksafety":
        return encode_ksafety(problem.systems, problem.pre, problem.post)
    if problem.kind == "coterm":
        return encode_coterm(problem.systems, problem.pre,
                             symmetric=problem.symmetric)
    if problem.kind == "tigni":
        return encode_tigni(problem.systems, problem.pre, problem.post)
    if problem.kind == "tsgni":
        return encode_tsgni(problem.systems, problem.pre, problem.post)
    raise EncodeError(f"unknown property kind {problem.kind}")


# ---------------------------------------------------------------------------
# Clause assembly
# ---------------------------------------------------------------------------

def _assemble(heads: Sequence, body: Sequence, fn_preds: set) -> Clause:
    """Builds a clause from head/body parts (PredApp or Formula).

    Functional predicate applications nested inside body formulas are lifted to
    top-level body atoms with fresh output variables (sound by totality and
    functionality); other nested applications are rejected.
    """
    pos: List[PredApp] = []
    neg: List[PredApp] = []
    theory: List[Formula] = []
    pres_heads: List[Formula] = []
    pres_body: List[Formula] = []
    counter = [0]

    def lift(f: Formula, positive: bool) -> Formula:
        if isinstance(f, PredApp):
            if f.pred not in fn_preds:
                raise EncodeError(f"{f.pred} cannot occur nested in a formula")
            if not positive:
                raise EncodeError(f"nested {f.pred} under negation")
            counter[0] += 1
            out = Var(f"v_{f.pred}_{counter[0]}", term_sort(f.args[-1]))
            neg.append(PredApp(f.pred, f.args[:-1] + (out,)))
            return Atom("=", f.args[-1], out)
        if isinstance(f, Not):
            return Not(lift(f.arg, not positive))
        if isinstance(f, And):
            return And(tuple(lift(a, positive) for a in f.args))
        if isinstance(f, Or):
            return Or(tuple(lift(a, positive) for a in f.args))
        return f

    for h in heads:
        if isinstance(h, PredApp):
            if h not in pos:
                pos.append(h)
        else:
            theory.append(h)
            pres_heads.append(h)
    for b in body:
        if isinstance(b, PredApp):
            neg.append(b)
        else:
            lifted = lift(b, True)
            if isinstance(lifted, FTrue):
                continue
            theory.append(fnot(lifted))
            pres_body.append(lifted)
    return Clause(forr(theory), tuple(pos), tuple(neg),
                  tuple(pres_heads), tuple(pres_body))


def _post_parts(post: Formula) -> Tuple[list, list]:
    """Splits a post formula into (heads, extra body conjuncts) for printing."""
    disjuncts = list(post.args) if isinstance(post, Or) else [post]
    heads, body = [], []
    for d in disjuncts:
        if isinstance(d, Not):
            body.append(d.arg)
        else:
            heads.append(d)
    if not heads:
        return [post], []
    return [forr(heads)] if len(heads) > 1 else heads, body


class _Names:
    """Fresh predicate/variable names against the user vocabulary."""

    def __init__(self, taken):
        self.taken = set(taken)

    def fresh(self, base: str) -> str:
        name = base
        n = 0
        while name in self.taken:
            n += 1
            name = f"{base}_{n}"
        self.taken.add(name)
        return name


def _setup(systems: Sequence[RawTransitionSystem]) -> Tuple[List[SystemView], _Names]:
    views = [view_system(ts, i + 1) for i, ts in enumerate(systems)]
    taken = set()
    for v in views:
        for name in v.var_names:
            if name in taken:
                raise EncodeError(f"renamed variable collision on {name}")
            taken.add(name)
    return views, _Names(taken)


def _sch_name(k: int, A: tuple) -> str:
    return "Sch" + "".join("T" if i in A else "F" for i in range(1, k + 1))


def _subsets(k: int):
    out = []
    for size in range(1, k + 1):
        out.extend(itertools.combinations(range(1, k + 1), size))
    out.sort(key=lambda A: (len(A), A))
    return out


def _state_sig(views, extra=()):  # argument sorts of inv/sch
    sig = list(extra)
    for v in views:
        sig.extend(v.sorts[n] for n in v.var_names)
    return tuple(sig)


# ---------------------------------------------------------------------------
# k-safety (clauses (1)-(5); (4) simplified per listing form, full-set omitted)
# ---------------------------------------------------------------------------

def encode_ksafety(systems: Sequence[RawTransitionSystem], pre: Formula,
                   post: Formula) -> PfwCSP:
    if post is None:
        raise EncodeError("k-safety needs a post relation")
    views, names = _setup(systems)
    k = len(views)
    inv = names.fresh("Inv")
    subsets = _subsets(k)
    sch = {A: names.fresh(_sch_name(k, A)) for A in subsets}

    allcur = tuple(t for v in views for t in v.cur())
    inv_cur = PredApp(inv, allcur)

    def inv_at(stepping: tuple) -> PredApp:
        args = []
        for v in views:
            args.extend(v.succ() if v.index in stepping else v.cur())
        return PredApp(inv, tuple(args))

    clauses = [_assemble([inv_cur], [pre], set())]
    for A in subsets:
        body = [inv_cur, PredApp(sch[A], allcur)] + [views[i - 1].trans for i in A]
        clauses.append(_assemble([inv_at(A)], body, set()))
    for A in subsets:
        if len(A) == k:
            continue  # tautological fairness instance
        outside = [v.final_neg() for v in views if v.index not in A]
        inside = [views[i - 1].final_neg() for i in A]
        clauses.append(_assemble([forr(inside)],
                                 [inv_cur, PredApp(sch[A], allcur), forr(outside)],
                                 set()))
    clauses.append(_assemble([PredApp(sch[A], allcur) for A in subsets],
                             [inv_cur, forr(v.final_neg() for v in views)], set()))
    ph, pb = _post_parts(post)
    clauses.append(_assemble(ph, [inv_cur] + [v.final for v in views] + pb, set()))

    kinding = Kinding()
    sig = _state_sig(views)
    kinding[inv] = PredSig(Kind.ORD, sig)
    for A in subsets:
        kinding[sch[A]] = PredSig(Kind.ORD, sig)
    problem = PfwCSP(clauses, kinding)
    _check(problem)
    return problem


# ---------------------------------------------------------------------------
# Co-termination (Def. 6) and the shared two-copy machinery for TS-GNI
# ---------------------------------------------------------------------------

@dataclass
class _GniParts:
    prophecy: List[Var] = field(default_factory=list)
    fnr: Optional[str] = None
    fn_preds: set = field(default_factory=set)
    fnr_deps: Optional[tuple] = None

    def correct(self, view: SystemView) -> List[Formula]:
        """p = out conjuncts (empty without prophecy)."""
        outs = [Var(o, view.sorts[o]) for o in view.outputs]
        return [Atom("=", p, o) for p, o in zip(self.prophecy, outs)]


def _angelic_steps(view: SystemView, gni: Optional[_GniParts]):
    """Successor tuples and body parts for one step of the angelic copy."""
    if gni is not None and view.branch is not None:
        n, bf, mods = view.branch
        succs = [view.succ(mods[j], branch=j + 1) for j in range(n)]
        return succs, [bf]
    if gni is not None and view.choice is not None:
        r, rsort, uf, umod = view.choice
        fnr_atom = PredApp(gni.fnr, tuple(gni.prophecy) + view.cur() + (Var(r, rsort),))
        return [view.succ(umod)], [fnr_atom, uf]
    return [view.succ()], [view.trans]


def _coterm_clauses(views, names, pre: Formula, gni: Optional[_GniParts],
                    post: Optional[Formula], symmetric: bool,
                    wf_both: bool) -> PfwCSP:
    v1, v2 = views
    d = names.fresh("d")
    b = names.fresh("b")
    dv, bv = Var(d), Var(b)
    dpv = Var(f"{d}'")
    prophecy = tuple(gni.prophecy) if gni else ()
    inv = names.fresh("Inv")
    sch = {(1,): names.fresh("SchTF"), (2,): names.fresh("SchFT"),
           (1, 2): names.fresh("SchTT")}
    fnbnd = names.fresh("FN_DB")
    fn_preds = {fnbnd} | (gni.fn_preds if gni else set())

    state = prophecy + v1.cur() + v2.cur()
    inv_cur = PredApp(inv, (dv, bv) + state)

    def inv_head(darg, s1, s2):
        return PredApp(inv, (darg, bv) + prophecy + s1 + s2)

    inputs = tuple(Var(n, v1.sorts[n]) for n in v1.inputs) + \
        tuple(Var(n, v2.sorts[n]) for n in v2.inputs)
    fnbnd_atom = PredApp(fnbnd, inputs + (bv,))

    F1, F2 = v1.final, v2.final
    nF1, nF2 = v1.final_neg(), v2.final_neg()

    clauses = [
        _assemble([inv_head(IntConst(0), v1.cur(), v2.cur())],
                  [fnbnd_atom, pre], fn_preds),
    ]
    # (3b) system 1 steps alone, d + 1
    guard_up = forr([F1, F2, Atom("=", dpv, _plus(dv, 1))])
    clauses.append(_assemble(
        [inv_head(dpv, v1.succ(), v2.cur())],
        [inv_cur, PredApp(sch[(1,)], (dv, bv) + state), v1.trans, guard_up],
        fn_preds))
    # (3a) system 2 steps alone, d - 1
    succs2, parts2 = _angelic_steps(v2, gni)
    guard_down = forr([F1, F2, Atom("=", dpv, _plus(dv, -1))])
    clauses.append(_assemble(
        [inv_head(dpv, v1.cur(), s2) for s2 in succs2],
        [inv_cur, PredApp(sch[(2,)], (dv, bv) + state)] + parts2 + [guard_down],
        fn_preds))
    # (3c) lock step, d unchanged
    clauses.append(_assemble(
        [inv_head(dv, v1.succ(), s2) for s2 in succs2],
        [inv_cur, PredApp(sch[(1, 2)], (dv, bv) + state), v1.trans] + parts2,
        fn_preds))
    # (4b)/(4a) fairness
    clauses.append(_assemble([nF1], [inv_cur, PredApp(sch[(1,)], (dv, bv) + state),
                                     nF2], fn_preds))
    clauses.append(_assemble([nF2], [inv_cur, PredApp(sch[(2,)], (dv, bv) + state),
                                     nF1], fn_preds))
    # (5) some schedule applies
    clauses.append(_assemble(
        [PredApp(sch[A], (dv, bv) + state) for A in ((1,), (2,), (1, 2))],
        [inv_cur, forr([nF1, nF2])], fn_preds))
    # (2) difference bound while both run
    bound = fand([Atom("<=", _neg_term(bv), dv), Atom("<=", dv, bv),
                  Atom(">=", bv, IntConst(0))])
    clauses.append(_assemble([bound], [inv_cur, nF1, nF2], fn_preds))

    kinding = Kinding()
    sig = (Sort.INT, Sort.INT) + tuple(p.sort for p in prophecy) + \
        _state_sig(views)
    kinding[inv] = PredSig(Kind.ORD, sig)
    for A in ((1,), (2,), (1, 2)):
        kinding[sch[A]] = PredSig(Kind.ORD, sig)
    kinding[fnbnd] = PredSig(Kind.FN, tuple(t.sort for t in inputs) + (Sort.INT,))

    # (m5') post clause for TS-GNI
    if post is not None:
        ph, pb = _post_parts(post)
        correct = gni.correct(v1) if gni else []
        clauses.append(_assemble(ph, [inv_cur, F1] + correct + [F2] + pb, fn_preds))

    # (6) well-foundedness of the lagging copy
    wf_names = []
    pairs = [(v2, v1, "WF_R2" if wf_both else "WF_R")]
    if wf_both:
        pairs.insert(0, (v1, v2, "WF_R1"))
    for lagging, done, base in pairs:
        wname = names.fresh(base)
        wf_names.append(wname)
        ranked = [Var(n, lagging.sorts[n]) for n in lagging.ranked]
        correct = gni.correct(v1) if (gni and lagging is v2) else []
        if lagging.diverging is not None:
            nb, df, dmods = lagging.diverging
            if nb:
                succs = [lagging.succ(dmods[j], branch=j + 1) for j in range(nb)]
            else:
                succs = [lagging.succ(dmods[0])]
            div_parts = [df]
        elif gni is not None and lagging.branch is not None:
            nb, bf, mods = lagging.branch
            succs = [lagging.succ(mods[j], branch=j + 1) for j in range(nb)]
            div_parts = [bf]
        else:
            succs = [lagging.succ()]
            div_parts = [lagging.trans]
        heads = []
        for s in succs:
            proj = tuple(s[lagging.var_names.index(n)] for n in lagging.ranked)
            heads.append(PredApp(wname, tuple(ranked) + proj))
        clauses.append(_assemble(
            heads, [inv_cur, done.final] + correct + [lagging.final_neg()] + div_parts,
            fn_preds))
        half = tuple(lagging.sorts[n] for n in lagging.ranked)
        kinding[wname] = PredSig(Kind.WF, half + half)

    if gni and gni.fnr:
        fnr_sig = tuple(p.sort for p in gni.prophecy)
        if v2.choice is not None:
            fnr_sig += tuple(v2.sorts[n] for n in v2.var_names) + (v2.choice[1],)
            kinding[gni.fnr] = PredSig(Kind.FN, fnr_sig)
        elif gni.fnr_deps is not None:
            kinding[gni.fnr] = PredSig(Kind.FN, gni.fnr_deps)
    problem = PfwCSP(clauses, kinding)
    _check(problem)
    return problem


def _plus(t: Term, k: int) -> Term:
    return Add(t, IntConst(k)) if k >= 0 else Sub(t, IntConst(-k))


def _neg_term(t: Term) -> Term:
    return Neg(t)


def encode_coterm(systems: Sequence[RawTransitionSystem], pre: Formula,
                  symmetric: bool = False) -> PfwCSP:
    if len(systems) != 2:
        raise EncodeError("co-termination relates exactly 2 systems")
    views, names = _setup(systems)
    return _coterm_clauses(views, names, pre, None, None, symmetric,
                           wf_both=symmetric)


def encode_tsgni(systems: Sequence[RawTransitionSystem], pre: Formula,
                 post: Formula) -> PfwCSP:
    if len(systems) != 2:
        raise EncodeError("GNI relates exactly 2 systems")
    if post is None:
        raise EncodeError("TS-GNI needs a post relation")
    views, names = _setup(systems)
    gni, pre2 = _gni_parts(views, names, pre)
    return _coterm_clauses(views, names, pre2, gni, post, False, wf_both=False)


# ---------------------------------------------------------------------------
# GNI front matter: prophecy variables and angelic-choice rewriting
# ---------------------------------------------------------------------------

def _gni_parts(views, names: _Names, pre: Formula) -> Tuple[_GniParts, Formula]:
    v1, v2 = views
    gni = _GniParts()
    outs = v1.outputs
    for o in outs:
        base = "pr" if len(outs) == 1 else f"pr_{o}"
        gni.prophecy.append(Var(names.fresh(base), v1.sorts[o]))
    uses_choose = CHOOSE in formula_preds(pre)
    needs_fnr = uses_choose or v2.choice is not None
    if needs_fnr:
        gni.fnr = names.fresh("FN_R")
        gni.fn_preds.add(gni.fnr)
    if not (needs_fnr or v2.branch is not None):
        raise EncodeError(
            "the angelic system needs choice_trans, branches, or a choose() in pre")
    pre2 = _rewrite_choose(pre, gni)
    return gni, pre2


def _rewrite_choose(f: Formula, gni: _GniParts) -> Formula:
    sig_holder = {}

    def walk(g: Formula) -> Formula:
        if isinstance(g, PredApp):
            if g.pred != CHOOSE:
                raise EncodeError(f"unexpected predicate {g.pred} in pre/post")
            out, deps = g.args[0], g.args[1:]
            args = tuple(gni.prophecy) + deps + (out,)
            from .ir import term_sort
            sig_holder["sig"] = tuple(term_sort(t) for t in args)
            return PredApp(gni.fnr, args)
        if isinstance(g, Not):
            return Not(walk(g.arg))
        if isinstance(g, And):
            return And(tuple(walk(a) for a in g.args))
        if isinstance(g, Or):
            return Or(tuple(walk(a) for a in g.args))
        return g

    out = walk(f)
    if "sig" in sig_holder:
        gni.fnr_deps = sig_holder["sig"]
    return out


def encode_tigni(systems: Sequence[RawTransitionSystem], pre: Formula,
                 post: Formula) -> PfwCSP:
    if len(systems) != 2:
        raise EncodeError("GNI relates exactly 2 systems")
    if post is None:
        raise EncodeError("TI-GNI needs a post relation")
    views, names = _setup(systems)
    v1, v2 = views
    gni, pre2 = _gni_parts(views, names, pre)
    prophecy = tuple(gni.prophecy)
    inv = names.fresh("Inv")
    sch = {(1,): names.fresh("SchTF"), (2,): names.fresh("SchFT"),
           (1, 2): names.fresh("SchTT")}

    state = prophecy + v1.cur() + v2.cur()
    inv_cur = PredApp(inv, state)
    correct = gni.correct(v1)
    nF1p = forr([v1.final_neg()] + [fnot(eq) for eq in correct])
    F1, F2, nF2 = v1.final, v2.final, v2.final_neg()

    succs2, parts2 = _angelic_steps(v2, gni)
    clauses = [
        _assemble([inv_cur], [pre2], gni.fn_preds),
        _assemble([PredApp(inv, prophecy + v1.succ() + v2.cur())],
                  [inv_cur, PredApp(sch[(1,)], state), v1.trans], gni.fn_preds),
        _assemble([PredApp(inv, prophecy + v1.cur() + s2) for s2 in succs2],
                  [inv_cur, PredApp(sch[(2,)], state)] + parts2, gni.fn_preds),
        _assemble([PredApp(inv, prophecy + v1.succ() + s2) for s2 in succs2],
                  [inv_cur, PredApp(sch[(1, 2)], state), v1.trans] + parts2,
                  gni.fn_preds),
        _assemble([nF1p], [inv_cur, PredApp(sch[(1,)], state), nF2], gni.fn_preds),
        _assemble([nF2], [inv_cur, PredApp(sch[(2,)], state), nF1p], gni.fn_preds),
        _assemble([PredApp(sch[A], state) for A in ((1,), (2,), (1, 2))],
                  [inv_cur, forr([nF1p, nF2])], gni.fn_preds),
    ]
    ph, pb = _post_parts(post)
    clauses.append(_assemble(ph, [inv_cur, F1] + correct + [F2] + pb, gni.fn_preds))

    kinding = Kinding()
    sig = tuple(p.sort for p in prophecy) + _state_sig(views)
    kinding[inv] = PredSig(Kind.ORD, sig)
    for A in ((1,), (2,), (1, 2)):
        kinding[sch[A]] = PredSig(Kind.ORD, sig)
    if gni.fnr:
        if v2.choice is not None:
            fnr_sig = tuple(p.sort for p in prophecy) + \
                tuple(v2.sorts[n] for n in v2.var_names) + (v2.choice[1],)
        else:
            fnr_sig = gni.fnr_deps
        kinding[gni.fnr] = PredSig(Kind.FN, fnr_sig)
    problem = PfwCSP(clauses, kinding)
    _check(problem)
    return problem


def _check(problem: PfwCSP):
    errs = check_well_sorted(problem)
    if errs:
        raise EncodeError("; ".join(str(e) for e in errs))


# ---------------------------------------------------------------------------
# Hints
# ---------------------------------------------------------------------------

def add_hints(problem: PfwCSP, hints: Sequence[Clause]) -> PfwCSP:
    merged = PfwCSP(list(problem.clauses) + list(hints), Kinding(problem.kinding))
    errs = check_well_sorted(merged)
    if errs:
        raise EncodeError("hints do not sort-check: " +
                          "; ".join(str(e) for e in errs))
    return merged


# ---------------------------------------------------------------------------
# Lint queries (side conditions the encodings assume)
# ---------------------------------------------------------------------------

@dataclass
class LintFinding:
    name: str
    ok: Optional[bool]   # None = not checkable / unknown
    detail: str = ""


def lint_system(ts: RawTransitionSystem) -> List[LintFinding]:
    """Validity checks: final states self-loop; choice relation is functional.

    Totality of the choice relation (every transition is covered by some choice
    value) is existential and not checkable quantifier-free; reported as such.
    """
    out = []
    view = view_system(ts, 1)
    eqs = []
    for v in view.var_names:
        if v in view.modified:
            s = view.sorts[v]
            eqs.append(Atom("=", Var(f"{v}'", s), Var(v, s)))
    goal = forr([fnot(view.final), fnot(view.trans), fand(eqs)])
    verdict = lia.is_valid(goal)
    out.append(LintFinding("final-self-loop", verdict,
                           "final(v) and trans(v,v') implies v' = v"))
    if view.choice is not None:
        r, rsort, uf, umod = view.choice
        renames = {}
        eqs2 = []
        for v in umod:
            s = view.sorts[v]
            renames[f"{v}'"] = Var(f"{v}''", s)
            eqs2.append(Atom("=", Var(f"{v}'", s), Var(f"{v}''", s)))
        uf2 = subst_formula(uf, renames)
        goal = forr([fnot(uf), fnot(uf2), fand(eqs2)])
        verdict = lia.is_valid(goal)
        out.append(LintFinding("choice-functional", verdict,
                               "U(r,v,v') and U(r,v,v'') implies v' = v''"))
        out.append(LintFinding("choice-total", None,
                               "T(v,v') implies exists r. U(r,v,v') "
                               "(existential; not checked)"))
    return out


# ---------------------------------------------------------------------------
# Structural comparison against a golden listing (modulo renaming)
# ---------------------------------------------------------------------------

def _pred_profile(problem: PfwCSP, name: str):
    sig = problem.kinding[name]
    pos = sum(1 for c in problem.clauses for a in c.pos if a.pred == name)
    neg = sum(1 for c in problem.clauses for a in c.neg if a.pred == name)
    return (sig.kind.value, len(sig.sig), pos, neg)


def _unify_terms(t1, t2, vmap: dict, rmap: dict) -> bool:
    from .ir import Add, BoolConst, Neg, Scale
    if isinstance(t1, Var) and isinstance(t2, Var):
        if t1.sort is not t2.sort:
            return False
        if t1.name in vmap:
            return vmap[t1.name] == t2.name
        if t2.name in rmap:
            return False
        vmap[t1.name] = t2.name
        rmap[t2.name] = t1.name
        return True
    if isinstance(t1, IntConst) and isinstance(t2, IntConst):
        return t1.value == t2.value
    if isinstance(t1, BoolConst) and isinstance(t2, BoolConst):
        return t1.value == t2.value
    if type(t1) is not type(t2):
        return False
    if isinstance(t1, (Neg,)):
        return _unify_terms(t1.arg, t2.arg, vmap, rmap)
    if isinstance(t1, Scale):
        return t1.coeff == t2.coeff and _unify_terms(t1.arg, t2.arg, vmap, rmap)
    if isinstance(t1, (Add, Sub)):
        return _unify_terms(t1.left, t2.left, vmap, rmap) and \
            _unify_terms(t1.right, t2.right, vmap, rmap)
    return False


def _match_clause(c1: Clause, c2: Clause, predmap: dict) -> bool:
    if len(c1.pos) != len(c2.pos) or len(c1.neg) != len(c2.neg):
        return False

    def groups(atoms1, atoms2):
        by = {}
        for a in atoms2:
            by.setdefault(a.pred, []).append(a)
        out = []
        for a in atoms1:
            want = predmap.get(a.pred)
            if want is None or want not in by:
                return None
            out.append((a, by[want]))
        return out

    gpos = groups(c1.pos, c2.pos)
    gneg = groups(c1.neg, c2.neg)
    if gpos is None or gneg is None:
        return False

    pairs = gpos + gneg

    def assign(i: int, used: set, vmap: dict, rmap: dict) -> bool:
        if i == len(pairs):
            return _theory_equal(c1, c2, vmap, rmap)
        a, candidates = pairs[i]
        for cand in candidates:
            if id(cand) in used or len(cand.args) != len(a.args):
                continue
            v2, r2 = dict(vmap), dict(rmap)
            if all(_unify_terms(t1, t2, v2, r2) for t1, t2 in zip(a.args, cand.args)):
                if assign(i + 1, used | {id(cand)}, v2, r2):
                    return True
        return False

    return assign(0, set(), {}, {})


def _theory_equal(c1: Clause, c2: Clause, vmap: dict, rmap: dict) -> bool:
    all1 = formula_vars(c1.theory)
    all2 = formula_vars(c2.theory)
    left1 = sorted(n for n in all1 if n not in vmap)
    left2 = sorted(n for n in all2 if n not in rmap)
    # prefer name-identical leftovers, then try small permutations per sort
    for n in list(left1):
        if n in left2 and all1[n] is all2[n]:
            vmap[n] = n
            rmap[n] = n
            left1.remove(n)
            left2.remove(n)
    if len(left1) != len(left2) or len(left1) > 6:
        return False

    def check(extra: dict) -> bool:
        full = {**vmap, **extra}
        theta = {n: Var(m, all1.get(n, Sort.INT)) for n, m in full.items()
                 if n in all1}
        mapped = subst_formula(c1.theory, theta)
        return lia.equivalent(mapped, c2.theory) is True

    for perm in itertools.permutations(left2):
        if all(all1[a] is all2[b] for a, b in zip(left1, perm)):
            if check(dict(zip(left1, perm))):
                return True
    return False


@dataclass
class CompareReport:
    equal: bool
    detail: str = ""
    pred_map: Optional[dict] = None


def structurally_equal(ours: PfwCSP, golden: PfwCSP) -> CompareReport:
    """Clause-set equality modulo predicate/variable renaming.

    Clause counts must match exactly; theory parts are compared by QFLIA
    equivalence under the variable correspondence induced by atom unification.
    """
    if len(ours.clauses) != len(golden.clauses):
        return CompareReport(False, f"clause counts differ: "
                             f"{len(ours.clauses)} vs {len(golden.clauses)}")
    profiles1 = {n: _pred_profile(ours, n) for n in ours.kinding}
    profiles2 = {n: _pred_profile(golden, n) for n in golden.kinding}
    if sorted(profiles1.values()) != sorted(profiles2.values()):
        return CompareReport(False, "predicate profiles differ: "
                             f"{sorted(profiles1.items())} vs {sorted(profiles2.items())}")
    names1 = sorted(profiles1)
    candidates = {n: [m for m in profiles2 if profiles2[m] == profiles1[n]]
                  for n in names1}

    order = sorted(names1, key=lambda n: len(candidates[n]))

    def try_map(i: int, predmap: dict, used: set):
        if i == len(order):
            return _match_all(ours, golden, predmap)
        n = order[i]
        for m in candidates[n]:
            if m in used:
                continue
            res = try_map(i + 1, {**predmap, n: m}, used | {m})
            if res is not None:
                return res
        return None

    predmap = try_map(0, {}, set())
    if predmap is None:
        return CompareReport(False, "no clause-set correspondence found")
    return CompareReport(True, "structurally equal", predmap)


def _match_all(ours: PfwCSP, golden: PfwCSP, predmap: dict):
    remaining = list(golden.clauses)

    def backtrack(i: int, remaining: list):
        if i == len(ours.clauses):
            return predmap
        c1 = ours.clauses[i]
        for j, c2 in enumerate(remaining):
            if _match_clause(c1, c2, predmap):
                res = backtrack(i + 1, remaining[:j] + remaining[j + 1:])
                if res is not None:
                    return res
        return None

    return backtrack(0, remaining)
