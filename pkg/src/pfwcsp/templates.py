"""Stratified template families for ordinary, well-founded, and functional
predicate variables, and the model-based synthesis step built on them.

Each family is indexed by a small integer parameter vector; growing the vector
strictly grows the set of expressible predicates.  Unknown coefficients become
solver variables; applying a skeleton to a ground argument tuple folds every
coefficient-times-argument product to a linear term, so synthesis queries stay
in QFLIA.

Boolean arguments do not join the affine sums: each disjunct/region/piece gets
a three-valued selector per Boolean argument (require-true / require-false /
don't-care, encoded as an unknown in {-1,0,1}); selectors do not count toward
coefficient-sum bounds.

Well-founded skeletons use the refined family (ranking components may go
negative once a lexicographically earlier component on both sides is negative);
the plain family is kept behind `use_refined=False` for differential testing.
Any within-bounds assignment yields a well-founded relation / total function by
construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from .ir import (
    And, Atom, BoolVar, Candidate, ExampleInstance, FFalse, FTrue, Formula,
    IntConst, Kind, Kinding, Mul, Not, Or, PredicateDefinition, Sort, Term,
    Var, fand, fnot, fold_formula, forr, subst_formula, value_term,
)

INITIAL = {
    Kind.ORD: {"nd": 1, "nc": 1, "ac": 1, "ad": 1},
    Kind.WF: {"np": 1, "nl": 1, "nc": 1, "rc": 1, "rd": 1, "dc": 1, "dd": 1},
    Kind.FN: {"nd": 1, "nc": 1, "dc": 1, "dd": 1, "ec": 1, "ed": 1},
}

ROTATION = {
    Kind.ORD: ("nd", "nc", "ad", "ac"),
    Kind.WF: ("nl", "np", "nc", "rd", "rc", "dd", "dc"),
    Kind.FN: ("nd", "nc", "ed", "ec", "dd", "dc"),
}

# structural parameters must stay >= 1; bounds may be 0
_MIN = {"nd": 1, "nc": 1, "np": 1, "nl": 1,
        "ac": 0, "ad": 0, "rc": 0, "rd": 0, "dc": 0, "dd": 0, "ec": 0, "ed": 0}


@dataclass
class TemplateParams:
    per_pred: Dict[str, Dict[str, int]]
    rotation: Dict[str, int] = field(default_factory=dict)

    @classmethod
    def initial(cls, kinding: Kinding,
                overrides: Optional[dict] = None) -> "TemplateParams":
        per = {}
        for name, sig in kinding.items():
            per[name] = dict(INITIAL[sig.kind])
            if overrides:
                for k, v in overrides.get(name, overrides.get("*", {})).items():
                    if k in per[name]:
                        per[name][k] = max(int(v), _MIN[k])
        return cls(per, {name: 0 for name in per})

    def copy(self) -> "TemplateParams":
        return TemplateParams({n: dict(p) for n, p in self.per_pred.items()},
                              dict(self.rotation))

    def dominates(self, other: "TemplateParams") -> bool:
        return all(self.per_pred[n][k] >= v
                   for n, p in other.per_pred.items() for k, v in p.items())

    def snapshot(self) -> dict:
        return {n: dict(p) for n, p in self.per_pred.items()}

    def __str__(self) -> str:
        parts = []
        for n, p in sorted(self.per_pred.items()):
            parts.append(f"{n}({','.join(f'{k}={v}' for k, v in p.items())})")
        return " ".join(parts)


@dataclass
class TemplateInstance:
    pred: str
    kind: Kind
    arg_names: tuple              # placeholder argument names, by position
    skeleton: Formula             # over placeholders and unknowns
    unknowns: List[str]
    aux: List[str]                # |.|-expansion helpers, dropped at extraction
    bounds: List[Tuple[str, Formula]]

    def apply(self, values: Sequence) -> Formula:
        theta = {n: value_term(v) for n, v in zip(self.arg_names, values)}
        return fold_formula(subst_formula(self.skeleton, theta))


def _affine(prefix: str, int_args: List[str], unknowns: List[str]) -> Term:
    """c0 + sum c_k * x_k with fresh unknown names recorded in `unknowns`."""
    c0 = f"{prefix}!0"
    unknowns.append(c0)
    t: Term = Var(c0)
    for k, x in enumerate(int_args, start=1):
        ck = f"{prefix}!{k}"
        unknowns.append(ck)
        t = _add(t, Mul(Var(ck), Var(x, Sort.INT)))
    return t


def _add(a: Term, b: Term) -> Term:
    from .ir import Add
    return Add(a, b)


def _abs_le(c: str, bound: int) -> Formula:
    return And((Atom("<=", Var(c), IntConst(bound)),
                Atom("<=", IntConst(-bound), Var(c))))


def _sum_abs_le(coeffs: List[str], bound: int, aux: List[str]) -> Formula:
    """sum |c| <= bound via one helper a >= |c| per coefficient."""
    if not coeffs:
        return FTrue()
    parts = []
    total: Optional[Term] = None
    for c in coeffs:
        a = f"abs!{c}"
        aux.append(a)
        parts.append(Atom(">=", Var(a), Var(c)))
        parts.append(Atom(">=", Var(a), _neg(Var(c))))
        total = Var(a) if total is None else _add(total, Var(a))
    parts.append(Atom("<=", total, IntConst(bound)))
    return fand(parts)


def _neg(t: Term) -> Term:
    from .ir import Neg
    return Neg(t)


def _bool_guard(sel: str, b: str) -> Formula:
    """Three-valued guard: sel=1 requires b, sel=-1 requires !b, sel=0 ignores."""
    return And((Or((Atom("<=", Var(sel), IntConst(0)), BoolVar(b))),
                Or((Atom(">=", Var(sel), IntConst(0)), Not(BoolVar(b))))))


def _sel_range(sels: List[str]) -> Formula:
    return fand(And((Atom("<=", Var(s), IntConst(1)),
                     Atom(">=", Var(s), IntConst(-1)))) for s in sels)


def _split_args(sig) -> Tuple[tuple, List[str], List[str]]:
    names = tuple(f"arg!{i}" for i in range(len(sig)))
    ints = [names[i] for i, s in enumerate(sig) if s is Sort.INT]
    bools = [names[i] for i, s in enumerate(sig) if s is Sort.BOOL]
    return names, ints, bools


# ---------------------------------------------------------------------------
# Ordinary predicates: DNF of affine inequalities
# ---------------------------------------------------------------------------

def instantiate_ord(pred: str, sig, p: Dict[str, int]) -> TemplateInstance:
    names, ints, bools = _split_args(sig)
    unknowns: List[str] = []
    aux: List[str] = []
    sels: List[str] = []
    ac_parts, ad_parts = [], []
    disjuncts = []
    for i in range(p["nd"]):
        conj = []
        for b_ix, b in enumerate(bools):
            s = f"s!{pred}!{i}!{b_ix}"
            sels.append(s)
            conj.append(_bool_guard(s, b))
        for j in range(p["nc"]):
            prefix = f"c!{pred}!{i}!{j}"
            t = _affine(prefix, ints, unknowns)
            conj.append(Atom(">=", t, IntConst(0)))
            ks = [f"{prefix}!{k}" for k in range(1, len(ints) + 1)]
            ac_parts.append(_sum_abs_le(ks, p["ac"], aux))
            ad_parts.append(_abs_le(f"{prefix}!0", p["ad"]))
        disjuncts.append(fand(conj))
    skeleton = forr(disjuncts)
    bounds = [(f"tpl_{pred}_ac", fand(ac_parts)), (f"tpl_{pred}_ad", fand(ad_parts))]
    if sels:
        bounds.append((f"tpl_{pred}_sel", _sel_range(sels)))
    return TemplateInstance(pred, Kind.ORD, names, skeleton,
                            unknowns + sels, aux, bounds)


# ---------------------------------------------------------------------------
# Well-founded predicates: piecewise lexicographic affine ranking relations
# ---------------------------------------------------------------------------

def instantiate_wf(pred: str, sig, p: Dict[str, int],
                   use_refined: bool = True) -> TemplateInstance:
    if len(sig) % 2 != 0 or sig[: len(sig) // 2] != sig[len(sig) // 2:]:
        raise ValueError(f"WF predicate {pred} needs signature (s..,s..)")
    half = len(sig) // 2
    names = tuple(f"arg!{i}" for i in range(len(sig)))
    x_half, y_half = names[:half], names[half:]
    int_ix = [i for i in range(half) if sig[i] is Sort.INT]
    bool_ix = [i for i in range(half) if sig[i] is Sort.BOOL]

    unknowns: List[str] = []
    aux: List[str] = []
    sels: List[str] = []
    rc_parts, rd_parts, dc_parts, dd_parts = [], [], [], []

    def rank(i: int, k: int, side) -> Term:
        prefix = f"r!{pred}!{i}!{k}"
        t: Term = Var(f"{prefix}!0")
        for n, ix in enumerate(int_ix, start=1):
            t = _add(t, Mul(Var(f"{prefix}!{n}"), Var(side[ix], Sort.INT)))
        return t

    def disc(i: int, side) -> Formula:
        conj = []
        for n, ix in enumerate(bool_ix):
            conj.append(_bool_guard(f"d!{pred}!{i}!b{n}", side[ix]))
        for m in range(p["nc"]):
            prefix = f"d!{pred}!{i}!{m}"
            t: Term = Var(f"{prefix}!0")
            for n, ix in enumerate(int_ix, start=1):
                t = _add(t, Mul(Var(f"{prefix}!{n}"), Var(side[ix], Sort.INT)))
            conj.append(Atom(">=", t, IntConst(0)))
        return fand(conj)

    # register unknowns and bound constraints once
    for i in range(p["np"]):
        for k in range(p["nl"]):
            prefix = f"r!{pred}!{i}!{k}"
            unknowns.append(f"{prefix}!0")
            ks = []
            for n in range(1, len(int_ix) + 1):
                unknowns.append(f"{prefix}!{n}")
                ks.append(f"{prefix}!{n}")
            rc_parts.append(_sum_abs_le(ks, p["rc"], aux))
            rd_parts.append(_abs_le(f"{prefix}!0", p["rd"]))
        for n in range(len(bool_ix)):
            sels.append(f"d!{pred}!{i}!b{n}")
        for m in range(p["nc"]):
            prefix = f"d!{pred}!{i}!{m}"
            unknowns.append(f"{prefix}!0")
            ks = []
            for n in range(1, len(int_ix) + 1):
                unknowns.append(f"{prefix}!{n}")
                ks.append(f"{prefix}!{n}")
            dc_parts.append(_sum_abs_le(ks, p["dc"], aux))
            dd_parts.append(_abs_le(f"{prefix}!0", p["dd"]))

    def dec(i: int, j: int) -> Formula:
        options = []
        for k in range(p["nl"]):
            parts = [Atom(">=", rank(i, k, x_half), IntConst(0)),
                     Atom(">", rank(i, k, x_half), rank(j, k, y_half))]
            for l in range(k):
                ge = Atom(">=", rank(i, l, x_half), rank(j, l, y_half))
                if use_refined:
                    both_neg = And((Atom("<", rank(i, l, x_half), IntConst(0)),
                                    Atom("<", rank(j, l, y_half), IntConst(0))))
                    parts.append(Or((both_neg, ge)))
                else:
                    parts.append(ge)
            options.append(fand(parts))
        return forr(options)

    coverage = forr(disc(j, y_half) for j in range(p["np"]))
    main = []
    for i in range(p["np"]):
        conj = [disc(i, x_half)]
        for j in range(p["np"]):
            conj.append(Or((Not(disc(j, y_half)), dec(i, j))))
        main.append(fand(conj))
    skeleton_parts = [coverage, forr(main)]
    if not use_refined:
        nonneg = fand(Atom(">=", rank(i, k, x_half), IntConst(0))
                      for i in range(p["np"]) for k in range(p["nl"]))
        cover_x = forr(disc(i, x_half) for i in range(p["np"]))
        skeleton_parts = [nonneg, cover_x] + skeleton_parts
    skeleton = fand(skeleton_parts)
    bounds = [(f"tpl_{pred}_rc", fand(rc_parts)), (f"tpl_{pred}_rd", fand(rd_parts)),
              (f"tpl_{pred}_dc", fand(dc_parts)), (f"tpl_{pred}_dd", fand(dd_parts))]
    if sels:
        bounds.append((f"tpl_{pred}_sel", _sel_range(sels)))
    return TemplateInstance(pred, Kind.WF, names, skeleton,
                            unknowns + sels, aux, bounds)


# ---------------------------------------------------------------------------
# Functional predicates: guarded affine pieces, output = last argument
# ---------------------------------------------------------------------------

def instantiate_fn(pred: str, sig, p: Dict[str, int]) -> TemplateInstance:
    if len(sig) < 1:
        raise ValueError(f"FN predicate {pred} needs an output position")
    if sig[-1] is not Sort.INT:
        raise ValueError(f"FN predicate {pred}: only integer outputs are supported")
    names = tuple(f"arg!{i}" for i in range(len(sig)))
    out = names[-1]
    int_args = [names[i] for i in range(len(sig) - 1) if sig[i] is Sort.INT]
    bool_args = [names[i] for i in range(len(sig) - 1) if sig[i] is Sort.BOOL]

    unknowns: List[str] = []
    aux: List[str] = []
    sels: List[str] = []
    ec_parts, ed_parts, dc_parts, dd_parts = [], [], [], []

    exprs = []
    for i in range(p["nd"]):
        prefix = f"e!{pred}!{i}"
        exprs.append(_affine(prefix, int_args, unknowns))
        ks = [f"{prefix}!{k}" for k in range(1, len(int_args) + 1)]
        ec_parts.append(_sum_abs_le(ks, p["ec"], aux))
        ed_parts.append(_abs_le(f"{prefix}!0", p["ed"]))

    discs = []
    for i in range(p["nd"] - 1):
        conj = []
        for n, b in enumerate(bool_args):
            s = f"d!{pred}!{i}!b{n}"
            sels.append(s)
            conj.append(_bool_guard(s, b))
        for j in range(p["nc"]):
            prefix = f"d!{pred}!{i}!{j}"
            t = _affine(prefix, int_args, unknowns)
            conj.append(Atom(">=", t, IntConst(0)))
            ks = [f"{prefix}!{k}" for k in range(1, len(int_args) + 1)]
            dc_parts.append(_sum_abs_le(ks, p["dc"], aux))
            dd_parts.append(_abs_le(f"{prefix}!0", p["dd"]))
        discs.append(fand(conj))

    pieces = []
    for i in range(p["nd"]):
        conj = [fnot(discs[l]) for l in range(min(i, len(discs)))]
        if i < len(discs):
            conj.append(discs[i])
        conj.append(Atom("=", Var(out, Sort.INT), exprs[i]))
        pieces.append(fand(conj))
    skeleton = forr(pieces)
    bounds = [(f"tpl_{pred}_ec", fand(ec_parts)), (f"tpl_{pred}_ed", fand(ed_parts)),
              (f"tpl_{pred}_dc", fand(dc_parts)), (f"tpl_{pred}_dd", fand(dd_parts))]
    if sels:
        bounds.append((f"tpl_{pred}_sel", _sel_range(sels)))
    return TemplateInstance(pred, Kind.FN, names, skeleton,
                            unknowns + sels, aux, bounds)


def instantiate(pred: str, sig, kind: Kind, p: Dict[str, int],
                use_refined: bool = True) -> TemplateInstance:
    if kind is Kind.ORD:
        return instantiate_ord(pred, sig, p)
    if kind is Kind.WF:
        return instantiate_wf(pred, sig, p, use_refined)
    return instantiate_fn(pred, sig, p)


# ---------------------------------------------------------------------------
# Synthesis over ground examples
# ---------------------------------------------------------------------------

@dataclass
class UnsatCore:
    labels: tuple
    implicated: tuple  # predicate variables to grow
    from_unknown: bool = False


def subsumption_reduce(examples: Sequence[ExampleInstance]) -> list:
    """Drops ground clauses subsumed by another (same solution set).

    A clause whose literal set contains another clause's literal set is
    implied by it; removing it changes nothing about which candidates satisfy
    the example set, but keeps synthesis queries small once unit facts pile up.
    """
    lit_sets = []
    for e in examples:
        lit_sets.append((frozenset((a, True) for a in e.pos) |
                         frozenset((a, False) for a in e.neg), e))
    lit_sets.sort(key=lambda p: len(p[0]))
    kept: list = []
    kept_sets: list = []
    for lits, e in lit_sets:
        if any(s <= lits for s in kept_sets):
            continue
        kept.append(e)
        kept_sets.append(lits)
    return kept


def synthesize(examples: Sequence[ExampleInstance], kinding: Kinding,
               params: TemplateParams, session, use_refined: bool = True,
               timeout_ms: Optional[int] = None):
    """Returns a Candidate or an UnsatCore.

    Backend unknown is treated as unsat with the full core (grow everything
    touched), flagged via from_unknown.
    """
    instances = {name: instantiate(name, sig.sig, sig.kind,
                                   params.per_pred[name], use_refined)
                 for name, sig in kinding.items()}
    assertions = []
    label_preds: Dict[str, tuple] = {}
    used: set = set()
    examples = subsumption_reduce(
        [e for e in examples if not e.trivially_true])
    for i, e in enumerate(examples):
        lits = []
        for atom, positive in e.literals():
            inst = instances[atom.pred]
            f = inst.apply(atom.values)
            lits.append(f if positive else fnot(f))
            used.add(atom.pred)
        label = f"ex_{i}"
        assertions.append((label, forr(lits)))
        label_preds[label] = tuple(sorted(e.pred_names()))
    for name in sorted(used):
        for label, f in instances[name].bounds:
            if not isinstance(f, FTrue):
                assertions.append((label, f))
                label_preds[label] = (name,)

    res = session.check(assertions, need_model=True, need_core=True,
                        timeout_ms=timeout_ms)
    if res.status == "sat":
        cand: Candidate = {}
        for name, sig in kinding.items():
            cand[name] = extract_definition(instances[name], sig.sig, res.model or {})
        return cand
    if res.status == "unsat":
        labels = tuple(sorted(res.core or ())) or tuple(l for l, _ in assertions)
        implicated = sorted({p for l in labels for p in label_preds.get(l, ())})
        if not implicated:
            implicated = sorted(kinding)
        return UnsatCore(labels, tuple(implicated))
    labels = tuple(l for l, _ in assertions)
    return UnsatCore(labels, tuple(sorted(kinding)), from_unknown=True)


def extract_definition(inst: TemplateInstance, sig, model: dict) -> PredicateDefinition:
    theta = {u: IntConst(int(model.get(u, 0))) for u in inst.unknowns}
    body = fold_formula(subst_formula(inst.skeleton, theta))
    renames = {}
    params = []
    for i, (ph, sort) in enumerate(zip(inst.arg_names, sig), start=1):
        nm = f"x{i}"
        renames[ph] = Var(nm, sort)
        params.append((nm, sort))
    body = subst_formula(body, renames)
    return PredicateDefinition(tuple(params), body)


# ---------------------------------------------------------------------------
# Parameter updates
# ---------------------------------------------------------------------------

def update_params(params: TemplateParams, core: UnsatCore, kinding: Kinding,
                  threshold: int = 2) -> TemplateParams:
    """Grow one parameter per implicated predicate variable.

    A fixed per-kind rotation picks the parameter, except that a parameter
    lagging the same-role maximum across predicate variables by more than
    `threshold` is caught up first (fairness).
    """
    new = params.copy()
    for name in core.implicated:
        if name not in new.per_pred:
            continue
        kind = kinding[name].kind
        mine = new.per_pred[name]
        peers = [new.per_pred[n] for n, s in kinding.items() if s.kind is kind]
        lagging = []
        for key in mine:
            top = max(p[key] for p in peers)
            gap = top - mine[key]
            if gap > threshold:
                lagging.append((gap, ROTATION[kind].index(key), key))
        if lagging:
            lagging.sort(key=lambda t: (-t[0], t[1]))
            mine[lagging[0][2]] += 1
            continue
        order = ROTATION[kind]
        key = order[new.rotation.get(name, 0) % len(order)]
        mine[key] += 1
        new.rotation[name] = new.rotation.get(name, 0) + 1
    return new


# ---------------------------------------------------------------------------
# Shape checks for user-supplied / extracted WF and FN definitions
# ---------------------------------------------------------------------------

def _linear_split(t, xs: set, ys: set):
    """Linearizes a term into (x-coeffs, y-coeffs, const); None if not linear."""
    from .lia import linearize, Unknown as LiaUnknown
    try:
        coeffs, const = linearize(t)
    except LiaUnknown:
        return None
    cx = tuple(sorted((v, c) for v, c in coeffs.items() if v in xs and c))
    cy = tuple(sorted((v, c) for v, c in coeffs.items() if v in ys and c))
    if any(v not in xs and v not in ys for v, c in coeffs.items() if c):
        return None
    return cx, cy, const


def _vars_subset(f: Formula, allowed: set) -> bool:
    from .ir import formula_vars
    return set(formula_vars(f)) <= allowed


def _dec_ok(f: Formula, xs: set, ys: set, context_nonneg=frozenset()) -> bool:
    """A DEC block: some disjunct pairs (r(x) >= 0) with (r(x) > .(y))."""
    from .ir import Sub as IrSub
    disjuncts = list(f.args) if isinstance(f, Or) else [f]
    for d in disjuncts:
        conj = list(d.args) if isinstance(d, And) else [d]
        nonneg = set(context_nonneg)
        strict = set()
        for a in conj:
            if not isinstance(a, Atom):
                continue
            lin = _linear_split(IrSub(a.lhs, a.rhs), xs, ys)
            if lin is None:
                continue
            cx, cy, _ = lin
            if a.rel in (">=", ">") and cx and not cy:
                nonneg.add(cx)
            if a.rel in (">", ">=") and cx and cy:
                strict.add(cx)
        if nonneg & strict:
            return True
    return False


def check_wf_shape(defn: PredicateDefinition) -> Tuple[bool, str]:
    """Accepts bodies in the (possibly simplified) ranking-template shape.

    The body must split into optional y-only coverage conjuncts and a main
    disjunction whose disjuncts combine x-only region guards with decrease
    blocks (optionally guarded by y-only region tests) pairing a non-negative
    x-ranking with a strict decrease of the same ranking form.
    """
    n = len(defn.params)
    if n % 2 != 0:
        return False, "odd arity"
    xs = {name for name, _ in defn.params[: n // 2]}
    ys = {name for name, _ in defn.params[n // 2:]}
    body = defn.body
    if isinstance(body, FFalse):
        return True, "empty relation"
    parts = list(body.args) if isinstance(body, And) else [body]
    main = [p for p in parts if not _vars_subset(p, ys)]
    if not main:
        return False, "no x/y-relating conjunct"
    x_ctx = [p for p in main if _vars_subset(p, xs)]
    rest = [p for p in main if not _vars_subset(p, xs)]
    if len(rest) == 1 and isinstance(rest[0], Or):
        # structured form: per-region disjunction, possibly with hoisted
        # x-only context (region guards / nonnegativity) in front
        disjuncts = [fand(list(x_ctx) + [d]) for d in rest[0].args]
    else:
        disjuncts = [fand(main)]
    from .ir import Sub as IrSub
    for i, d in enumerate(disjuncts):
        conj = list(d.args) if isinstance(d, And) else [d]
        decs = []
        context = set()
        for c in conj:
            if _vars_subset(c, xs):
                # region guard / ranking-nonnegativity context on the x side
                if isinstance(c, Atom) and c.rel in (">=", ">"):
                    lin = _linear_split(IrSub(c.lhs, c.rhs), xs, ys)
                    if lin is not None and lin[0]:
                        context.add(lin[0])
                continue
            if isinstance(c, Or):
                guards = [a for a in c.args if _vars_subset(a, ys)]
                rest = [a for a in c.args if not _vars_subset(a, ys)]
                if guards and rest:
                    decs.append(fand(rest) if len(rest) > 1 else rest[0])
                    continue
            decs.append(c)
        if not decs:
            return False, f"disjunct {i + 1} has no decrease block"
        for dec in decs:
            if not _dec_ok(dec, xs, ys, context):
                return False, f"disjunct {i + 1}: no ranking pair (r(x) >= 0 " \
                              f"with r(x) > r'(y)) found"
    return True, "ranking-template shape"


def grid_wf_probe(defn: PredicateDefinition, radius: int = 3,
                  max_nodes: int = 4000) -> Tuple[bool, str]:
    """Refutation probe: search for a cycle of the relation on a small grid."""
    import itertools as it
    from .examples_unsat import _has_cycle
    from .ir import eval_formula
    n = len(defn.params)
    half = n // 2
    domains = []
    for _, sort in defn.params[:half]:
        domains.append((False, True) if sort is Sort.BOOL
                       else tuple(range(-radius, radius + 1)))
    nodes = list(it.product(*domains))
    if len(nodes) > max_nodes:
        return True, "grid too large; probe skipped"
    names = [name for name, _ in defn.params]
    edges = {u: set() for u in nodes}
    for u in nodes:
        for v in nodes:
            env = dict(zip(names, list(u) + list(v)))
            if eval_formula(defn.body, env):
                edges[u].add(v)
    if _has_cycle(edges):
        return False, f"cycle found on the [-{radius},{radius}] grid"
    return True, "no cycle on the probe grid"


def check_fn_shape(defn: PredicateDefinition) -> Tuple[bool, str]:
    """Accepts guarded-affine-piece bodies defining a total function.

    Each disjunct must contain exactly one equation pinning the output (last
    parameter) to an affine expression over the inputs; guards must not mention
    the output.  Guards must be exhaustive and pairwise exclusive (decided by
    the arithmetic core).
    """
    from . import lia
    from .ir import formula_vars
    if not defn.params:
        return False, "no output position"
    out = defn.params[-1][0]
    pieces = list(defn.body.args) if isinstance(defn.body, Or) else [defn.body]
    guards = []
    for i, piece in enumerate(pieces):
        conj = list(piece.args) if isinstance(piece, And) else [piece]
        eqs = [c for c in conj if isinstance(c, Atom) and c.rel == "=" and
               out in formula_vars(c)]
        rest = [c for c in conj if c not in eqs]
        if len(eqs) != 1:
            return False, f"piece {i + 1} must pin the output exactly once"
        eq = eqs[0]
        sides = [eq.lhs, eq.rhs]
        ok = any(isinstance(s, Var) and s.name == out and
                 out not in formula_vars(Atom("=", o, o))
                 for s, o in (sides, reversed(sides)))
        lhs_is_out = isinstance(eq.lhs, Var) and eq.lhs.name == out
        rhs_is_out = isinstance(eq.rhs, Var) and eq.rhs.name == out
        if not (lhs_is_out or rhs_is_out):
            return False, f"piece {i + 1}: output is not isolated"
        other = eq.rhs if lhs_is_out else eq.lhs
        from .ir import term_vars
        if out in term_vars(other):
            return False, f"piece {i + 1}: output occurs on both sides"
        for g in rest:
            if out in formula_vars(g):
                return False, f"piece {i + 1}: guard mentions the output"
        guards.append(fand(rest))
    if len(guards) == 1:
        if isinstance(guards[0], FTrue):
            return True, "single total piece"
        return False, "single piece must be unguarded"
    total = lia.is_valid(forr(guards))
    if total is not True:
        return False, "guards are not exhaustive"
    for i in range(len(guards)):
        for j in range(i + 1, len(guards)):
            r = lia.solve_formulas([("g", fand([guards[i], guards[j]]))],
                                   need_model=False)
            if r.status != "unsat":
                return False, f"pieces {i + 1} and {j + 1} overlap"
    return True, "guarded affine pieces"
