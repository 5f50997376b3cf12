"""Decision procedure for quantifier-free linear integer arithmetic + Booleans.

Lazy SMT: formulas are Tseitin-encoded over the CDCL core in sat.py; total
Boolean assignments are checked by a general simplex over exact rationals
(bound form, Bland's rule) with branch & bound for integrality.  Infeasible
conjunctions produce small explanations (the bound-asserting literals of the
failing row), which become blocking clauses.

Everything is exact; budgets turn pathological searches into "unknown".
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from . import sat
from .ir import (
    Add, And, Atom, BoolConst, BoolVar, FFalse, FTrue, Formula, IntConst,
    Neg, Not, Or, PredApp, Scale, Sort, Sub, Term, Var, term_sort,
)


class Unknown(Exception):
    pass


# ---------------------------------------------------------------------------
# Linearization
# ---------------------------------------------------------------------------

def linearize(t: Term, sign: int = 1, coeffs: Optional[dict] = None,
              const: int = 0) -> Tuple[dict, int]:
    if coeffs is None:
        coeffs = {}
    if isinstance(t, Var):
        coeffs[t.name] = coeffs.get(t.name, 0) + sign
        return coeffs, const
    if isinstance(t, IntConst):
        return coeffs, const + sign * t.value
    if isinstance(t, Neg):
        return linearize(t.arg, -sign, coeffs, const)
    if isinstance(t, Add):
        coeffs, const = linearize(t.left, sign, coeffs, const)
        return linearize(t.right, sign, coeffs, const)
    if isinstance(t, Sub):
        coeffs, const = linearize(t.left, sign, coeffs, const)
        return linearize(t.right, -sign, coeffs, const)
    if isinstance(t, Scale):
        sub, c0 = linearize(t.arg, 1, {}, 0)
        for v, c in sub.items():
            coeffs[v] = coeffs.get(v, 0) + sign * t.coeff * c
        return coeffs, const + sign * t.coeff * c0
    raise Unknown(f"nonlinear or non-integer term: {t}")


@dataclass(frozen=True)
class LinAtom:
    """sum coeffs . vars <= bound  over integer variables."""

    coeffs: tuple  # tuple[(name, int), ...] sorted, nonzero
    bound: int


def make_le(coeffs: dict, bound: int) -> Optional[LinAtom]:
    items = tuple(sorted((v, c) for v, c in coeffs.items() if c != 0))
    if not items:
        return None if bound >= 0 else LinAtom((), -1)  # None means trivially true
    g = math.gcd(*(abs(c) for _, c in items))
    if g > 1:
        items = tuple((v, c // g) for v, c in items)
        bound = math.floor(bound / g)
    return LinAtom(items, bound)


# ---------------------------------------------------------------------------
# Simplex with bound explanations
# ---------------------------------------------------------------------------

def _norm(x):
    """Collapse integral Fractions back to int (keeps arithmetic on the fast path)."""
    if isinstance(x, Fraction):
        if x.denominator == 1:
            return x.numerator
        return x
    return x


def _div(a, b):
    if isinstance(a, int) and isinstance(b, int):
        q, r = divmod(a, b)
        if r == 0:
            return q
        return Fraction(a, b)
    return _norm(Fraction(a) / b)


class Simplex:
    """General simplex in bound form; numbers are int with Fraction fallback."""

    def __init__(self):
        self.rows: Dict[int, Dict[int, object]] = {}
        self.cols: Dict[int, set] = {}
        self.val: List[object] = []
        self.lo: List[Optional[object]] = []
        self.hi: List[Optional[object]] = []
        self.lo_tag: List[object] = []
        self.hi_tag: List[object] = []
        self.nvars = 0
        self.undo_log: list = []
        self.suspect: set = set()  # basics whose bounds/values changed

    def new_var(self) -> int:
        x = self.nvars
        self.nvars += 1
        self.val.append(0)
        self.lo.append(None)
        self.hi.append(None)
        self.lo_tag.append(None)
        self.hi_tag.append(None)
        return x

    def define(self, combo: Dict[int, int]) -> int:
        """Introduce a variable constrained to equal the linear combination."""
        s = self.new_var()
        row = {x: c for x, c in combo.items() if c}
        self.rows[s] = row
        for x in row:
            self.cols.setdefault(x, set()).add(s)
        self.val[s] = _norm(sum(c * self.val[x] for x, c in row.items()))
        return s

    def reset_bounds(self):
        for x in range(self.nvars):
            self.lo[x] = self.hi[x] = None
            self.lo_tag[x] = self.hi_tag[x] = None
        self.undo_log = []

    def save_bounds(self):
        return (list(self.lo), list(self.hi), list(self.lo_tag), list(self.hi_tag))

    def restore_bounds(self, snap):
        self.lo, self.hi, self.lo_tag, self.hi_tag = \
            list(snap[0]), list(snap[1]), list(snap[2]), list(snap[3])

    # -- undo log for trail-synchronized assertion --------------------------
    def mark(self) -> int:
        return len(self.undo_log)

    def pop_to(self, mark: int):
        while len(self.undo_log) > mark:
            x, is_upper, old, old_tag = self.undo_log.pop()
            if is_upper:
                self.hi[x] = old
                self.hi_tag[x] = old_tag
            else:
                self.lo[x] = old
                self.lo_tag[x] = old_tag

    # -- assertion ---------------------------------------------------------
    def assert_upper(self, x: int, c, tag, log: bool = False) -> Optional[list]:
        if self.hi[x] is not None and c >= self.hi[x]:
            return None
        if self.lo[x] is not None and c < self.lo[x]:
            return [self.lo_tag[x], tag]
        if log:
            self.undo_log.append((x, True, self.hi[x], self.hi_tag[x]))
        self.hi[x] = c
        self.hi_tag[x] = tag
        if x not in self.rows:
            if self.val[x] > c:
                self._update(x, c)
        else:
            self.suspect.add(x)
        return None

    def assert_lower(self, x: int, c, tag, log: bool = False) -> Optional[list]:
        if self.lo[x] is not None and c <= self.lo[x]:
            return None
        if self.hi[x] is not None and c > self.hi[x]:
            return [self.hi_tag[x], tag]
        if log:
            self.undo_log.append((x, False, self.lo[x], self.lo_tag[x]))
        self.lo[x] = c
        self.lo_tag[x] = tag
        if x not in self.rows:
            if self.val[x] < c:
                self._update(x, c)
        else:
            self.suspect.add(x)
        return None

    def _update(self, x: int, v):
        delta = v - self.val[x]
        self.val[x] = v
        val = self.val
        rows = self.rows
        suspect = self.suspect
        for b in self.cols.get(x, ()):  # basics whose row mentions x
            val[b] = _norm(val[b] + rows[b][x] * delta)
            suspect.add(b)

    def _pivot(self, b: int, n: int):
        row = self.rows.pop(b)
        a = row.pop(n)
        for x in row:
            self.cols[x].discard(b)
        self.cols[n].discard(b)
        # n = (b - sum row) / a
        new_row = {b: _div(1, a)}
        for x, c in row.items():
            new_row[x] = _div(-c, a)
        self.rows[n] = new_row
        for x in new_row:
            self.cols.setdefault(x, set()).add(n)
        # substitute n in every other row
        for k in list(self.cols.get(n, ())):
            if k == n:
                continue
            rk = self.rows[k]
            cn = rk.pop(n)
            self.cols[n].discard(k)
            for x, c in new_row.items():
                prev = rk.get(x)
                nv = _norm((prev if prev is not None else 0) + cn * c)
                if nv == 0:
                    if prev is not None:
                        del rk[x]
                        self.cols[x].discard(k)
                else:
                    rk[x] = nv
                    self.cols.setdefault(x, set()).add(k)

    def _pivot_and_update(self, b: int, n: int, v):
        a = self.rows[b][n]
        theta = _div(v - self.val[b], a) if isinstance(a, int) else \
            _norm((v - self.val[b]) / a)
        self.val[b] = v
        self.val[n] = _norm(self.val[n] + theta)
        for k in self.cols.get(n, ()):
            if k != b:
                self.val[k] = _norm(self.val[k] + self.rows[k][n] * theta)
                self.suspect.add(k)
        self.suspect.add(n)
        self._pivot(b, n)

    def check(self, max_pivots: int = 50000) -> Optional[list]:
        """None when feasible; otherwise an explanation (list of tags).

        Incremental: only rows touched since the last check are examined."""
        pivots = 0
        while True:
            cand = None
            stale = []
            for b in self.suspect:
                if b not in self.rows:
                    stale.append(b)
                    continue
                if self.lo[b] is not None and self.val[b] < self.lo[b]:
                    if cand is None or b < cand[0]:
                        cand = (b, True)
                elif self.hi[b] is not None and self.val[b] > self.hi[b]:
                    if cand is None or b < cand[0]:
                        cand = (b, False)
                else:
                    stale.append(b)
            for b in stale:
                self.suspect.discard(b)
            if cand is None:
                self.suspect.clear()
                return None
            pivots += 1
            if pivots > max_pivots:
                raise Unknown("simplex pivot budget exhausted")
            b, need_raise = cand
            row = self.rows[b]
            chosen = None
            for n in sorted(row):
                a = row[n]
                if need_raise:
                    ok = (a > 0 and (self.hi[n] is None or self.val[n] < self.hi[n])) or \
                         (a < 0 and (self.lo[n] is None or self.val[n] > self.lo[n]))
                else:
                    ok = (a < 0 and (self.hi[n] is None or self.val[n] < self.hi[n])) or \
                         (a > 0 and (self.lo[n] is None or self.val[n] > self.lo[n]))
                if ok:
                    chosen = n
                    break
            if chosen is None:
                expl = [self.lo_tag[b] if need_raise else self.hi_tag[b]]
                for n, a in row.items():
                    if need_raise:
                        expl.append(self.hi_tag[n] if a > 0 else self.lo_tag[n])
                    else:
                        expl.append(self.hi_tag[n] if a < 0 else self.lo_tag[n])
                return [t for t in expl if t is not None]
            self._pivot_and_update(b, chosen, self.lo[b] if need_raise else self.hi[b])

    # -- integrality ---------------------------------------------------------
    def branch_and_bound(self, int_vars, node_budget: list,
                         depth: int = 0, max_depth: int = 80) -> Optional[list]:
        """None when an all-integer model exists; else an explanation."""
        expl = self.check()
        if expl is not None:
            return expl
        frac_var = None
        for x in int_vars:
            if isinstance(self.val[x], Fraction):
                frac_var = x
                break
        if frac_var is None:
            return None
        node_budget[0] -= 1
        if node_budget[0] <= 0 or depth >= max_depth:
            raise Unknown("branch-and-bound budget exhausted")
        v = self.val[frac_var]
        floor_v = math.floor(v)
        results = []
        for is_upper, bound in ((True, floor_v), (False, floor_v + 1)):
            tag = ("branch", frac_var, is_upper, bound)
            snap = self.save_bounds()
            conflict = (self.assert_upper(frac_var, bound, tag) if is_upper
                        else self.assert_lower(frac_var, bound, tag))
            sub = conflict if conflict is not None else \
                self.branch_and_bound(int_vars, node_budget, depth + 1, max_depth)
            if sub is None:
                return None
            self.restore_bounds(snap)
            results.append([t for t in sub if t != tag])
        seen = []
        for part in results:
            for t in part:
                if t not in seen:
                    seen.append(t)
        return seen


# ---------------------------------------------------------------------------
# Formula layer
# ---------------------------------------------------------------------------

@dataclass
class LiaResult:
    status: str  # sat | unsat | unknown
    model: Optional[dict] = None       # name -> int | bool
    core: Optional[list] = None        # assertion labels
    reason: str = ""


class LiaProblem:
    def __init__(self):
        self.nprop = 0
        self.clauses: List[List[int]] = []
        self.bool_vars: Dict[str, int] = {}
        self.atom_of_var: Dict[int, LinAtom] = {}
        self.atom_cache: Dict[LinAtom, int] = {}
        self.enc_cache: Dict[Formula, int] = {}
        self.const_true: Optional[int] = None
        self.assertion_lits: List[Tuple[str, int]] = []
        self.int_names: List[str] = []

    def _new(self) -> int:
        self.nprop += 1
        return self.nprop

    def _lit_true(self) -> int:
        if self.const_true is None:
            self.const_true = self._new()
            self.clauses.append([self.const_true])
        return self.const_true

    def _bool_var(self, name: str) -> int:
        if name not in self.bool_vars:
            self.bool_vars[name] = self._new()
        return self.bool_vars[name]

    def _atom_lit(self, a: Optional[LinAtom]) -> int:
        if a is None:
            return self._lit_true()
        if not a.coeffs:  # trivially false (bound < 0 on empty sum)
            return -self._lit_true()
        if a not in self.atom_cache:
            v = self._new()
            self.atom_cache[a] = v
            self.atom_of_var[v] = a
            for name, _ in a.coeffs:
                if name not in self.int_names:
                    self.int_names.append(name)
        return self.atom_cache[a]

    def _encode_atom(self, f: Atom) -> int:
        ls, rs = term_sort(f.lhs), term_sort(f.rhs)
        if ls is Sort.BOOL or rs is Sort.BOOL:
            a = _bool_term(f.lhs)
            b = _bool_term(f.rhs)
            iff = Or((And((a, b)), And((fnot_raw(a), fnot_raw(b)))))
            lit = self.encode(iff)
            return lit if f.rel == "=" else -lit
        coeffs, const = linearize(Sub(f.lhs, f.rhs))
        if f.rel == "<=":
            return self._atom_lit(make_le(coeffs, -const))
        if f.rel == "<":
            return self._atom_lit(make_le(coeffs, -const - 1))
        if f.rel == ">=":
            return self._atom_lit(make_le(_neg(coeffs), const))
        if f.rel == ">":
            return self._atom_lit(make_le(_neg(coeffs), const - 1))
        if f.rel == "=":
            le = self._atom_lit(make_le(dict(coeffs), -const))
            ge = self._atom_lit(make_le(_neg(coeffs), const))
            return self.encode_gate_and((le, ge))
        if f.rel == "<>":
            le = self._atom_lit(make_le(dict(coeffs), -const))
            ge = self._atom_lit(make_le(_neg(coeffs), const))
            return -self.encode_gate_and((le, ge))
        raise Unknown(f"relation {f.rel}")

    def encode_gate_and(self, lits: tuple) -> int:
        v = self._new()
        for l in lits:
            self.clauses.append([-v, l])
        self.clauses.append([v] + [-l for l in lits])
        return v

    def encode_gate_or(self, lits: tuple) -> int:
        v = self._new()
        for l in lits:
            self.clauses.append([v, -l])
        self.clauses.append([-v] + list(lits))
        return v

    def encode(self, f: Formula) -> int:
        # identity-keyed cache: shared subtrees encode once without paying
        # deep structural hashing on every lookup
        cached = self.enc_cache.get(id(f))
        if cached is not None:
            return cached[0]
        if isinstance(f, FTrue):
            lit = self._lit_true()
        elif isinstance(f, FFalse):
            lit = -self._lit_true()
        elif isinstance(f, BoolVar):
            lit = self._bool_var(f.name)
        elif isinstance(f, Var) and f.sort is Sort.BOOL:
            lit = self._bool_var(f.name)
        elif isinstance(f, Atom):
            lit = self._encode_atom(f)
        elif isinstance(f, Not):
            lit = -self.encode(f.arg)
        elif isinstance(f, And):
            lit = self.encode_gate_and(tuple(self.encode(a) for a in f.args))
        elif isinstance(f, Or):
            lit = self.encode_gate_or(tuple(self.encode(a) for a in f.args))
        elif isinstance(f, PredApp):
            raise Unknown(f"predicate application {f.pred} reached the arithmetic solver")
        else:
            raise Unknown(f"cannot encode {f!r}")
        self.enc_cache[id(f)] = (lit, f)
        return lit

    def add_assertion(self, label: str, f: Formula):
        self.assertion_lits.append((label, self.encode(f)))


def _neg(coeffs: dict) -> dict:
    return {v: -c for v, c in coeffs.items()}


def _bool_term(t) -> Formula:
    if isinstance(t, Var):
        return BoolVar(t.name)
    if isinstance(t, BoolConst):
        return FTrue() if t.value else FFalse()
    if isinstance(t, (BoolVar, FTrue, FFalse)):
        return t
    raise Unknown(f"expected a Boolean operand, got {t}")


def fnot_raw(f: Formula) -> Formula:
    return f.arg if isinstance(f, Not) else Not(f)


def _mod_hat(a: int, m: int) -> int:
    r = a % m
    return r - m if r > m // 2 else r


class _IntConjunction:
    """Exact integer feasibility of a conjunction of linear constraints.

    Implied equalities are eliminated over the integers first (unit
    substitution plus the modulus trick for larger minimum coefficients), which
    catches lattice-emptiness that rational branch & bound cannot terminate on;
    the residual inequalities go to the simplex with bounded branch & bound.
    Every derived fact carries the set of asserting tags for explanations.
    """

    def __init__(self, bb_nodes: int):
        self.lows: Dict[tuple, Tuple[int, object]] = {}
        self.highs: Dict[tuple, Tuple[int, object]] = {}
        self.conflict: Optional[list] = None
        self.bb_nodes = bb_nodes
        self.model: Dict[str, int] = {}

    def add(self, coeffs: tuple, bound: int, tag) -> None:
        """Assert sum coeffs <= bound (coeffs nonempty, gcd-normalized)."""
        if self.conflict is not None:
            return
        neg = tuple((v, -c) for v, c in coeffs)
        if neg < coeffs:
            key, is_high = neg, False
            val = -bound  # sum(key) >= -bound
        else:
            key, is_high = coeffs, True
            val = bound
        side = self.highs if is_high else self.lows
        other = self.lows if is_high else self.highs
        prev = side.get(key)
        better = prev is None or (val < prev[0] if is_high else val > prev[0])
        if better:
            side[key] = (val, tag)
        opp = other.get(key)
        if opp is not None:
            lo, hi = (opp[0], side[key][0]) if is_high else (side[key][0], opp[0])
            if lo > hi:
                self.conflict = [opp[1], side[key][1]]

    def solve(self) -> Optional[list]:
        """None when an integer model exists (stored); else explanation tags."""
        if self.conflict is not None:
            return self.conflict
        equalities = []   # (dict coeffs, rhs, tagset)
        inequalities = []  # (dict coeffs, bound, tagset)  meaning sum <= bound
        for key, (hi, htag) in self.highs.items():
            lo = self.lows.get(key)
            if lo is not None and lo[0] == hi:
                equalities.append((dict(key), hi, frozenset((htag, lo[1]))))
                continue
            inequalities.append((dict(key), hi, frozenset((htag,))))
        for key, (lo, ltag) in self.lows.items():
            hi = self.highs.get(key)
            if hi is not None and hi[0] == lo:
                continue  # handled as equality
            inequalities.append(({v: -c for v, c in key}, -lo, frozenset((ltag,))))

        subs: List[Tuple[str, dict, int, int]] = []  # x = (expr + c)/a with a=+-1
        fresh_n = [0]

        def substitute(rows, name, expr, const, denom_sign):
            # x = denom_sign * (const + expr)
            out = []
            for coeffs, rhs, tags in rows:
                a = coeffs.pop(name, 0)
                if a == 0:
                    out.append((coeffs, rhs, tags))
                    continue
                k = a * denom_sign
                for v, c in expr.items():
                    coeffs[v] = coeffs.get(v, 0) + k * c
                    if coeffs[v] == 0:
                        del coeffs[v]
                out.append((coeffs, rhs - k * const, tags))
            return out

        steps = 0
        while equalities:
            steps += 1
            if steps > 400:
                raise Unknown("equality elimination budget exhausted")
            coeffs, rhs, tags = equalities.pop()
            coeffs = {v: c for v, c in coeffs.items() if c != 0}
            if not coeffs:
                if rhs != 0:
                    return list(tags)
                continue
            g = math.gcd(*(abs(c) for c in coeffs.values()))
            if rhs % g != 0:
                return list(tags)
            if g > 1:
                coeffs = {v: c // g for v, c in coeffs.items()}
                rhs //= g
            unit = next((v for v, c in coeffs.items() if abs(c) == 1), None)
            if unit is not None:
                a = coeffs.pop(unit)
                # unit*a + expr = rhs  =>  unit = a*(rhs - expr)
                expr = {v: -c for v, c in coeffs.items()}
                subs.append((unit, expr, rhs, a))
                tag_rows = lambda rows: [(d, b, t | tags) if unit in d else (d, b, t)
                                         for d, b, t in rows]
                equalities = substitute(tag_rows(equalities), unit, expr, rhs, a)
                inequalities = substitute(tag_rows(inequalities), unit, expr, rhs, a)
                continue
            # modulus trick: introduce sigma so the minimum coefficient drops to 1
            k, ak = min(coeffs.items(), key=lambda it: abs(it[1]))
            m = abs(ak) + 1
            fresh_n[0] += 1
            sigma = f"sigma!{fresh_n[0]}"
            new_coeffs = {v: _mod_hat(c, m) for v, c in coeffs.items()}
            new_coeffs = {v: c for v, c in new_coeffs.items() if c != 0}
            new_coeffs[sigma] = -m
            equalities.append((dict(coeffs), rhs, tags))
            equalities.append((new_coeffs, _mod_hat(rhs, m), tags))

        # residual: pure inequalities
        sx = Simplex()
        var_ix: Dict[str, int] = {}

        def ix(name):
            if name not in var_ix:
                var_ix[name] = sx.new_var()
            return var_ix[name]

        conflict = None
        for coeffs, rhs, tags in inequalities:
            coeffs = {v: c for v, c in coeffs.items() if c != 0}
            if not coeffs:
                if rhs < 0:
                    return list(tags)
                continue
            g = math.gcd(*(abs(c) for c in coeffs.values()))
            if g > 1:
                coeffs = {v: c // g for v, c in coeffs.items()}
                rhs = math.floor(rhs / g)
            if len(coeffs) == 1:
                (v, c), = coeffs.items()
                if c == 1:
                    conflict = sx.assert_upper(ix(v), rhs, tags)
                else:  # c == -1 after gcd normalization
                    conflict = sx.assert_lower(ix(v), -rhs, tags)
            else:
                s = sx.define({ix(v): c for v, c in coeffs.items()})
                conflict = sx.assert_upper(s, rhs, tags)
            if conflict is not None:
                return [t for ts in conflict for t in ts]
        expl = sx.branch_and_bound(list(var_ix.values()), [self.bb_nodes])
        if expl is not None:
            out = []
            for ts in expl:
                if isinstance(ts, frozenset):
                    out.extend(ts)
            return out
        model = {name: int(sx.val[i]) for name, i in var_ix.items()}
        for name, expr, const, denom in reversed(subs):
            v = const + sum(c * model.get(x, 0) for x, c in expr.items())
            model[name] = denom * v
        self.model = {n: v for n, v in model.items() if not n.startswith("sigma!")}
        return None


class _TheoryChecker:
    """Trail-synchronized arithmetic theory for the CDCL core.

    Atom bounds are asserted into one persistent simplex as literals are
    assigned (bound clashes conflict immediately); the tableau is only pivoted
    on demand.  Rational feasibility is checked at decision levels with a
    budget, full integer feasibility (shallow branch & bound, falling back to
    the exact Pugh path) at total assignments.
    """

    FAST_BB_NODES = 300
    FAST_BB_DEPTH = 32

    def __init__(self, problem: LiaProblem, bb_nodes: int):
        self.problem = problem
        self.bb_nodes = bb_nodes
        self.model_vals: Dict[str, int] = {}
        self.sx = Simplex()
        self.var_ix = {name: self.sx.new_var() for name in problem.int_names}
        self.slacks: Dict[tuple, int] = {}
        self.marks: List[int] = []
        self.dirty = False
        for a in problem.atom_of_var.values():
            if len(a.coeffs) == 1 and abs(a.coeffs[0][1]) == 1:
                continue
            if a.coeffs not in self.slacks:
                combo = {self.var_ix[n]: c for n, c in a.coeffs}
                self.slacks[a.coeffs] = self.sx.define(combo)

    def _assert_fast(self, atom: LinAtom, truth: bool, tag, log: bool):
        sx = self.sx
        if len(atom.coeffs) == 1 and abs(atom.coeffs[0][1]) == 1:
            name, c = atom.coeffs[0]
            x = self.var_ix[name]
            if c == 1:
                return (sx.assert_upper(x, atom.bound, tag, log) if truth
                        else sx.assert_lower(x, atom.bound + 1, tag, log))
            return (sx.assert_lower(x, -atom.bound, tag, log) if truth
                    else sx.assert_upper(x, -atom.bound - 1, tag, log))
        s = self.slacks[atom.coeffs]
        if truth:
            return sx.assert_upper(s, atom.bound, tag, log)
        return sx.assert_lower(s, atom.bound + 1, tag, log)

    # -- DPLL(T) hooks -------------------------------------------------------
    def on_assign(self, lit: int) -> Optional[list]:
        atom = self.problem.atom_of_var.get(abs(lit))
        if atom is None:
            return None
        conflict = self._assert_fast(atom, lit > 0, lit, log=True)
        if conflict is not None:
            return [-t for t in conflict]
        self.dirty = True
        return None

    def on_new_level(self):
        self.marks.append(self.sx.mark())

    def on_backjump(self, blevel: int):
        if blevel < len(self.marks):
            self.sx.pop_to(self.marks[blevel])
            del self.marks[blevel:]

    def on_decision_check(self) -> Optional[list]:
        """Rational feasibility between decisions (cheap when nothing changed)."""
        if not self.dirty:
            return None
        self.dirty = False
        expl = self.sx.check()
        if expl is None:
            return None
        return [-t for t in expl]

    def on_final(self, model: dict) -> Optional[list]:
        sx = self.sx
        snap = sx.save_bounds()
        try:
            expl = sx.branch_and_bound(list(self.var_ix.values()),
                                       [self.FAST_BB_NODES],
                                       max_depth=self.FAST_BB_DEPTH)
        except Unknown:
            sx.restore_bounds(snap)
            return self._exact(model)
        if expl is None:
            self._slacken_toward_zero()
            self.model_vals = {name: int(sx.val[ix])
                               for name, ix in self.var_ix.items()}
            sx.restore_bounds(snap)
            return None
        sx.restore_bounds(snap)
        return [-t for t in expl if not isinstance(t, tuple)]

    def _slacken_toward_zero(self):
        """Pull nonbasic variables toward 0 while staying feasible and integral.

        Zero-leaning models matter downstream: sparse template coefficients
        generalize far better than arbitrary vertex values.
        """
        sx = self.sx
        for x in self.var_ix.values():
            if x in sx.rows or sx.val[x] == 0:
                continue
            target = 0
            if sx.lo[x] is not None and sx.lo[x] > 0:
                target = math.ceil(sx.lo[x])
            elif sx.hi[x] is not None and sx.hi[x] < 0:
                target = math.floor(sx.hi[x])
            if target == sx.val[x]:
                continue
            old = sx.val[x]
            sx._update(x, target)
            ok = True
            for b in sx.cols.get(x, ()):
                vb = sx.val[b]
                if isinstance(vb, Fraction) or \
                        (sx.lo[b] is not None and vb < sx.lo[b]) or \
                        (sx.hi[b] is not None and vb > sx.hi[b]):
                    ok = False
                    break
            if not ok:
                sx._update(x, old)

    def _exact(self, model: dict) -> Optional[list]:
        conj = _IntConjunction(self.bb_nodes)
        for v, atom in self.problem.atom_of_var.items():
            truth = model.get(v)
            if truth is None:
                continue
            lit = v if truth else -v
            if truth:
                conj.add(atom.coeffs, atom.bound, lit)
            else:
                conj.add(tuple((n, -c) for n, c in atom.coeffs),
                         -atom.bound - 1, lit)
            if conj.conflict is not None:
                return [-t for t in conj.conflict]
        expl = conj.solve()
        if expl is None:
            self.model_vals = dict(conj.model)
            for name in self.problem.int_names:
                self.model_vals.setdefault(name, 0)
            return None
        return sorted({-t for t in expl})


def solve_formulas(assertions, need_model: bool = True, need_core: bool = False,
                   max_conflicts: int = 400000, bb_nodes: int = 20000,
                   core_minimize_limit: int = 120) -> LiaResult:
    """Decide the conjunction of labeled formulas.

    assertions: iterable of (label, Formula); formulas must be predicate-free.
    """
    problem = LiaProblem()
    try:
        for label, f in assertions:
            problem.add_assertion(label, f)
    except Unknown as e:
        return LiaResult("unknown", reason=str(e))

    def run(active_labels) -> Tuple[str, Optional[dict], Optional[_TheoryChecker]]:
        solver = sat.Solver(problem.nprop)
        ok = True
        for c in problem.clauses:
            ok = solver.add_clause(list(c)) and ok
        active = set(active_labels)
        for label, lit in problem.assertion_lits:
            if label in active:
                ok = solver.add_clause([lit]) and ok
        if not ok:
            return "unsat", None, None
        # bias decisions toward the all-zero corner: pick each atom's phase as
        # its truth value at 0, so models keep unconstrained coefficients small
        for v, atom in problem.atom_of_var.items():
            solver.phase[v] = 0 <= atom.bound
        checker = _TheoryChecker(problem, bb_nodes)
        try:
            model = solver.solve(theory=checker if problem.atom_of_var else None,
                                 max_conflicts=max_conflicts)
        except (sat.BudgetExceeded, Unknown) as e:
            raise Unknown(str(e))
        if model is None:
            return "unsat", None, None
        return "sat", model, checker

    labels = [l for l, _ in problem.assertion_lits]
    try:
        status, model, checker = run(labels)
    except Unknown as e:
        return LiaResult("unknown", reason=str(e))
    if status == "sat":
        out = None
        if need_model:
            out = dict(checker.model_vals) if checker else {}
            for name, v in problem.bool_vars.items():
                out[name] = bool(model[v])
            for name in problem.int_names:
                out.setdefault(name, 0)
        return LiaResult("sat", model=out)

    core = list(labels)
    if need_core and len(set(labels)) <= core_minimize_limit:
        kept = list(dict.fromkeys(labels))
        i = 0
        while i < len(kept):
            trial = kept[:i] + kept[i + 1:]
            try:
                st, _, _ = run(trial)
            except Unknown:
                st = "unknown"
            if st == "unsat":
                kept = trial
            else:
                i += 1
        core = kept
    return LiaResult("unsat", core=list(dict.fromkeys(core)))


def is_valid(f: Formula, **kw) -> Optional[bool]:
    """True/False when decided, None when unknown."""
    res = solve_formulas([("q", fnot_raw(f))], need_model=False, **kw)
    if res.status == "unsat":
        return True
    if res.status == "sat":
        return False
    return None


def equivalent(f: Formula, g: Formula, **kw) -> Optional[bool]:
    same = Or((And((f, g)), And((fnot_raw(f), fnot_raw(g)))))
    return is_valid(same, **kw)
