"""A small CDCL SAT core.

Clause sets here are tiny (tens to hundreds of clauses), so the solver favors
clarity: two-watched-literal propagation, first-UIP learning, activity-driven
decisions with phase saving.  A theory callback can veto total assignments by
returning a conflict clause (all of whose literals are currently false), which
is how the arithmetic backend drives lazy SMT.

Literals are nonzero ints: +v / -v for variable v in 1..nvars.
"""

from __future__ import annotations

import heapq
from typing import Callable, List, Optional


class BudgetExceeded(Exception):
    pass


class Solver:
    def __init__(self, nvars: int):
        self.nvars = nvars
        self.clauses: List[List[int]] = []
        self.watches = {}  # lit -> list of clause indices
        self.assign = {}   # var -> bool
        self.reason = {}   # var -> clause index (or None for decisions)
        self.level = {}    # var -> decision level
        self.trail: List[int] = []
        self.trail_lim: List[int] = []
        self.activity = [0.0] * (nvars + 1)
        self.phase = [False] * (nvars + 1)
        self.var_inc = 1.0
        self.ok = True
        self.qhead = 0
        # lazy max-activity heap of candidate decision variables
        self.order = [(0.0, v) for v in range(1, nvars + 1)]
        heapq.heapify(self.order)

    # -- clause management --------------------------------------------------
    def add_clause(self, lits: List[int]) -> bool:
        lits = sorted(set(lits), key=abs)
        if any(-l in lits for l in lits):
            return True  # tautology
        if not lits:
            self.ok = False
            return False
        if len(lits) == 1:
            return self._assert_unit(lits[0])
        idx = len(self.clauses)
        self.clauses.append(lits)
        for l in lits[:2]:
            self.watches.setdefault(l, []).append(idx)
        return True

    def _assert_unit(self, lit: int) -> bool:
        v = self.assign.get(abs(lit))
        if v is None:
            self._enqueue(lit, None)
            return True
        if v != (lit > 0):
            self.ok = False
            return False
        return True

    # -- assignment ----------------------------------------------------------
    def _enqueue(self, lit: int, reason_idx):
        var = abs(lit)
        self.assign[var] = lit > 0
        self.reason[var] = reason_idx
        self.level[var] = len(self.trail_lim)
        self.trail.append(lit)

    def _value(self, lit: int) -> Optional[bool]:
        v = self.assign.get(abs(lit))
        if v is None:
            return None
        return v if lit > 0 else not v

    def _propagate(self, theory=None):
        """Returns None, a conflicting clause index, or a theory conflict list."""
        while self.qhead < len(self.trail):
            lit = self.trail[self.qhead]
            self.qhead += 1
            if theory is not None:
                veto = theory.on_assign(lit)
                if veto is not None:
                    return veto
            falsified = -lit
            watchers = self.watches.get(falsified, [])
            i = 0
            while i < len(watchers):
                ci = watchers[i]
                cl = self.clauses[ci]
                # ensure falsified is at position 1
                if cl[0] == falsified:
                    cl[0], cl[1] = cl[1], cl[0]
                if self._value(cl[0]) is True:
                    i += 1
                    continue
                moved = False
                for k in range(2, len(cl)):
                    if self._value(cl[k]) is not False:
                        cl[1], cl[k] = cl[k], cl[1]
                        self.watches.setdefault(cl[1], []).append(ci)
                        watchers[i] = watchers[-1]
                        watchers.pop()
                        moved = True
                        break
                if moved:
                    continue
                if self._value(cl[0]) is False:
                    return ci
                self._enqueue(cl[0], ci)
                i += 1
        return None

    # -- conflict analysis ----------------------------------------------------
    def _bump(self, var: int):
        self.activity[var] += self.var_inc
        if self.activity[var] > 1e100:
            for v in range(1, self.nvars + 1):
                self.activity[v] *= 1e-100
            self.var_inc *= 1e-100
            self.order = [(-self.activity[v], v) for v in range(1, self.nvars + 1)
                          if v not in self.assign]
            heapq.heapify(self.order)
            return
        heapq.heappush(self.order, (-self.activity[var], var))

    def _analyze(self, conflict: List[int]):
        """First-UIP learning; returns (learned clause, backjump level)."""
        cur_level = len(self.trail_lim)
        seen = set()
        counter = 0
        learned = []
        lits = list(conflict)
        idx = len(self.trail) - 1
        uip = None
        while True:
            for l in lits:
                var = abs(l)
                if var in seen or self.level[var] == 0:
                    continue
                seen.add(var)
                self._bump(var)
                if self.level[var] == cur_level:
                    counter += 1
                else:
                    learned.append(l)
            while True:
                assert idx >= 0, "conflict clause had no literal at the current level"
                lit = self.trail[idx]
                idx -= 1
                if abs(lit) in seen:
                    break
            var = abs(lit)
            seen.discard(var)
            counter -= 1
            if counter == 0:
                uip = -lit
                break
            ridx = self.reason[var]
            lits = [l for l in self.clauses[ridx] if abs(l) != var]
        learned = [uip] + learned
        bj = 0 if len(learned) == 1 else max(self.level[abs(l)] for l in learned[1:])
        return learned, bj

    def _backjump(self, blevel: int):
        while len(self.trail_lim) > blevel:
            limit = self.trail_lim.pop()
            while len(self.trail) > limit:
                lit = self.trail.pop()
                var = abs(lit)
                self.phase[var] = lit > 0
                del self.assign[var]
                del self.reason[var]
                del self.level[var]
                heapq.heappush(self.order, (-self.activity[var], var))
            self.qhead = min(self.qhead, len(self.trail))

    def _decide(self) -> Optional[int]:
        while self.order:
            act, v = self.order[0]
            if v in self.assign or -act != self.activity[v]:
                heapq.heappop(self.order)
                continue
            return v if self.phase[v] else -v
        return None

    # -- main loop -------------------------------------------------------------
    def solve(self, theory=None, max_conflicts: Optional[int] = None) -> Optional[dict]:
        """Returns a model {var: bool} or None for UNSAT.

        `theory` is either a callable on total assignments returning an
        optional conflict clause, or a DPLL(T) plugin with on_assign /
        on_new_level / on_backjump / on_decision_check / on_final hooks.
        Raise BudgetExceeded inside the theory to give up.
        """
        if not self.ok:
            return None
        if theory is not None and not hasattr(theory, "on_assign"):
            theory = _FinalOnly(theory)
        conflicts = 0

        def backjump(level):
            self._backjump(level)
            if theory is not None:
                theory.on_backjump(level)

        def handle_conflict(conflict) -> bool:
            """Learn from a clause index or a theory-conflict list; False = UNSAT."""
            nonlocal conflicts
            conflicts += 1
            if max_conflicts is not None and conflicts > max_conflicts:
                raise BudgetExceeded("conflict budget exhausted")
            if isinstance(conflict, int):
                lits = self.clauses[conflict]
                if not self.trail_lim:
                    self.ok = False
                    return False
            else:
                lits = [l for l in conflict if self.level.get(abs(l), 0) > 0]
                if not lits:
                    self.ok = False
                    return False
                maxlev = max(self.level[abs(l)] for l in lits)
                if maxlev < len(self.trail_lim):
                    backjump(maxlev)
            learned, bj = self._analyze(lits)
            backjump(bj)
            self._learn(learned)
            self.var_inc *= 1.05
            return True

        while True:
            conflict = self._propagate(theory)
            if conflict is not None:
                if isinstance(conflict, int) and not self.trail_lim:
                    self.ok = False
                    return None
                if not handle_conflict(conflict):
                    return None
                continue
            if theory is not None:
                veto = theory.on_decision_check()
                if veto is not None:
                    if not handle_conflict(veto):
                        return None
                    continue
            if len(self.assign) == self.nvars:
                model = dict(self.assign)
                if theory is None:
                    return model
                veto = theory.on_final(model)
                if veto is None:
                    return model
                if not handle_conflict(veto):
                    return None
                continue
            lit = self._decide()
            self.trail_lim.append(len(self.trail))
            if theory is not None:
                theory.on_new_level()
            self._enqueue(lit, None)


    def _learn(self, learned: List[int]):
        if len(learned) == 1:
            self._enqueue(learned[0], None)
            return
        idx = len(self.clauses)
        # watch the asserting literal and one literal from the backjump level
        rest = sorted(learned[1:], key=lambda l: -self.level[abs(l)])
        cl = [learned[0]] + rest
        self.clauses.append(cl)
        for l in cl[:2]:
            self.watches.setdefault(l, []).append(idx)
        self._enqueue(cl[0], idx)

class _FinalOnly:
    """Adapter: a plain total-assignment callback as a DPLL(T) plugin."""

    def __init__(self, fn):
        self.fn = fn

    def on_assign(self, lit):
        return None

    def on_new_level(self):
        pass

    def on_backjump(self, level):
        pass

    def on_decision_check(self):
        return None

    def on_final(self, model):
        return self.fn(model)



def solve_cnf(nvars: int, clauses, theory=None, max_conflicts=None) -> Optional[dict]:
    s = Solver(nvars)
    for c in clauses:
        if not s.add_clause(list(c)):
            return None
    return s.solve(theory=theory, max_conflicts=max_conflicts)
