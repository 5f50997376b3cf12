"""Unsatisfiability of ground example sets under WF/FN kind constraints.

Propositional satisfiability over the ground-atom table is decided by the CDCL
core; satisfying assignments are then audited against the kind semantics:
simple cycles in a well-founded predicate's edge set and output conflicts of a
functional predicate become learnt clauses, and the loop repeats.  Termination
holds because each learnt clause removes at least one assignment from a finite
space.

Totality of functional predicates is not (and cannot be) checked here: ground
examples only ever witness functionality violations; totality is guaranteed on
the candidate side by template construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

from . import sat
from .ir import ExampleInstance, GroundAtom, Kind, Kinding


class GroundAtomTable:
    """Bijection between ground atoms and 1-based propositional variables."""

    def __init__(self):
        self.index: Dict[GroundAtom, int] = {}
        self.atoms: List[GroundAtom] = []

    def var(self, atom: GroundAtom) -> int:
        i = self.index.get(atom)
        if i is None:
            self.atoms.append(atom)
            i = len(self.atoms)
            self.index[atom] = i
        return i

    def __len__(self) -> int:
        return len(self.atoms)


def _node_key(node):
    return tuple((int(isinstance(v, bool)), int(v)) for v in node)


def enumerate_simple_cycles(graph: Dict[tuple, Set[tuple]], limit: int = 1000) -> List[list]:
    """Elementary cycles of a directed graph (Johnson-style search).

    Returns at most `limit` cycles as node lists (closing edge implicit);
    deterministic for a fixed node ordering, complete when under the limit.
    """
    out: List[list] = []
    nodes = sorted(graph, key=_node_key)
    edges = {v: set(ts) for v, ts in graph.items()}
    for v in nodes:
        if v in edges.get(v, ()):
            out.append([v])
            edges[v].discard(v)
            if len(out) >= limit:
                return out

    def sccs(vertices) -> List[set]:
        idx = {}
        low = {}
        on_stack = set()
        stack = []
        result = []
        counter = [0]

        def strongconnect(root):
            work = [(root, iter(sorted(edges.get(root, ()), key=_node_key)))]
            idx[root] = low[root] = counter[0]
            counter[0] += 1
            stack.append(root)
            on_stack.add(root)
            while work:
                v, it = work[-1]
                advanced = False
                for w in it:
                    if w not in vertices:
                        continue
                    if w not in idx:
                        idx[w] = low[w] = counter[0]
                        counter[0] += 1
                        stack.append(w)
                        on_stack.add(w)
                        work.append((w, iter(sorted(edges.get(w, ()), key=_node_key))))
                        advanced = True
                        break
                    if w in on_stack:
                        low[v] = min(low[v], idx[w])
                if advanced:
                    continue
                work.pop()
                if work:
                    pv = work[-1][0]
                    low[pv] = min(low[pv], low[v])
                if low[v] == idx[v]:
                    comp = set()
                    while True:
                        w = stack.pop()
                        on_stack.discard(w)
                        comp.add(w)
                        if w == v:
                            break
                    result.append(comp)

        for v in sorted(vertices, key=_node_key):
            if v not in idx:
                strongconnect(v)
        return [c for c in result if len(c) > 1]

    pending = sccs(set(nodes))
    while pending and len(out) < limit:
        scc = pending.pop()
        start = min(scc, key=_node_key)
        path = [start]
        blocked = {start}
        closed = set()
        B: Dict[tuple, set] = {}
        in_scc = lambda v: v in scc
        nbrs_of = lambda v: sorted((w for w in edges.get(v, ()) if in_scc(w)),
                                   key=_node_key, reverse=True)
        stack = [(start, nbrs_of(start))]
        while stack and len(out) < limit:
            thisnode, nbrs = stack[-1]
            if nbrs:
                nextnode = nbrs.pop()
                if nextnode == start:
                    out.append(list(path))
                    closed.update(path)
                elif nextnode not in blocked:
                    path.append(nextnode)
                    stack.append((nextnode, nbrs_of(nextnode)))
                    closed.discard(nextnode)
                    blocked.add(nextnode)
                    continue
            if not nbrs:
                if thisnode in closed:
                    unblock = [thisnode]
                    while unblock:
                        v = unblock.pop()
                        if v in blocked:
                            blocked.discard(v)
                            unblock.extend(B.get(v, ()))
                            B.pop(v, None)
                else:
                    for w in edges.get(thisnode, ()):
                        if in_scc(w):
                            B.setdefault(w, set()).add(thisnode)
                stack.pop()
                path.pop()
        remaining = scc - {start}
        if len(remaining) > 1:
            sub = sccs(remaining)
            pending.extend(sub)
    return out


@dataclass
class WfGraph:
    """Edge view of a WF predicate under a propositional assignment."""

    pred: str
    edges: Dict[tuple, Set[tuple]] = field(default_factory=dict)

    def add(self, values: tuple):
        half = len(values) // 2
        src, dst = values[:half], values[half:]
        self.edges.setdefault(src, set()).add(dst)
        self.edges.setdefault(dst, set())


@dataclass
class UnsatCheck:
    status: str  # "unsat" | "sat"
    assignment: Optional[Dict[GroundAtom, bool]] = None
    rounds: int = 0
    learnt: int = 0


def check_examples_unsat(examples: Iterable[ExampleInstance], kinding: Kinding,
                         cycle_limit: int = 1000) -> UnsatCheck:
    table = GroundAtomTable()
    clauses: List[List[int]] = []
    for e in examples:
        if e.trivially_true:
            continue
        lits = [table.var(a) for a in e.pos] + [-table.var(a) for a in e.neg]
        clauses.append(lits)
    learnt: List[tuple] = []
    learnt_set: Set[tuple] = set()
    rounds = 0
    while True:
        rounds += 1
        model = sat.solve_cnf(len(table), clauses + [list(c) for c in learnt])
        if model is None:
            return UnsatCheck("unsat", rounds=rounds, learnt=len(learnt))
        assignment = {atom: model[i + 1] for i, atom in enumerate(table.atoms)}
        new: List[tuple] = []
        by_pred: Dict[str, List[GroundAtom]] = {}
        for atom, tv in assignment.items():
            if tv:
                by_pred.setdefault(atom.pred, []).append(atom)
        for pred, sig in kinding.items():
            atoms = by_pred.get(pred, [])
            if sig.kind is Kind.WF:
                g = WfGraph(pred)
                for a in atoms:
                    g.add(a.values)
                for cyc in enumerate_simple_cycles(g.edges, cycle_limit):
                    lits = []
                    m = len(cyc)
                    for i in range(m):
                        src, dst = cyc[i], cyc[(i + 1) % m]
                        lits.append(-table.var(GroundAtom(pred, src + dst)))
                    new.append(tuple(sorted(set(lits))))
            elif sig.kind is Kind.FN:
                groups: Dict[tuple, List[GroundAtom]] = {}
                for a in atoms:
                    groups.setdefault(a.values[:-1], []).append(a)
                for prefix, members in groups.items():
                    outs = sorted({a.values[-1] for a in members},
                                  key=lambda v: (int(isinstance(v, bool)), int(v)))
                    for i in range(len(outs)):
                        for j in range(i + 1, len(outs)):
                            c = (-table.var(GroundAtom(pred, prefix + (outs[i],))),
                                 -table.var(GroundAtom(pred, prefix + (outs[j],))))
                            new.append(tuple(sorted(c)))
        fresh = [c for c in new if c not in learnt_set]
        if not fresh:
            return UnsatCheck("sat", assignment=assignment, rounds=rounds,
                              learnt=len(learnt))
        for c in fresh:
            learnt_set.add(c)
            learnt.append(c)


def brute_force_unsat(examples: Sequence[ExampleInstance], kinding: Kinding) -> bool:
    """Exhaustive oracle: true iff no assignment satisfies the examples and kinds.

    Only usable for small atom counts (2^n enumeration); test oracle.
    """
    table = GroundAtomTable()
    exs = [e for e in examples if not e.trivially_true]
    for e in exs:
        for a in e.pos + e.neg:
            table.var(a)
    n = len(table)
    for mask in range(1 << n):
        assign = {table.atoms[i]: bool(mask >> i & 1) for i in range(n)}
        if not all(any(assign[a] for a in e.pos) or any(not assign[a] for a in e.neg)
                   for e in exs):
            continue
        ok = True
        for pred, sig in kinding.items():
            true_atoms = [a for a, v in assign.items() if v and a.pred == pred]
            if sig.kind is Kind.WF:
                g = WfGraph(pred)
                for a in true_atoms:
                    g.add(a.values)
                if _has_cycle(g.edges):
                    ok = False
                    break
            elif sig.kind is Kind.FN:
                seen = {}
                for a in true_atoms:
                    prev = seen.get(a.values[:-1])
                    if prev is not None and prev != a.values[-1]:
                        ok = False
                        break
                    seen[a.values[:-1]] = a.values[-1]
                if not ok:
                    break
        if ok:
            return False
    return True


def _has_cycle(edges: Dict[tuple, Set[tuple]]) -> bool:
    color = {}

    def visit(v) -> bool:
        color[v] = 1
        for w in edges.get(v, ()):
            c = color.get(w)
            if c == 1:
                return True
            if c is None and visit(w):
                return True
        color[v] = 2
        return False

    return any(color.get(v) is None and visit(v) for v in edges)
