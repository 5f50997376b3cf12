"""Stratified CEGIS over predicate constraint problems.

Each iteration: (a) decide whether the accumulated ground examples are already
unsatisfiable under the kind semantics (then the problem is unsatisfiable and
the examples are the witness); (b) synthesize a candidate from the examples at
the current template stratum, growing parameters along unsat cores until one
exists; (c) validate the candidate against the full clause set, harvesting one
new ground example per violated clause.  An optional resolution pass derives
extra ground consequences (unit propagation plus unit resolution against the
input clauses) to speed convergence.

Progress is asserted, not assumed: a repeated candidate fingerprint or a
repeated counterexample instance raises ProgressViolation.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from .examples_unsat import check_examples_unsat
from .ir import (
    Add, Clause, ExampleInstance, GroundAtom, IntConst, Kinding, Neg, PfwCSP,
    Scale, Sort, Sub, Term, Var, fnot, ground, substitute_predicates,
)
from .smt import SmtSession
from .templates import TemplateParams, UnsatCore, synthesize, update_params


class ProgressViolation(AssertionError):
    """The loop revisited a candidate or counterexample; must never happen."""


class BackendError(Exception):
    """Validation could not be decided (soundness-critical)."""


@dataclass
class SolveConfig:
    timeout_s: float = 600.0
    per_query_timeout_ms: int = 10000
    smt_command: Optional[str] = None
    init_params: Optional[dict] = None
    resolution: bool = True
    resolution_rounds: int = 1
    resolution_max_new: int = 200
    use_refined_wf: bool = True
    fairness_threshold: int = 2
    log: Optional[Callable[[dict], None]] = None


@dataclass
class SolveOutcome:
    status: str  # solution | unsat | timeout
    iterations: int
    elapsed_s: float
    candidate: Optional[dict] = None
    witness: Optional[list] = None      # examples proving unsatisfiability
    params: Optional[TemplateParams] = None
    examples: int = 0
    diagnostics: str = ""


def solve(problem: PfwCSP, config: Optional[SolveConfig] = None) -> SolveOutcome:
    config = config or SolveConfig()
    start = time.monotonic()
    deadline = start + config.timeout_s
    kinding = problem.kinding
    params = TemplateParams.initial(kinding, config.init_params)
    examples: List[ExampleInstance] = []
    example_keys = set()
    fingerprints = set()
    iteration = 0

    def emit(phase: str, **kw):
        if config.log:
            config.log({"phase": phase, "iteration": iteration,
                        "elapsed_s": round(time.monotonic() - start, 3),
                        "examples": len(examples),
                        "params": params.snapshot(), **kw})

    def remaining_ms() -> int:
        return max(int((deadline - time.monotonic()) * 1000), 1)

    def out_of_time() -> bool:
        return time.monotonic() >= deadline

    synth_budget_ms = config.per_query_timeout_ms
    with SmtSession(config.smt_command, timeout_ms=config.per_query_timeout_ms) \
            as synth_session, \
            SmtSession(config.smt_command,
                       timeout_ms=config.per_query_timeout_ms) as valid_session:
        while True:
            iteration += 1
            chk = check_examples_unsat(examples, kinding)
            emit("unsat-check", result=chk.status, rounds=chk.rounds)
            if chk.status == "unsat":
                return SolveOutcome("unsat", iteration,
                                    time.monotonic() - start,
                                    witness=list(examples), params=params,
                                    examples=len(examples))

            candidate = None
            while True:
                if out_of_time():
                    return SolveOutcome("timeout", iteration,
                                        time.monotonic() - start, params=params,
                                        examples=len(examples),
                                        diagnostics="budget exhausted in synthesis")
                budget = min(synth_budget_ms, remaining_ms())
                result = synthesize(examples, kinding, params, synth_session,
                                    use_refined=config.use_refined_wf,
                                    timeout_ms=budget)
                if isinstance(result, UnsatCore):
                    emit("synthesis", result="grow", core=list(result.labels),
                         implicated=list(result.implicated),
                         from_unknown=result.from_unknown)
                    if result.from_unknown:
                        # growing alone cannot help a timed-out query; also
                        # give the next attempt more patience
                        synth_budget_ms = min(synth_budget_ms * 2,
                                              max(remaining_ms(), 1))
                    params = update_params(params, result, kinding,
                                           config.fairness_threshold)
                    continue
                candidate = result
                break
            emit("synthesis", result="candidate")

            fp = candidate_fingerprint(candidate)
            if fp in fingerprints:
                raise ProgressViolation(
                    f"candidate repeated at iteration {iteration}")
            fingerprints.add(fp)

            if out_of_time():
                return SolveOutcome("timeout", iteration,
                                    time.monotonic() - start, params=params,
                                    examples=len(examples),
                                    diagnostics="budget exhausted before validation")
            counterexamples = validate(candidate, problem, valid_session,
                                       timeout_ms=min(config.per_query_timeout_ms,
                                                      remaining_ms()))
            emit("validation", violations=len(counterexamples))
            if not counterexamples:
                return SolveOutcome("solution", iteration,
                                    time.monotonic() - start,
                                    candidate=candidate, params=params,
                                    examples=len(examples))

            for idx, theta in counterexamples:
                inst = ground(problem.clauses[idx], theta)
                if inst.trivially_true:
                    raise ProgressViolation(
                        f"counterexample for clause {idx + 1} folded to true")
                key = inst.canonical()
                if key in example_keys:
                    raise ProgressViolation(
                        f"counterexample for clause {idx + 1} repeated: {inst}")
                example_keys.add(key)
                examples.append(key)

            if config.resolution:
                extra = resolution_expand(examples, problem,
                                          max_new=config.resolution_max_new,
                                          rounds=config.resolution_rounds)
                fresh = 0
                for inst in extra:
                    key = inst.canonical()
                    if key not in example_keys and not key.trivially_true:
                        example_keys.add(key)
                        examples.append(key)
                        fresh += 1
                emit("resolution", added=fresh)


def candidate_fingerprint(candidate: dict) -> str:
    from .parser import format_candidate
    return format_candidate(dict(sorted(candidate.items())))


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

def validate(candidate: dict, problem: PfwCSP, session: SmtSession,
             timeout_ms: Optional[int] = None,
             small_model_radius: int = 4) -> List[Tuple[int, dict]]:
    """Returns [] when the candidate solves the problem, else per-clause
    counterexample substitutions (clause-index, theta over its free vars).

    Counter-models are re-sought inside a small box first: small example
    values generalize far better and keep later synthesis queries light.
    """
    from .ir import Atom, IntConst, Var, fand, formula_vars

    out = []
    formulas = substitute_predicates(problem.clauses, candidate)
    for idx, f in enumerate(formulas):
        negated = fnot(f)
        res = session.check([(f"cl_{idx}", negated)], need_model=True,
                            timeout_ms=timeout_ms)
        if res.status == "unsat":
            continue
        if res.status != "sat":
            raise BackendError(
                f"validation of clause {idx + 1} returned unknown: {res.reason}")
        if small_model_radius:
            box = [Atom("<=", Var(n), IntConst(small_model_radius))
                   for n, s in formula_vars(negated).items() if s is Sort.INT]
            box += [Atom(">=", Var(n), IntConst(-small_model_radius))
                    for n, s in formula_vars(negated).items() if s is Sort.INT]
            small = session.check([(f"cl_{idx}", negated), ("box", fand(box))],
                                  need_model=True, timeout_ms=timeout_ms)
            if small.status == "sat":
                res = small
        fv = problem.clauses[idx].free_vars()
        model = res.model or {}
        theta = {}
        for name, sort in fv.items():
            if name in model:
                theta[name] = model[name]
            else:
                theta[name] = False if sort is Sort.BOOL else 0
        out.append((idx, theta))
    return out


# ---------------------------------------------------------------------------
# Resolution / unit-propagation expansion
# ---------------------------------------------------------------------------

def _unit_closure(examples: Sequence[ExampleInstance]) -> Optional[Dict[GroundAtom, bool]]:
    """Unit propagation over ground clauses; None on propositional conflict."""
    assign: Dict[GroundAtom, bool] = {}
    clauses = [list(e.literals()) for e in examples if not e.trivially_true]
    changed = True
    while changed:
        changed = False
        for lits in clauses:
            satisfied = False
            unknown = []
            for atom, sign in lits:
                v = assign.get(atom)
                if v is None:
                    unknown.append((atom, sign))
                elif v == sign:
                    satisfied = True
                    break
            if satisfied:
                continue
            if not unknown:
                return None
            if len(unknown) == 1:
                atom, sign = unknown[0]
                assign[atom] = sign
                changed = True
    return assign


def _match_term(t: Term, value, theta: dict) -> bool:
    """Match a clause term against a ground value, extending theta."""
    if isinstance(t, Var):
        if t.name in theta:
            return theta[t.name] == value
        if isinstance(value, bool) != (t.sort is Sort.BOOL):
            return False
        theta[t.name] = value
        return True
    if isinstance(t, (IntConst,)):
        return not isinstance(value, bool) and t.value == value
    from .ir import BoolConst
    if isinstance(t, BoolConst):
        return isinstance(value, bool) and t.value == value
    # affine in one variable: a*x + b = value  (integers only)
    lin = _single_var_affine(t)
    if lin is None or isinstance(value, bool):
        return False
    name, a, b = lin
    if name in theta:
        prev = theta[name]
        return isinstance(prev, int) and a * prev + b == value
    if (value - b) % a != 0:
        return False
    theta[name] = (value - b) // a
    return True


def _single_var_affine(t: Term):
    """Decomposes t as a*x + b with a != 0; None when not of that shape."""
    if isinstance(t, Var):
        return (t.name, 1, 0) if t.sort is Sort.INT else None
    if isinstance(t, IntConst):
        return None
    if isinstance(t, Neg):
        sub = _single_var_affine(t.arg)
        return None if sub is None else (sub[0], -sub[1], -sub[2])
    if isinstance(t, Scale):
        sub = _single_var_affine(t.arg)
        return None if sub is None else (sub[0], t.coeff * sub[1], t.coeff * sub[2])
    if isinstance(t, (Add, Sub)):
        sign = 1 if isinstance(t, Add) else -1
        for a, b in ((t.left, t.right), (t.right, t.left)):
            if isinstance(b, IntConst):
                sub = _single_var_affine(a)
                if sub is not None:
                    if a is t.left:
                        return (sub[0], sub[1], sub[2] + sign * b.value)
                    return (sub[0], sign * sub[1], sign * sub[2] +
                            (b.value if isinstance(t, Add) else b.value))
    return None


def resolution_expand(examples: Sequence[ExampleInstance], problem: PfwCSP,
                      max_new: int = 200, rounds: int = 1) -> List[ExampleInstance]:
    """Derives additional ground instances from units and the input clauses."""
    out: List[ExampleInstance] = []
    seen = {e.canonical() for e in examples}

    def fresh(inst: ExampleInstance) -> bool:
        key = inst.canonical()
        if key.is_tautological() or key in seen:
            return False
        seen.add(key)
        out.append(key)
        return True

    work = list(examples)

    def add_units() -> bool:
        units = _unit_closure(work + out)
        if units is None:
            return False
        for atom, sign in units.items():
            if len(out) >= max_new:
                break
            fresh(ExampleInstance((atom,), ()) if sign
                  else ExampleInstance((), (atom,)))
        return True

    for _ in range(max(rounds, 1)):
        units = _unit_closure(work + out)
        if units is None:
            return out
        # ground input clauses by matching literals against opposite units
        for clause in problem.clauses:
            if len(out) >= max_new:
                return out
            fv = clause.free_vars()
            lits = list(clause.atoms())
            for atom, sign in lits:
                for uatom, usign in units.items():
                    if uatom.pred != atom.pred or usign == sign:
                        continue
                    if len(uatom.values) != len(atom.args):
                        continue
                    theta: dict = {}
                    if not all(_match_term(t, v, theta)
                               for t, v in zip(atom.args, uatom.values)):
                        continue
                    theta = _extend_theta(theta, lits, units)
                    if theta is None or set(theta) != set(fv):
                        continue
                    inst = ground(clause, theta)
                    if fresh(inst) and len(out) >= max_new:
                        return out
        if not add_units():
            return out
    return out


def _extend_theta(theta: dict, lits, units) -> Optional[dict]:
    """Greedy completion of a partial grounding by matching other literals."""
    theta = dict(theta)
    progress = True
    while progress:
        progress = False
        for atom, sign in lits:
            for uatom, usign in units.items():
                if uatom.pred != atom.pred or len(uatom.values) != len(atom.args):
                    continue
                trial = dict(theta)
                if all(_match_term(t, v, trial)
                       for t, v in zip(atom.args, uatom.values)):
                    if len(trial) > len(theta):
                        theta = trial
                        progress = True
    return theta
