"""Command-line interface: solve, encode, validate, lint, bench."""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from typing import List, Optional

from . import bench as bench_mod
from . import cegis, encoder
from .ir import Kind, MissingDefinition, Sort, check_well_sorted, fnot, \
    substitute_predicates
from .parser import (
    ParseError, format_candidate, parse_formula_text, parse_pfwcsp,
    parse_solution, parse_transition_system, print_pfwcsp,
)
from .smt import SmtSession
from .templates import check_fn_shape, check_wf_shape, grid_wf_probe

EXIT_SOLVED = 0
EXIT_UNSAT = 10
EXIT_TIMEOUT = 20
EXIT_ERROR = 1
EXIT_INVALID = 2


def main(argv: Optional[List[str]] = None) -> int:
    p = argparse.ArgumentParser(
        prog="pfw",
        description="Constraint solving and relational-verification encoders "
                    "for predicate constraint problems with well-founded and "
                    "functional predicate variables.")
    sub = p.add_subparsers(dest="cmd", required=True)

    ps = sub.add_parser("solve", help="solve a .pfw problem")
    ps.add_argument("file")
    ps.add_argument("--timeout", type=float, default=None, metavar="S")
    ps.add_argument("--smt", default=None, help="SMT solver command "
                    "(default: PFW_SMT_SOLVER or the bundled solver)")
    ps.add_argument("--query-timeout-ms", type=int, default=None)
    ps.add_argument("--init-params", default=None, metavar="SPEC",
                    help="e.g. 'nd=2,ac=3' or 'Inv:nd=2;WF_R:rc=2'")
    ps.add_argument("--no-resolution", action="store_true")
    ps.add_argument("--base-wf-family", action="store_true",
                    help="use the unrefined well-founded template family")
    ps.add_argument("--json", action="store_true")
    ps.add_argument("--log", default=None, metavar="FILE",
                    help="write line-delimited phase records")

    pe = sub.add_parser("encode", help="encode a relational problem to .pfw")
    pe.add_argument("kind", choices=["ksafety", "coterm", "tigni", "tsgni"])
    pe.add_argument("--system", action="append", required=True, metavar="FILE")
    pe.add_argument("--pre", required=True, metavar="EXPR")
    pe.add_argument("--post", default=None, metavar="EXPR")
    pe.add_argument("--symmetric", action="store_true")
    pe.add_argument("--strict", action="store_true",
                    help="treat lint failures as errors")
    pe.add_argument("--hints", default=None, metavar="FILE")
    pe.add_argument("-o", "--output", default=None, metavar="OUT")
    pe.add_argument("--golden", default=None, metavar="REF",
                    help="compare structurally against a reference listing")

    pv = sub.add_parser("validate", help="check a solution against a problem")
    pv.add_argument("problem")
    pv.add_argument("solution")
    pv.add_argument("--smt", default=None)
    pv.add_argument("--query-timeout-ms", type=int, default=20000)

    pl = sub.add_parser("lint", help="check transition-system side conditions")
    pl.add_argument("system", nargs="+")
    pl.add_argument("--strict", action="store_true")

    pb = sub.add_parser("bench", help="run a directory of .pfw benchmarks")
    pb.add_argument("dir")
    pb.add_argument("--jobs", type=int, default=1)
    pb.add_argument("--timeout", type=float, default=None, metavar="S")
    pb.add_argument("--smt", default=None)
    pb.add_argument("--ref", default=None, metavar="REFFILE")
    pb.add_argument("--json", action="store_true")
    pb.add_argument("--out-dir", default=None, metavar="DIR",
                    help="write report.csv, report.json and report.png")

    args = p.parse_args(argv)
    try:
        if args.cmd == "solve":
            return cmd_solve(args)
        if args.cmd == "encode":
            return cmd_encode(args)
        if args.cmd == "validate":
            return cmd_validate(args)
        if args.cmd == "lint":
            return cmd_lint(args)
        if args.cmd == "bench":
            return cmd_bench(args)
    except (ParseError, encoder.EncodeError, cegis.BackendError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_ERROR


# ---------------------------------------------------------------------------
# solve
# ---------------------------------------------------------------------------

def parse_init_params(spec: Optional[str]) -> Optional[dict]:
    if not spec:
        return None
    out: dict = {}
    for group in spec.split(";"):
        group = group.strip()
        if not group:
            continue
        if ":" in group:
            name, rest = group.split(":", 1)
        else:
            name, rest = "*", group
        entry = out.setdefault(name.strip(), {})
        for kv in rest.split(","):
            k, v = kv.split("=")
            entry[k.strip()] = int(v)
    return out


def cmd_solve(args) -> int:
    with open(args.file) as fh:
        problem = parse_pfwcsp(fh.read())
    errs = check_well_sorted(problem)
    if errs:
        for e in errs:
            print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR
    side = bench_mod.load_sidecar(args.file)
    init = parse_init_params(args.init_params) or side.get("init_params")
    log_fh = open(args.log, "w") if args.log else None
    try:
        config = cegis.SolveConfig(
            timeout_s=args.timeout if args.timeout is not None
            else float(side.get("timeout_s", 600.0)),
            per_query_timeout_ms=args.query_timeout_ms
            if args.query_timeout_ms is not None
            else int(side.get("per_query_timeout_ms", 10000)),
            smt_command=args.smt,
            init_params=init,
            resolution=not args.no_resolution and side.get("resolution", True),
            use_refined_wf=not args.base_wf_family,
            log=(lambda rec: (log_fh.write(json.dumps(rec) + "\n"),
                              log_fh.flush()) and None) if log_fh else None,
        )
        outcome = cegis.solve(problem, config)
    finally:
        if log_fh:
            log_fh.close()
    name = os.path.splitext(os.path.basename(args.file))[0]
    report = {
        "name": name,
        "outcome": {"solution": "solved", "unsat": "unsat",
                    "timeout": "timeout"}[outcome.status],
        "elapsed_s": round(outcome.elapsed_s, 3),
        "iterations": outcome.iterations,
        "examples": outcome.examples,
        "params": outcome.params.snapshot() if outcome.params else {},
        "solution": format_candidate(outcome.candidate)
        if outcome.candidate else None,
        "witness": [str(e) for e in outcome.witness] if outcome.witness else None,
    }
    if args.json:
        print(json.dumps(report, indent=2))
    else:
        print(f"{name}: {report['outcome']} after {report['iterations']} "
              f"iterations, {report['elapsed_s']}s, "
              f"{report['examples']} examples")
        if outcome.candidate:
            print(report["solution"], end="")
        if outcome.witness:
            print("unsatisfiable example set:")
            for e in outcome.witness:
                print(f"  {e}")
        if outcome.diagnostics:
            print(f"note: {outcome.diagnostics}")
    return {"solution": EXIT_SOLVED, "unsat": EXIT_UNSAT,
            "timeout": EXIT_TIMEOUT}[outcome.status]


# ---------------------------------------------------------------------------
# encode
# ---------------------------------------------------------------------------

def cmd_encode(args) -> int:
    systems = []
    for path in args.system:
        with open(path) as fh:
            systems.append(parse_transition_system(fh.read()))
    bool_vars = []
    for i, ts in enumerate(systems, start=1):
        for v, s in ts.vars:
            if s is Sort.BOOL:
                bool_vars.append(f"{v}{i}")
    pre = parse_formula_text(args.pre, bool_vars=bool_vars)
    post = parse_formula_text(args.post, bool_vars=bool_vars) \
        if args.post else None

    warnings = 0
    for path, ts in zip(args.system, systems):
        for finding in encoder.lint_system(ts):
            if finding.ok is False:
                warnings += 1
                print(f"lint: {path}: {finding.name} FAILED ({finding.detail})",
                      file=sys.stderr)
            elif finding.ok is None:
                print(f"lint: {path}: {finding.name} not checked "
                      f"({finding.detail})", file=sys.stderr)
    if warnings and args.strict:
        print("error: lint failed under --strict", file=sys.stderr)
        return EXIT_ERROR

    problem = encoder.encode(encoder.RelationalProblem(
        args.kind, systems, pre, post, symmetric=args.symmetric))
    if args.hints:
        with open(args.hints) as fh:
            hint_problem = parse_pfwcsp(fh.read(), base_kinding=problem.kinding)
        problem = encoder.add_hints(problem, hint_problem.clauses)
    text = print_pfwcsp(problem)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        print(text, end="")
    if args.golden:
        with open(args.golden) as fh:
            golden = parse_pfwcsp(fh.read())
        report = encoder.structurally_equal(problem, golden)
        if not report.equal:
            print(f"golden mismatch: {report.detail}", file=sys.stderr)
            return EXIT_INVALID
        print(f"golden match: {args.golden} "
              f"({len(problem.clauses)} clauses)", file=sys.stderr)
    return 0


# ---------------------------------------------------------------------------
# validate
# ---------------------------------------------------------------------------

def cmd_validate(args) -> int:
    with open(args.problem) as fh:
        problem = parse_pfwcsp(fh.read())
    errs = check_well_sorted(problem)
    if errs:
        for e in errs:
            print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR
    with open(args.solution) as fh:
        candidate = parse_solution(fh.read())
    missing = [n for n in problem.pred_names() if n not in candidate]
    if missing:
        print(f"error: missing definitions for {', '.join(sorted(missing))}",
              file=sys.stderr)
        return EXIT_ERROR
    for name, sig in problem.kinding.items():
        d = candidate.get(name)
        if d is None:
            continue
        if len(d.params) != sig.arity or \
                tuple(s for _, s in d.params) != sig.sig:
            print(f"error: {name} signature mismatch", file=sys.stderr)
            return EXIT_ERROR

    bad = 0
    for name, sig in problem.kinding.items():
        if name not in candidate:
            continue
        if sig.kind is Kind.WF:
            ok, why = check_wf_shape(candidate[name])
            if ok:
                ok, why = grid_wf_probe(candidate[name])
            print(f"{name}: well-founded shape "
                  f"{'ok' if ok else 'REJECTED'} ({why})")
            bad += 0 if ok else 1
        elif sig.kind is Kind.FN:
            ok, why = check_fn_shape(candidate[name])
            print(f"{name}: functional shape "
                  f"{'ok' if ok else 'REJECTED'} ({why})")
            bad += 0 if ok else 1

    try:
        formulas = substitute_predicates(problem.clauses, candidate)
    except MissingDefinition as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR
    with SmtSession(args.smt, timeout_ms=args.query_timeout_ms) as session:
        for idx, f in enumerate(formulas):
            res = session.check([(f"cl_{idx}", fnot(f))], need_model=True)
            if res.status == "unsat":
                print(f"clause {idx + 1}: valid")
            elif res.status == "sat":
                bad += 1
                print(f"clause {idx + 1}: INVALID, counter-model {res.model}")
            else:
                print(f"error: clause {idx + 1} undecided: {res.reason}",
                      file=sys.stderr)
                return EXIT_ERROR
    if bad:
        print(f"validation FAILED ({bad} problem(s))")
        return EXIT_INVALID
    print("validation OK")
    return 0


# ---------------------------------------------------------------------------
# lint / bench
# ---------------------------------------------------------------------------

def cmd_lint(args) -> int:
    failures = 0
    for path in args.system:
        with open(path) as fh:
            ts = parse_transition_system(fh.read())
        for finding in encoder.lint_system(ts):
            status = {True: "ok", False: "FAILED", None: "not checked"}[finding.ok]
            print(f"{path}: {finding.name}: {status} ({finding.detail})")
            if finding.ok is False:
                failures += 1
    if failures and args.strict:
        return EXIT_ERROR
    return 0


def cmd_bench(args) -> int:
    options = {
        "timeout_s": args.timeout,
        "smt_command": args.smt,
    }
    rows = bench_mod.run_bench(args.dir, options, jobs=args.jobs,
                               ref_file=args.ref)
    if args.json:
        print(json.dumps(bench_mod.rows_to_json(rows), indent=2))
    else:
        print(bench_mod.render_table(rows, with_ref=args.ref is not None))
    if args.out_dir:
        for path in bench_mod.write_outputs(rows, args.out_dir):
            print(f"wrote {path}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
