"""Benchmark runner: a directory of .pfw problems, run in parallel workers.

Per-file JSON sidecars override defaults (timeout_s, init_params, resolution);
command-line flags override sidecars.  When a reference file with published
results is given, the report gains an agreement column (solved/unsolved
agreement only; wall times are machine-dependent and never compared).  With an
output directory, the report is written as CSV and JSON alongside a rendered
PNG figure of solve times.
"""

from __future__ import annotations

import json
import os
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import asdict, dataclass, field
from typing import List, Optional

from . import cegis
from .ir import check_well_sorted
from .parser import format_candidate, parse_pfwcsp

OUTCOME_ORDER = {"solved": 0, "unsat": 1, "timeout": 2, "error": 3}


@dataclass
class BenchRow:
    name: str
    outcome: str           # solved | unsat | timeout | error
    elapsed_s: float
    iterations: int
    params: dict = field(default_factory=dict)
    solution: str = ""
    detail: str = ""
    ref_solved: Optional[bool] = None

    @property
    def agree(self) -> Optional[bool]:
        if self.ref_solved is None:
            return None
        return self.ref_solved == (self.outcome == "solved")


def load_sidecar(path: str) -> dict:
    side = os.path.splitext(path)[0] + ".json"
    if os.path.exists(side):
        with open(side) as fh:
            return json.load(fh)
    return {}


def run_one(path: str, options: dict) -> BenchRow:
    name = os.path.splitext(os.path.basename(path))[0]
    side = load_sidecar(path)
    merged = dict(side)
    merged.update({k: v for k, v in options.items() if v is not None})
    config = cegis.SolveConfig(
        timeout_s=float(merged.get("timeout_s", 600.0)),
        per_query_timeout_ms=int(merged.get("per_query_timeout_ms", 10000)),
        smt_command=merged.get("smt_command"),
        init_params=merged.get("init_params"),
        resolution=bool(merged.get("resolution", True)),
    )
    start = time.monotonic()
    try:
        with open(path) as fh:
            problem = parse_pfwcsp(fh.read())
        errs = check_well_sorted(problem)
        if errs:
            raise ValueError("; ".join(str(e) for e in errs))
        outcome = cegis.solve(problem, config)
    except Exception as e:  # noqa: BLE001 - per-benchmark errors are recorded
        return BenchRow(name, "error", time.monotonic() - start, 0,
                        detail=f"{type(e).__name__}: {e}")
    status = {"solution": "solved", "unsat": "unsat",
              "timeout": "timeout"}[outcome.status]
    solution = format_candidate(outcome.candidate) if outcome.candidate else ""
    return BenchRow(name, status, outcome.elapsed_s, outcome.iterations,
                    params=outcome.params.snapshot() if outcome.params else {},
                    solution=solution, detail=outcome.diagnostics)


def run_bench(directory: str, options: dict, jobs: int = 1,
              ref_file: Optional[str] = None) -> List[BenchRow]:
    files = sorted(
        os.path.join(directory, f) for f in os.listdir(directory)
        if f.endswith(".pfw"))
    rows: List[BenchRow] = []
    if jobs <= 1:
        for path in files:
            rows.append(run_one(path, options))
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futs = {pool.submit(run_one, path, options): path for path in files}
            for fut in as_completed(futs):
                rows.append(fut.result())
        rows.sort(key=lambda r: r.name)
    if ref_file:
        with open(ref_file) as fh:
            ref = json.load(fh)
        for row in rows:
            entry = ref.get(row.name)
            if entry is not None:
                row.ref_solved = bool(entry.get("solved", True))
    return rows


def render_table(rows: List[BenchRow], with_ref: bool) -> str:
    headers = ["Program", "Outcome", "Time (s)", "#Iters"]
    if with_ref:
        headers.append("Agrees w/ reference")
    data = []
    for r in rows:
        line = [r.name, r.outcome, f"{r.elapsed_s:.3f}", str(r.iterations)]
        if with_ref:
            line.append("-" if r.agree is None else ("yes" if r.agree else "NO"))
        data.append(line)
    widths = [max(len(h), *(len(d[i]) for d in data)) if data else len(h)
              for i, h in enumerate(headers)]
    fmt = "  ".join(f"{{:<{w}}}" for w in widths)
    lines = [fmt.format(*headers), fmt.format(*("-" * w for w in widths))]
    lines += [fmt.format(*d) for d in data]
    counts = {}
    for r in rows:
        counts[r.outcome] = counts.get(r.outcome, 0) + 1
    summary = ", ".join(f"{v} {k}" for k, v in sorted(counts.items()))
    lines.append(f"total: {len(rows)} ({summary})" if rows else "total: 0")
    return "\n".join(lines)


def rows_to_json(rows: List[BenchRow]) -> list:
    out = []
    for r in rows:
        d = asdict(r)
        d["agree"] = r.agree
        out.append(d)
    return out


def write_outputs(rows: List[BenchRow], out_dir: str) -> List[str]:
    """CSV + JSON report plus a rendered figure, per the report conventions."""
    os.makedirs(out_dir, exist_ok=True)
    written = []
    csv_path = os.path.join(out_dir, "report.csv")
    with open(csv_path, "w") as fh:
        fh.write("name,outcome,elapsed_s,iterations,agrees_with_reference\n")
        for r in rows:
            agree = "" if r.agree is None else str(r.agree).lower()
            fh.write(f"{r.name},{r.outcome},{r.elapsed_s:.3f},{r.iterations},{agree}\n")
    written.append(csv_path)
    json_path = os.path.join(out_dir, "report.json")
    with open(json_path, "w") as fh:
        json.dump(rows_to_json(rows), fh, indent=2)
    written.append(json_path)
    written.append(render_figure(rows, os.path.join(out_dir, "report.png")))
    return written


def render_figure(rows: List[BenchRow], path: str) -> str:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    ordered = sorted(rows, key=lambda r: (OUTCOME_ORDER.get(r.outcome, 9), r.name))
    names = [r.name for r in ordered]
    times = [max(r.elapsed_s, 1e-3) for r in ordered]
    colors = {"solved": "#2a9d8f", "unsat": "#264653",
              "timeout": "#e76f51", "error": "#9b2226"}
    fig, ax = plt.subplots(figsize=(8, max(2.0, 0.34 * len(rows) + 1.2)))
    ax.barh(range(len(names)), times,
            color=[colors.get(r.outcome, "#888888") for r in ordered])
    ax.set_yticks(range(len(names)))
    ax.set_yticklabels(names, fontsize=8)
    ax.invert_yaxis()
    ax.set_xscale("log")
    ax.set_xlabel("wall-clock time (s, log scale)")
    ax.set_title("solver runs by outcome")
    handles = [plt.Rectangle((0, 0), 1, 1, color=c) for c in colors.values()]
    ax.legend(handles, colors.keys(), fontsize=8, loc="lower right")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path
