"""Sessions with an SMT solver process over SMT-LIB2 stdio.

One session holds one long-lived solver process; queries are framed with
push/pop.  At most one query is outstanding at a time.  A query that exceeds
its wall-clock deadline kills the process and reports unknown; the session
respawns on the next use (all state needed to rebuild a query lives with the
caller).

The solver command comes from, in order: an explicit argument, the
PFW_SMT_SOLVER environment variable, the bundled reference solver
(`python -m pfwcsp.smt.server`).
"""

from __future__ import annotations

import os
import select
import shlex
import subprocess
import sys
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from ..ir import Formula, Sort, Value, eval_formula, formula_vars
from .lower import declare_const, lower_formula, smt_symbol
from .sexpr import complete_prefix, parse_all

ENV_SOLVER = "PFW_SMT_SOLVER"


def default_solver_command(explicit: Optional[str] = None) -> List[str]:
    if explicit:
        return shlex.split(explicit)
    env = os.environ.get(ENV_SOLVER)
    if env:
        return shlex.split(env)
    return [sys.executable, "-m", "pfwcsp.smt.server"]


class SolverError(Exception):
    """Solver crashed or broke protocol."""


@dataclass
class SmtResult:
    status: str  # sat | unsat | unknown
    model: Optional[Dict[str, Value]] = None
    core: Optional[set] = None
    reason: str = ""
    defaulted: tuple = ()

    @property
    def is_sat(self) -> bool:
        return self.status == "sat"

    @property
    def is_unsat(self) -> bool:
        return self.status == "unsat"


class SmtSession:
    def __init__(self, command: Optional[str] = None, logic: str = "ALL",
                 timeout_ms: int = 10000, verify_models: bool = True):
        self.command = default_solver_command(command)
        self.logic = logic
        self.timeout_ms = timeout_ms
        self.verify_models = verify_models
        self.proc: Optional[subprocess.Popen] = None
        self._buf = b""
        self.queries = 0

    # -- process management ----------------------------------------------
    def _spawn(self):
        try:
            self.proc = subprocess.Popen(
                self.command, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                stderr=subprocess.DEVNULL)
        except OSError as e:
            raise SolverError(f"cannot start solver {self.command}: {e}")
        self._buf = b""
        self._send("(set-option :produce-models true)")
        self._send("(set-option :produce-unsat-cores true)")
        self._send(f"(set-logic {self.logic})")

    def _ensure(self):
        if self.proc is None or self.proc.poll() is not None:
            self._kill()
            self._spawn()

    def _kill(self):
        if self.proc is not None:
            try:
                self.proc.kill()
                self.proc.wait(timeout=5)
            except Exception:
                pass
        self.proc = None
        self._buf = b""

    def close(self):
        if self.proc is not None and self.proc.poll() is None:
            try:
                self.proc.stdin.write(b"(exit)\n")
                self.proc.stdin.flush()
            except Exception:
                pass
        self._kill()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    # -- wire I/O -----------------------------------------------------------
    def _send(self, line: str):
        try:
            self.proc.stdin.write(line.encode() + b"\n")
            self.proc.stdin.flush()
        except (BrokenPipeError, OSError) as e:
            raise SolverError(f"solver-crashed: {e}")

    def _read_sexpr(self, deadline: float) -> str:
        while True:
            text = self._buf.decode(errors="replace")
            stripped = text.lstrip()
            off = len(text) - len(stripped)
            end = complete_prefix(stripped)
            if end is not None:
                self._buf = self._buf[off + end:]
                return stripped[:end]
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise TimeoutError()
            fd = self.proc.stdout.fileno()
            ready, _, _ = select.select([fd], [], [], min(remaining, 0.5))
            if not ready:
                if self.proc.poll() is not None:
                    raise SolverError("solver-crashed: process exited")
                continue
            data = os.read(fd, 65536)
            if not data:
                raise SolverError("solver-crashed: closed stdout")
            self._buf += data

    # -- queries ---------------------------------------------------------------
    def check(self, assertions: Sequence[Tuple[str, Formula]],
              need_model: bool = False, need_core: bool = False,
              timeout_ms: Optional[int] = None) -> SmtResult:
        """Check satisfiability of the labeled, predicate-free assertions."""
        self._ensure()
        self.queries += 1
        budget = (timeout_ms if timeout_ms is not None else self.timeout_ms) / 1000.0
        deadline = time.monotonic() + budget
        decls: Dict[str, Sort] = {}
        for _, f in assertions:
            formula_vars(f, decls)
        try:
            self._send("(push 1)")
            for name, sort in decls.items():
                self._send(declare_const(name, sort))
            for label, f in assertions:
                self._send(f"(assert (! {lower_formula(f)} :named {smt_symbol(label)}))")
            self._send("(check-sat)")
            answer = self._read_sexpr(deadline).strip()
            if answer not in ("sat", "unsat", "unknown"):
                raise SolverError(f"protocol-error: unexpected answer {answer!r}")
            if answer == "sat" and need_model:
                self._send("(get-model)")
                model_text = self._read_sexpr(deadline)
                model, defaulted = self._parse_model(model_text, decls)
                if self.verify_models:
                    self._verify(assertions, model)
                self._send("(pop 1)")
                return SmtResult("sat", model=model, defaulted=tuple(defaulted))
            if answer == "unsat" and need_core:
                self._send("(get-unsat-core)")
                core_text = self._read_sexpr(deadline)
                core = self._parse_core(core_text)
                self._send("(pop 1)")
                return SmtResult("unsat", core=core)
            self._send("(pop 1)")
            if answer == "unknown":
                return SmtResult("unknown", reason="solver returned unknown")
            return SmtResult(answer)
        except TimeoutError:
            self._kill()
            return SmtResult("unknown", reason=f"timeout after {budget:.1f}s")
        except SolverError:
            self._kill()
            raise

    def _parse_model(self, text: str, decls: Dict[str, Sort]):
        try:
            exprs = parse_all(text)
        except ValueError as e:
            raise SolverError(f"protocol-error: bad model: {e}")
        model: Dict[str, Value] = {}
        items = exprs[0] if exprs and isinstance(exprs[0], list) else []
        if items and items[0] == "model":  # older solvers print (model ...)
            items = items[1:]
        for item in items:
            if not (isinstance(item, list) and len(item) >= 5 and item[0] == "define-fun"):
                continue
            name, args, sort, value = item[1], item[2], item[3], item[4]
            if args != []:
                continue
            if sort == "Int":
                model[name] = self._int_value(value)
            elif sort == "Bool":
                model[name] = value == "true"
        defaulted = []
        for name, sort in decls.items():
            if name not in model:
                model[name] = False if sort is Sort.BOOL else 0
                defaulted.append(name)
        return model, defaulted

    @staticmethod
    def _int_value(value) -> int:
        if isinstance(value, int):
            return value
        if isinstance(value, list) and len(value) == 2 and value[0] == "-":
            inner = value[1]
            if isinstance(inner, int):
                return -inner
        raise SolverError(f"protocol-error: non-integer model value {value!r} "
                          f"(rationals are rejected)")

    @staticmethod
    def _parse_core(text: str) -> set:
        try:
            exprs = parse_all(text)
        except ValueError as e:
            raise SolverError(f"protocol-error: bad core: {e}")
        if not exprs or not isinstance(exprs[0], list):
            raise SolverError(f"protocol-error: bad core: {text!r}")
        return {str(x) for x in exprs[0]}

    def _verify(self, assertions, model):
        for label, f in assertions:
            try:
                ok = eval_formula(f, model)
            except Exception as e:
                raise SolverError(f"protocol-error: cannot evaluate model: {e}")
            if not ok:
                raise SolverError(
                    f"protocol-error: model does not satisfy assertion {label}")
