"""Reference SMT-LIB2 solver process for quantifier-free linear integers + Booleans.

Speaks the subset of SMT-LIB2 v2.6 that the session layer emits: set-option,
set-logic, declare-const / 0-ary declare-fun, assert with optional :named
annotations, push/pop, check-sat, get-model, get-unsat-core, reset, echo, exit.
Runs as `python -m pfwcsp.smt.server`; any compliant external solver can be
used instead via configuration.
"""

from __future__ import annotations

import sys
from typing import List, Optional

from .. import lia
from ..ir import (
    Add, And, Atom, BoolConst, BoolVar, FALSE, TRUE, Formula, IntConst, Neg,
    Not, Or, Scale, Sort, Sub, Term, Var,
)
from .lower import smt_symbol
from .sexpr import complete_prefix, parse_all


class SmtError(Exception):
    pass


class Frame:
    def __init__(self):
        self.decls = {}      # name -> Sort
        self.assertions = []  # (label, Formula)


class Server:
    def __init__(self, out):
        self.out = out
        self.frames: List[Frame] = [Frame()]
        self.options = {}
        self.last = None  # lia.LiaResult
        self.auto_label = 0

    # -- declarations -------------------------------------------------------
    def sort_of(self, name: str) -> Optional[Sort]:
        for fr in reversed(self.frames):
            if name in fr.decls:
                return fr.decls[name]
        return None

    def all_decls(self):
        out = {}
        for fr in self.frames:
            out.update(fr.decls)
        return out

    # -- translation ----------------------------------------------------------
    def to_term(self, e) -> Term:
        if isinstance(e, int):
            return IntConst(e)
        if isinstance(e, str):
            if e == "true":
                return BoolConst(True)
            if e == "false":
                return BoolConst(False)
            sort = self.sort_of(e)
            if sort is None:
                raise SmtError(f"unknown constant {e}")
            return Var(e, sort)
        if isinstance(e, list) and e:
            op = e[0]
            args = e[1:]
            if op == "-":
                if len(args) == 1:
                    t = self.to_term(args[0])
                    if isinstance(t, IntConst):
                        return IntConst(-t.value)
                    return Neg(t)
                t = self.to_term(args[0])
                for a in args[1:]:
                    t = Sub(t, self.to_term(a))
                return t
            if op == "+":
                t = self.to_term(args[0])
                for a in args[1:]:
                    t = Add(t, self.to_term(a))
                return t
            if op == "*":
                if len(args) != 2:
                    raise SmtError("only binary products are supported")
                a, b = self.to_term(args[0]), self.to_term(args[1])
                if isinstance(a, IntConst):
                    return Scale(a.value, b)
                if isinstance(b, IntConst):
                    return Scale(b.value, a)
                raise SmtError("nonlinear product")
        raise SmtError(f"cannot read term {e!r}")

    def to_formula(self, e) -> Formula:
        if isinstance(e, str):
            if e == "true":
                return TRUE
            if e == "false":
                return FALSE
            sort = self.sort_of(e)
            if sort is Sort.BOOL:
                return BoolVar(e)
            raise SmtError(f"unknown Boolean constant {e}")
        if not isinstance(e, list) or not e:
            raise SmtError(f"cannot read formula {e!r}")
        op = e[0]
        args = e[1:]
        if op == "not":
            return Not(self.to_formula(args[0]))
        if op == "and":
            return And(tuple(self.to_formula(a) for a in args)) if args else TRUE
        if op == "or":
            return Or(tuple(self.to_formula(a) for a in args)) if args else FALSE
        if op == "=>":
            f = self.to_formula(args[-1])
            for a in reversed(args[:-1]):
                f = Or((Not(self.to_formula(a)), f))
            return f
        if op in ("<=", "<", ">=", ">"):
            return Atom(op, self.to_term(args[0]), self.to_term(args[1]))
        if op == "=":
            if self._is_bool(args[0]) or self._is_bool(args[1]):
                a, b = self.to_formula(args[0]), self.to_formula(args[1])
                return Or((And((a, b)), And((Not(a), Not(b)))))
            return Atom("=", self.to_term(args[0]), self.to_term(args[1]))
        if op == "distinct":
            return Not(self.to_formula(["="] + args))
        if op == "!":
            return self.to_formula(args[0])
        raise SmtError(f"unsupported operator {op!r}")

    def _is_bool(self, e) -> bool:
        if isinstance(e, int):
            return False
        if isinstance(e, str):
            return e in ("true", "false") or self.sort_of(e) is Sort.BOOL
        if isinstance(e, list) and e:
            return e[0] in ("not", "and", "or", "=>", "=", "<=", "<", ">=", ">",
                            "distinct")
        return False

    # -- commands ---------------------------------------------------------------
    def execute(self, e) -> None:
        if not isinstance(e, list) or not e:
            raise SmtError(f"bad command {e!r}")
        cmd = e[0]
        if cmd in ("set-option", "set-info", "set-logic"):
            if cmd == "set-option" and len(e) >= 3:
                self.options[e[1]] = e[2]
            return
        if cmd in ("declare-const", "declare-fun"):
            name = e[1]
            if cmd == "declare-fun":
                if e[2] != []:
                    raise SmtError("only 0-ary declare-fun is supported")
                sort_name = e[3]
            else:
                sort_name = e[2]
            if sort_name not in ("Int", "Bool"):
                raise SmtError(f"unsupported sort {sort_name}")
            self.frames[-1].decls[name] = Sort.BOOL if sort_name == "Bool" else Sort.INT
            return
        if cmd == "assert":
            body = e[1]
            label = None
            if isinstance(body, list) and body and body[0] == "!":
                rest = body[2:]
                for i in range(0, len(rest) - 1, 2):
                    if rest[i] == ":named":
                        label = rest[i + 1]
                body = body[1]
            if label is None:
                self.auto_label += 1
                label = f"a!{self.auto_label}"
            self.frames[-1].assertions.append((label, self.to_formula(body)))
            self.last = None
            return
        if cmd == "push":
            n = e[1] if len(e) > 1 else 1
            for _ in range(n):
                self.frames.append(Frame())
            return
        if cmd == "pop":
            n = e[1] if len(e) > 1 else 1
            for _ in range(n):
                if len(self.frames) == 1:
                    raise SmtError("pop on empty stack")
                self.frames.pop()
            self.last = None
            return
        if cmd == "check-sat":
            assertions = [a for fr in self.frames for a in fr.assertions]
            need_core = self.options.get(":produce-unsat-cores") == "true"
            try:
                self.last = lia.solve_formulas(
                    assertions, need_model=True, need_core=need_core)
            except lia.Unknown as ex:
                self.last = lia.LiaResult("unknown", reason=str(ex))
            self.reply(self.last.status)
            return
        if cmd == "get-model":
            if self.last is None or self.last.status != "sat":
                raise SmtError("no model available")
            model = self.last.model or {}
            parts = []
            for name, sort in self.all_decls().items():
                if sort is Sort.BOOL:
                    v = "true" if model.get(name, False) else "false"
                    parts.append(f"  (define-fun {smt_symbol(name)} () Bool {v})")
                else:
                    x = model.get(name, 0)
                    sv = str(x) if x >= 0 else f"(- {-x})"
                    parts.append(f"  (define-fun {smt_symbol(name)} () Int {sv})")
            self.reply("(\n" + "\n".join(parts) + "\n)")
            return
        if cmd == "get-unsat-core":
            if self.last is None or self.last.status != "unsat":
                raise SmtError("no unsat core available")
            core = self.last.core or []
            self.reply("(" + " ".join(smt_symbol(c) for c in core) + ")")
            return
        if cmd == "reset":
            self.frames = [Frame()]
            self.options = {}
            self.last = None
            return
        if cmd == "echo":
            s = e[1]
            self.reply(s[1:] if isinstance(s, str) and s.startswith('"') else str(s))
            return
        if cmd == "exit":
            raise SystemExit(0)
        raise SmtError(f"unsupported command {cmd!r}")

    def reply(self, text: str) -> None:
        self.out.write(text + "\n")
        self.out.flush()


def main() -> int:
    server = Server(sys.stdout)
    buf = ""
    stdin = sys.stdin
    while True:
        while True:
            try:
                end = complete_prefix(buf)
            except ValueError as ex:
                server.reply(f'(error "{ex}")')
                buf = ""
                break
            if end is None:
                break
            chunk, buf = buf[:end], buf[end:]
            try:
                exprs = parse_all(chunk)
                for e in exprs:
                    server.execute(e)
            except SystemExit:
                return 0
            except SmtError as ex:
                server.reply(f'(error "{ex}")')
            except Exception as ex:  # noqa: BLE001 - protocol surface
                server.reply(f'(error "internal: {type(ex).__name__}: {ex}")')
        data = stdin.readline()
        if not data:
            return 0
        buf += data


if __name__ == "__main__":
    sys.exit(main())
