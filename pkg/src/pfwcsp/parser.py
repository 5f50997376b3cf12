"""Parsing and printing for the .pfw constraint format and .ts transition systems.

The .pfw grammar (see README) is modeled on clause listings:

    ord Inv(int, bool).            declarations; wf/fn likewise
    P(x), y = 0 :- Q(x, y), x > 0. heads :- body
    top :- Inv(x), x <= 0.         `top` head: trivially satisfied clause
    :- P(0).                       goal clause (empty head)

Undeclared predicates default to kind ord; the prefixes WF_ and FN_ select the
well-founded and functional kinds.  Comments are (* ... *) and nest.  Sort
annotations `x : bool` are per occurrence and unified per (predicate, position);
unannotated variables default to int.

Functional predicate applications may be nested inside body formulas; they are
lifted to top-level body atoms with a fresh output variable, which keeps every
clause in the normal form while preserving meaning (by totality/functionality).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

from .ir import (
    FALSE, TRUE, Add, And, Atom, BoolConst, BoolVar, Clause, FFalse, FTrue,
    Formula, IntConst, Kind, Kinding, Neg, Not, Or, PfwCSP, PredApp,
    PredicateDefinition, PredSig, Scale, Sort, Sub, Term, Var, fand, fnot,
    forr, formula_vars, term_sort,
)


@dataclass(frozen=True)
class SourceSpan:
    start: int
    end: int
    line: int
    column: int


@dataclass(frozen=True)
class ParseMessage:
    span: Optional[SourceSpan]
    message: str

    def __str__(self) -> str:
        if self.span is None:
            return self.message
        return f"{self.span.line}:{self.span.column}: {self.message}"


class ParseError(Exception):
    def __init__(self, errors):
        if isinstance(errors, ParseMessage):
            errors = [errors]
        super().__init__("; ".join(str(e) for e in errors))
        self.errors = list(errors)


# ---------------------------------------------------------------------------
# Tokenizer
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*(?:'[0-9]*)*)
  | (?P<number>[0-9]+)
  | (?P<op>:=|:-|<=|>=|<>|[(),.;:=<>!*+\-])
    """,
    re.VERBOSE,
)

KEYWORDS = {"and", "or", "top", "bot", "true", "false", "ord", "wf", "fn",
            "int", "bool"}


@dataclass(frozen=True)
class Token:
    kind: str  # ident | number | op | keyword | eof
    text: str
    span: SourceSpan


def tokenize(text: str):
    tokens = []
    pos = 0
    line = 1
    line_start = 0
    n = len(text)
    while pos < n:
        # nesting comments
        if text.startswith("(*", pos):
            depth = 1
            j = pos + 2
            while j < n and depth:
                if text.startswith("(*", j):
                    depth += 1
                    j += 2
                elif text.startswith("*)", j):
                    depth -= 1
                    j += 2
                else:
                    if text[j] == "\n":
                        line += 1
                        line_start = j + 1
                    j += 1
            if depth:
                raise ParseError(ParseMessage(
                    SourceSpan(pos, n, line, pos - line_start + 1), "unterminated comment"))
            pos = j
            continue
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(ParseMessage(
                SourceSpan(pos, pos + 1, line, pos - line_start + 1),
                f"unexpected character {text[pos]!r}"))
        if m.lastgroup == "ws":
            chunk = m.group(0)
            line += chunk.count("\n")
            if "\n" in chunk:
                line_start = pos + chunk.rindex("\n") + 1
            pos = m.end(0)
            continue
        span = SourceSpan(pos, m.end(0), line, pos - line_start + 1)
        kind = m.lastgroup
        tok = m.group(0)
        if kind == "ident" and tok in KEYWORDS:
            kind = "keyword"
        tokens.append(Token(kind, tok, span))
        pos = m.end(0)
    tokens.append(Token("eof", "", SourceSpan(n, n, line, n - line_start + 1)))
    return tokens


# ---------------------------------------------------------------------------
# Sort resolution (union-find over variable and argument-position nodes)
# ---------------------------------------------------------------------------

class SortTable:
    """Unifies sorts across clause variables and predicate argument positions."""

    def __init__(self):
        self.parent = {}
        self.sort = {}

    def _find(self, x):
        self.parent.setdefault(x, x)
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b, span=None):
        ra, rb = self._find(a), self._find(b)
        if ra == rb:
            return
        sa, sb = self.sort.get(ra), self.sort.get(rb)
        if sa is not None and sb is not None and sa is not sb:
            raise ParseError(ParseMessage(span, f"sort conflict between {a} and {b}"))
        self.parent[ra] = rb
        if sa is not None:
            self.sort[rb] = sa

    def force(self, a, sort, span=None):
        r = self._find(a)
        prev = self.sort.get(r)
        if prev is not None and prev is not sort:
            raise ParseError(ParseMessage(span, f"sort conflict at {a}"))
        self.sort[r] = sort

    def resolve(self, a) -> Sort:
        return self.sort.get(self._find(a), Sort.INT)


# ---------------------------------------------------------------------------
# Recursive-descent parser core
# ---------------------------------------------------------------------------

class _P:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.i = 0

    # -- token helpers ---------------------------------------------------
    def peek(self, k=0) -> Token:
        return self.tokens[min(self.i + k, len(self.tokens) - 1)]

    def next(self) -> Token:
        t = self.peek()
        self.i += 1
        return t

    def at(self, text: str) -> bool:
        return self.peek().text == text and self.peek().kind in ("op", "keyword")

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.i += 1
            return True
        return False

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.fail(f"expected {text!r}, found {self.peek().text!r}")
        return self.next()

    def fail(self, msg: str):
        raise ParseError(ParseMessage(self.peek().span, msg))

    # -- terms -----------------------------------------------------------
    RELS = ("=", "<>", "<=", "<", ">=", ">")

    def parse_term(self, scope) -> Term:
        t = self.parse_addend(scope)
        while self.peek().text in ("+", "-") and self.peek().kind == "op":
            op = self.next().text
            rhs = self.parse_addend(scope)
            t = Add(t, rhs) if op == "+" else Sub(t, rhs)
        return t

    def parse_addend(self, scope) -> Term:
        t = self.parse_primary(scope)
        while self.at("*"):
            self.next()
            rhs = self.parse_primary(scope)
            if isinstance(t, IntConst):
                t = Scale(t.value, rhs)
            elif isinstance(rhs, IntConst):
                t = Scale(rhs.value, t)
            else:
                self.fail("nonlinear product: one factor must be an integer literal")
        return t

    def parse_primary(self, scope) -> Term:
        tok = self.peek()
        if tok.text == "-" and tok.kind == "op":
            self.next()
            arg = self.parse_primary(scope)
            if isinstance(arg, IntConst):
                return IntConst(-arg.value)
            return Neg(arg)
        if tok.kind == "number":
            self.next()
            return IntConst(int(tok.text))
        if tok.text in ("true", "false"):
            self.next()
            return BoolConst(tok.text == "true")
        if tok.kind == "ident":
            self.next()
            scope.see_var(tok.text, tok.span)
            return Var(tok.text, Sort.INT)  # sort fixed up after resolution
        if tok.text == "(":
            self.next()
            t = self.parse_term(scope)
            self.expect(")")
            return t
        self.fail(f"expected a term, found {tok.text!r}")

    # -- formulas ----------------------------------------------------------
    def parse_formula(self, scope) -> Formula:
        parts = [self.parse_conj(scope)]
        while self.accept("or"):
            parts.append(self.parse_conj(scope))
        return parts[0] if len(parts) == 1 else Or(tuple(parts))

    def parse_conj(self, scope) -> Formula:
        parts = [self.parse_unary(scope)]
        while self.accept("and"):
            parts.append(self.parse_unary(scope))
        return parts[0] if len(parts) == 1 else And(tuple(parts))

    def parse_unary(self, scope) -> Formula:
        if self.accept("!"):
            return Not(self.parse_unary(scope))
        return self.parse_atom(scope)

    def parse_atom(self, scope) -> Formula:
        tok = self.peek()
        if tok.text == "top":
            self.next()
            return TRUE
        if tok.text == "bot":
            self.next()
            return FALSE
        if tok.kind == "ident" and self.peek(1).text == "(":
            return self.parse_predapp(scope)
        if tok.text == "(":
            mark = self.i
            try:
                t = self.parse_term(scope)
                if self.peek().text in self.RELS:
                    return self.finish_comparison(t, scope)
                raise ParseError(ParseMessage(tok.span, "not a comparison"))
            except ParseError:
                self.i = mark
            self.next()
            f = self.parse_formula(scope)
            self.expect(")")
            return f
        t = self.parse_term(scope)
        if self.peek().text in self.RELS:
            return self.finish_comparison(t, scope)
        if isinstance(t, Var):
            scope.force_bool(t.name, tok.span)
            return BoolVar(t.name)
        if isinstance(t, BoolConst):
            return TRUE if t.value else FALSE
        self.fail("expected a comparison or a Boolean variable")

    def finish_comparison(self, lhs: Term, scope) -> Formula:
        rel = self.next().text
        rhs = self.parse_term(scope)
        span = self.peek().span
        for side in (lhs, rhs):
            if isinstance(side, (Add, Sub, Neg, Scale)):
                for v in _term_var_names(side):
                    scope.force_int(v, span)
        if rel not in ("=", "<>"):
            for side in (lhs, rhs):
                if isinstance(side, Var):
                    scope.force_int(side.name, span)
        if isinstance(lhs, Var) and isinstance(rhs, Var):
            scope.same_sort(lhs.name, rhs.name, span)
        for a, b in ((lhs, rhs), (rhs, lhs)):
            if isinstance(a, Var) and isinstance(b, (IntConst, Add, Sub, Neg, Scale)):
                scope.force_int(a.name, span)
            if isinstance(a, Var) and isinstance(b, BoolConst):
                scope.force_bool(a.name, span)
        return Atom(rel, lhs, rhs)

    def parse_predapp(self, scope) -> PredApp:
        name_tok = self.next()
        self.expect("(")
        args = []
        annotated = []
        while True:
            tok = self.peek()
            t = self.parse_term(scope)
            is_bool_ann = False
            if isinstance(t, Var) and self.accept(":"):
                kw = self.next()
                if kw.text == "bool":
                    scope.force_bool(t.name, kw.span)
                    is_bool_ann = True
                elif kw.text == "int":
                    scope.force_int(t.name, kw.span)
                else:
                    self.fail("expected a sort after ':'")
            args.append(t)
            annotated.append(is_bool_ann)
            if not self.accept(","):
                break
        self.expect(")")
        app = PredApp(name_tok.text, tuple(args))
        scope.see_app(app, name_tok.span)
        return app


def _term_var_names(t: Term, acc=None):
    if acc is None:
        acc = []
    if isinstance(t, Var):
        acc.append(t.name)
    elif isinstance(t, Neg):
        _term_var_names(t.arg, acc)
    elif isinstance(t, (Add, Sub)):
        _term_var_names(t.left, acc)
        _term_var_names(t.right, acc)
    elif isinstance(t, Scale):
        _term_var_names(t.arg, acc)
    return acc


class _Scope:
    """Per-clause variable scope wired to the global sort table."""

    def __init__(self, table: SortTable, clause_id: int):
        self.table = table
        self.cid = clause_id
        self.vars = []

    def _v(self, name):
        return ("v", self.cid, name)

    def see_var(self, name, span):
        if name not in self.vars:
            self.vars.append(name)

    def force_bool(self, name, span):
        self.table.force(self._v(name), Sort.BOOL, span)

    def force_int(self, name, span):
        self.table.force(self._v(name), Sort.INT, span)

    def same_sort(self, a, b, span):
        self.table.union(self._v(a), self._v(b), span)

    def see_app(self, app: PredApp, span):
        for i, t in enumerate(app.args):
            node = ("p", app.pred, i)
            if isinstance(t, Var):
                self.table.union(self._v(t.name), node, span)
            elif isinstance(t, BoolConst):
                self.table.force(node, Sort.BOOL, span)
            else:
                self.table.force(node, Sort.INT, span)
                for v in _term_var_names(t):
                    self.table.force(self._v(v), Sort.INT, span)

    def sort_of(self, name) -> Sort:
        return self.table.resolve(self._v(name))


def _resort_term(t: Term, scope: _Scope) -> Term:
    if isinstance(t, Var):
        return Var(t.name, scope.sort_of(t.name))
    if isinstance(t, Neg):
        return Neg(_resort_term(t.arg, scope))
    if isinstance(t, (Add, Sub)):
        return type(t)(_resort_term(t.left, scope), _resort_term(t.right, scope))
    if isinstance(t, Scale):
        return Scale(t.coeff, _resort_term(t.arg, scope))
    return t


def _resort_formula(f: Formula, scope: _Scope) -> Formula:
    if isinstance(f, PredApp):
        return PredApp(f.pred, tuple(_resort_term(t, scope) for t in f.args))
    if isinstance(f, Atom):
        lhs, rhs = _resort_term(f.lhs, scope), _resort_term(f.rhs, scope)
        if term_sort(lhs) is Sort.BOOL and isinstance(rhs, Var):
            rhs = Var(rhs.name, Sort.BOOL)
        if isinstance(lhs, Var) and term_sort(rhs) is Sort.BOOL:
            lhs = Var(lhs.name, Sort.BOOL)
        return Atom(f.rel, lhs, rhs)
    if isinstance(f, Not):
        return Not(_resort_formula(f.arg, scope))
    if isinstance(f, And):
        return And(tuple(_resort_formula(a, scope) for a in f.args))
    if isinstance(f, Or):
        return Or(tuple(_resort_formula(a, scope) for a in f.args))
    return f


# ---------------------------------------------------------------------------
# .pfw problems
# ---------------------------------------------------------------------------

def default_kind(name: str) -> Kind:
    if name.startswith("WF_"):
        return Kind.WF
    if name.startswith("FN_"):
        return Kind.FN
    return Kind.ORD


@dataclass
class _RawClause:
    heads: list
    body: list
    scope: _Scope


def parse_pfwcsp(text: str, base_kinding: Optional[Kinding] = None,
                 allow_empty: bool = False) -> PfwCSP:
    p = _P(text)
    table = SortTable()
    declared = {}  # name -> (Kind, [Sort] or None)
    if base_kinding:
        for name, sig in base_kinding.items():
            declared[name] = (sig.kind, list(sig.sig))
            for i, s in enumerate(sig.sig):
                table.force(("p", name, i), s)

    # declarations
    while p.peek().text in ("ord", "wf", "fn"):
        kw = p.next()
        kind = Kind(kw.text)
        name_tok = p.next()
        if name_tok.kind != "ident":
            p.fail("expected a predicate name")
        if default_kind(name_tok.text) is not Kind.ORD and default_kind(name_tok.text) is not kind:
            raise ParseError(ParseMessage(
                name_tok.span,
                f"kind-conflict: declaration {kw.text} contradicts the "
                f"{name_tok.text.split('_')[0]}_ prefix default"))
        p.expect("(")
        sorts = []
        if not p.at(")"):
            while True:
                st = p.next()
                if st.text not in ("int", "bool"):
                    p.fail("expected a sort (int or bool)")
                sorts.append(Sort.INT if st.text == "int" else Sort.BOOL)
                if not p.accept(","):
                    break
        p.expect(")")
        p.expect(".")
        declared[name_tok.text] = (kind, sorts)
        for i, s in enumerate(sorts):
            table.force(("p", name_tok.text, i), s)

    # clauses
    raw = []
    cid = 0
    while p.peek().kind != "eof":
        scope = _Scope(table, cid)
        heads = []
        if p.accept(":-"):
            pass  # empty head
        else:
            while True:
                heads.append(p.parse_formula(scope))
                if not p.accept(","):
                    break
            if p.accept(":-"):
                pass
            else:
                p.expect(".")
                raw.append(_RawClause(heads, [], scope))
                cid += 1
                continue
        body = []
        while True:
            body.append(p.parse_formula(scope))
            if not p.accept(","):
                break
        p.expect(".")
        raw.append(_RawClause(heads, body, scope))
        cid += 1

    if not raw and not allow_empty:
        raise ParseError(ParseMessage(p.peek().span, "at least one clause required"))

    kind_of = lambda name: declared.get(name, (default_kind(name), None))[0]

    clauses = []
    arities = {}
    errors = []
    for rc in raw:
        try:
            clauses.append(_build_clause(rc, kind_of, arities))
        except ParseError as e:
            errors.extend(e.errors)
    if errors:
        raise ParseError(errors)

    kinding = Kinding()
    order = []
    for c in clauses:
        for a in c.pos + c.neg:
            if a.pred not in order:
                order.append(a.pred)
    for name in list(declared) + [n for n in order if n not in declared]:
        if name not in arities and name in declared and declared[name][1] is not None:
            arities[name] = len(declared[name][1])
        if name not in arities:
            continue
        n = arities[name]
        sig = tuple(SortTable.resolve(table, ("p", name, i)) for i in range(n))
        kinding[name] = PredSig(kind_of(name), sig)
    return PfwCSP(clauses, kinding)


def _build_clause(rc: _RawClause, kind_of, arities) -> Clause:
    pos = []
    neg = []
    theory_parts = []
    fresh_n = [0]

    def check_arity(app: PredApp):
        prev = arities.get(app.pred)
        if prev is None:
            arities[app.pred] = len(app.args)
        elif prev != len(app.args):
            raise ParseError(ParseMessage(
                None, f"{app.pred} used with arities {prev} and {len(app.args)}"))

    def lift(f: Formula, positive_in_body: bool) -> Formula:
        """Replace nested FN applications by equations against fresh outputs."""
        if isinstance(f, PredApp):
            check_arity(f)
            if kind_of(f.pred) is not Kind.FN:
                raise ParseError(ParseMessage(
                    None, f"{f.pred} must occur as a top-level literal "
                          f"(only functional predicates may be nested)"))
            if not positive_in_body:
                raise ParseError(ParseMessage(
                    None, f"nested occurrence of {f.pred} under negation is not supported"))
            fresh_n[0] += 1
            out = Var(f"v_{f.pred}_{fresh_n[0]}", term_sort(f.args[-1]))
            neg.append(PredApp(f.pred, f.args[:-1] + (out,)))
            return Atom("=", f.args[-1], out)
        if isinstance(f, Not):
            return Not(lift(f.arg, not positive_in_body))
        if isinstance(f, And):
            return And(tuple(lift(a, positive_in_body) for a in f.args))
        if isinstance(f, Or):
            return Or(tuple(lift(a, positive_in_body) for a in f.args))
        return f

    pres_heads = []
    pres_body = []
    for h in rc.heads:
        h = _resort_formula(h, rc.scope)
        if isinstance(h, PredApp):
            check_arity(h)
            pos.append(h)
        else:
            if _has_predapp(h):
                raise ParseError(ParseMessage(
                    None, "predicate applications may not be nested in head formulas"))
            theory_parts.append(h)
            pres_heads.append(h)
    for b in rc.body:
        b = _resort_formula(b, rc.scope)
        if isinstance(b, PredApp):
            check_arity(b)
            neg.append(b)
        elif isinstance(b, Not) and isinstance(b.arg, PredApp):
            check_arity(b.arg)
            pos.append(b.arg)
        else:
            lifted = lift(b, True)
            theory_parts.append(fnot(lifted))
            pres_body.append(lifted)
    return Clause(forr(theory_parts), tuple(pos), tuple(neg),
                  tuple(pres_heads), tuple(pres_body))


def _has_predapp(f: Formula) -> bool:
    if isinstance(f, PredApp):
        return True
    if isinstance(f, Not):
        return _has_predapp(f.arg)
    if isinstance(f, (And, Or)):
        return any(_has_predapp(a) for a in f.args)
    return False


# ---------------------------------------------------------------------------
# Standalone formulas / solutions
# ---------------------------------------------------------------------------

def parse_formula_text(text: str, bool_vars=(), pred_hook=None) -> Formula:
    """Parses a single formula (used for --pre/--post expressions).

    bool_vars forces the given variable names to the Boolean sort.
    """
    p = _P(text)
    table = SortTable()
    scope = _Scope(table, 0)
    for name in bool_vars:
        scope.force_bool(name, None)
    f = p.parse_formula(scope)
    if p.peek().kind != "eof":
        p.fail(f"unexpected trailing input {p.peek().text!r}")
    return _resort_formula(f, scope)


def parse_solution(text: str) -> dict:
    """Parses `Name(params) := formula.` definitions into a Candidate."""
    p = _P(text)
    table = SortTable()
    out = {}
    cid = 0
    while p.peek().kind != "eof":
        scope = _Scope(table, cid)
        name_tok = p.next()
        if name_tok.kind != "ident":
            p.fail("expected a predicate name")
        p.expect("(")
        params = []
        while True:
            v = p.next()
            if v.kind != "ident":
                p.fail("expected a parameter name")
            scope.see_var(v.text, v.span)
            if p.accept(":"):
                st = p.next()
                if st.text == "bool":
                    scope.force_bool(v.text, st.span)
                elif st.text == "int":
                    scope.force_int(v.text, st.span)
                else:
                    p.fail("expected a sort")
            params.append(v.text)
            if not p.accept(","):
                break
        p.expect(")")
        p.expect(":=")
        body = p.parse_formula(scope)
        p.expect(".")
        body = _resort_formula(body, scope)
        free = formula_vars(body)
        extra = [v for v in free if v not in params]
        if extra:
            raise ParseError(ParseMessage(
                name_tok.span, f"definition of {name_tok.text} is not closed: {extra}"))
        ps = tuple((v, scope.sort_of(v)) for v in params)
        out[name_tok.text] = PredicateDefinition(ps, body)
        cid += 1
    if not out:
        raise ParseError(ParseMessage(None, "no definitions found"))
    return out


# ---------------------------------------------------------------------------
# Transition systems (.ts)
# ---------------------------------------------------------------------------

@dataclass
class RawTransitionSystem:
    name: str = "sys"
    vars: list = field(default_factory=list)     # [(name, Sort)]
    inputs: Optional[list] = None
    outputs: Optional[list] = None
    ranked: Optional[list] = None
    trans: Optional[Formula] = None
    final: Optional[Formula] = None
    choice_var: Optional[tuple] = None           # (name, Sort)
    choice_trans: Optional[Formula] = None
    branches: Optional[int] = None
    branch_trans: Optional[Formula] = None
    diverging: Optional[Formula] = None
    diverging_branches: Optional[int] = None


_TS_SECTIONS = ("vars", "inputs", "outputs", "ranked", "trans", "final",
                "choice_trans", "branches", "diverging", "name")


def parse_transition_system(text: str) -> RawTransitionSystem:
    p = _P(text)
    table = SortTable()
    ts = RawTransitionSystem()
    seen_sections = set()
    scope = _Scope(table, 0)

    def end():
        p.expect(";")

    while p.peek().kind != "eof":
        tok = p.next()
        section = tok.text
        if section not in _TS_SECTIONS:
            raise ParseError(ParseMessage(tok.span, f"unknown section {section!r}"))
        if section in seen_sections:
            raise ParseError(ParseMessage(tok.span, f"duplicate section {section!r}"))
        seen_sections.add(section)
        if section == "name":
            ts.name = p.next().text
            end()
        elif section == "vars":
            while True:
                v = p.next()
                if v.kind != "ident":
                    p.fail("expected a variable name")
                sort = Sort.INT
                if p.accept(":"):
                    st = p.next()
                    sort = Sort.BOOL if st.text == "bool" else Sort.INT
                ts.vars.append((v.text, sort))
                if not p.accept(","):
                    break
            end()
        elif section in ("inputs", "outputs", "ranked"):
            names = []
            while True:
                v = p.next()
                names.append(v.text)
                if not p.accept(","):
                    break
            setattr(ts, section, names)
            end()
        elif section == "choice_trans":
            v = p.next()
            sort = Sort.INT
            if p.at(":") and p.peek(1).text in ("int", "bool"):
                p.next()
                sort = Sort.BOOL if p.next().text == "bool" else Sort.INT
            ts.choice_var = (v.text, sort)
            p.expect(":")
            ts.choice_trans = p.parse_formula(scope)
            end()
        elif section == "branches":
            num = p.next()
            if num.kind != "number":
                p.fail("expected the number of branches")
            ts.branches = int(num.text)
            p.expect(":")
            ts.branch_trans = p.parse_formula(scope)
            end()
        elif section == "diverging":
            if p.peek().kind == "number":
                ts.diverging_branches = int(p.next().text)
                p.expect(":")
            ts.diverging = p.parse_formula(scope)
            end()
        else:  # trans | final
            setattr(ts, section, p.parse_formula(scope))
            end()

    if ts.trans is None:
        raise ParseError(ParseMessage(None, "missing `trans` section"))
    if ts.final is None:
        raise ParseError(ParseMessage(None, "missing `final` section"))
    if not ts.vars:
        raise ParseError(ParseMessage(None, "missing `vars` section"))

    # declared sorts, applied to primed/branch-indexed occurrences as well
    base = {}
    for name, sort in ts.vars:
        base[name] = sort
        scope.force_bool(name, None) if sort is Sort.BOOL else scope.force_int(name, None)
    if ts.choice_var:
        name, sort = ts.choice_var
        scope.force_bool(name, None) if sort is Sort.BOOL else scope.force_int(name, None)
        base[name] = sort
    declared_names = set(base)

    def base_of(name: str) -> str:
        return re.match(r"[A-Za-z_][A-Za-z0-9_]*", name).group(0)

    all_vars = set()
    for f in (ts.trans, ts.final, ts.choice_trans, ts.branch_trans, ts.diverging):
        if f is not None:
            all_vars |= set(formula_vars(f))
    errors = []
    for v in sorted(all_vars):
        b = base_of(v)
        if b not in declared_names:
            errors.append(ParseMessage(None, f"undeclared variable {v}"))
            continue
        if base[b] is Sort.BOOL:
            scope.force_bool(v, None)
        else:
            scope.force_int(v, None)
    if errors:
        raise ParseError(errors)

    for fname in ("trans", "final", "choice_trans", "branch_trans", "diverging"):
        f = getattr(ts, fname)
        if f is not None:
            setattr(ts, fname, _resort_formula(f, scope))

    for names, label in ((ts.inputs, "inputs"), (ts.outputs, "outputs"),
                         (ts.ranked, "ranked")):
        if names:
            for v in names:
                if v not in declared_names:
                    raise ParseError(ParseMessage(None, f"{label}: undeclared variable {v}"))

    fv_final = set(formula_vars(ts.final))
    bad = [v for v in fv_final if v not in declared_names]
    if bad:
        raise ParseError(ParseMessage(None, f"`final` uses primed variables: {bad}"))
    return ts


# ---------------------------------------------------------------------------
# Printing
# ---------------------------------------------------------------------------

def format_term(t: Term, prec: int = 0) -> str:
    if isinstance(t, Var):
        return t.name
    if isinstance(t, IntConst):
        return str(t.value) if t.value >= 0 or prec == 0 else f"({t.value})"
    if isinstance(t, BoolConst):
        return "true" if t.value else "false"
    if isinstance(t, Neg):
        s = f"-{format_term(t.arg, 2)}"
        return f"({s})" if prec >= 2 else s
    if isinstance(t, (Add, Sub)):
        op = "+" if isinstance(t, Add) else "-"
        s = f"{format_term(t.left, 1)} {op} {format_term(t.right, 2)}"
        return f"({s})" if prec >= 2 else s
    if isinstance(t, Scale):
        return f"{t.coeff if t.coeff >= 0 else f'({t.coeff})'}*{format_term(t.arg, 2)}"
    if isinstance(t, Mul):
        return f"{format_term(t.left, 2)}*{format_term(t.right, 2)}"
    raise TypeError(t)


def format_predapp(a: PredApp, annotate: bool = True) -> str:
    parts = []
    for t in a.args:
        s = format_term(t)
        if annotate and isinstance(t, Var) and t.sort is Sort.BOOL:
            s += " : bool"
        parts.append(s)
    return f"{a.pred}({', '.join(parts)})"


def format_formula(f: Formula, prec: int = 0) -> str:
    if isinstance(f, FTrue):
        return "top"
    if isinstance(f, FFalse):
        return "bot"
    if isinstance(f, BoolVar):
        return f.name
    if isinstance(f, Atom):
        return f"{format_term(f.lhs, 1)} {f.rel} {format_term(f.rhs, 1)}"
    if isinstance(f, PredApp):
        return format_predapp(f)
    if isinstance(f, Not):
        arg = f.arg
        if isinstance(arg, (BoolVar, PredApp, FTrue, FFalse)):
            return f"!{format_formula(arg, 3)}"
        return f"!({format_formula(arg, 0)})"
    if isinstance(f, And):
        s = " and ".join(format_formula(a, 2) for a in f.args)
        return f"({s})" if prec >= 2 else s
    if isinstance(f, Or):
        s = " or ".join(format_formula(a, 1) for a in f.args)
        return f"({s})" if prec >= 1 else s
    raise TypeError(f)


def _fmt_part(f: Formula) -> str:
    # comma separates heads/body literals, so a top-level `or` needs no parens
    return format_formula(f)


def format_clause(c: Clause) -> str:
    heads = [format_predapp(a) for a in c.pos]
    body = [format_predapp(a) for a in c.neg]
    if c.pres_heads is not None and c.pres_body is not None:
        heads += [_fmt_part(h) for h in c.pres_heads if not isinstance(h, FTrue)]
        body += [_fmt_part(b) for b in c.pres_body if not isinstance(b, FTrue)]
        if any(isinstance(h, FTrue) for h in c.pres_heads) or \
                (not heads and isinstance(c.theory, FTrue)):
            heads.insert(0, "top")
    else:
        th = c.theory
        if isinstance(th, FTrue):
            heads.insert(0, "top")
            disjuncts = []
        elif isinstance(th, Or):
            disjuncts = list(th.args)
        elif isinstance(th, FFalse):
            disjuncts = []
        else:
            disjuncts = [th]
        for d in disjuncts:
            if isinstance(d, Not):
                body.append(_fmt_part(d.arg))
            else:
                heads.append(_fmt_part(d))
    if not heads:
        heads = ["bot"]
    head_s = ", ".join(heads)
    if body:
        return f"{head_s} :- {', '.join(body)}."
    return f"{head_s}."


def print_pfwcsp(problem: PfwCSP) -> str:
    lines = []
    for name, sig in problem.kinding.items():
        sorts = ", ".join(s.value for s in sig.sig)
        lines.append(f"{sig.kind.value} {name}({sorts}).")
    if lines:
        lines.append("")
    for c in problem.clauses:
        lines.append(format_clause(c))
    return "\n".join(lines) + "\n"


def format_candidate(cand: dict) -> str:
    lines = []
    for name, d in cand.items():
        params = ", ".join(
            f"{n} : bool" if s is Sort.BOOL else n for n, s in d.params)
        lines.append(f"{name}({params}) := {format_formula(d.body)}.")
    return "\n".join(lines) + "\n"
