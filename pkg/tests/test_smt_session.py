import sys

import pytest

from pfwcsp.ir import Add, Atom, BoolVar, IntConst, Or, Sort, Var
from pfwcsp.smt import SmtSession, SolverError, default_solver_command


def test_default_command_env_override(monkeypatch):
    monkeypatch.setenv("PFW_SMT_SOLVER", "z3 -in")
    assert default_solver_command() == ["z3", "-in"]
    monkeypatch.delenv("PFW_SMT_SOLVER")
    cmd = default_solver_command()
    assert cmd[0] == sys.executable and cmd[-1] == "pfwcsp.smt.server"


def test_sat_with_model_and_quoted_symbols():
    with SmtSession() as s:
        r = s.check([("a", Atom("=", Var("x1'"), IntConst(-7)))], need_model=True)
        assert r.status == "sat" and r.model == {"x1'": -7}


def test_unsat_core_minimized():
    x, y = Var("x"), Var("y")
    with SmtSession() as s:
        r = s.check([("a", Atom(">=", x, IntConst(1))),
                     ("b", Atom("<=", x, IntConst(0))),
                     ("c", Atom("=", y, IntConst(5)))], need_core=True)
        assert r.status == "unsat" and r.core == {"a", "b"}


def test_push_pop_isolation():
    x = Var("x")
    with SmtSession() as s:
        r1 = s.check([("a", Atom(">=", x, IntConst(1)))], need_model=True)
        r2 = s.check([("b", Atom("<=", x, IntConst(0)))], need_model=True)
        assert r1.status == "sat" and r2.status == "sat"


def test_model_defaults_flagged():
    # b appears only in a tautology; the model may omit nothing here, but a
    # variable under an Or can come back on either branch: just check totality
    x = Var("x")
    b = BoolVar("b")
    with SmtSession() as s:
        r = s.check([("a", Or((b, Atom("=", x, IntConst(2)))))], need_model=True)
        assert r.status == "sat"
        assert "x" in r.model and "b" in r.model


def test_timeout_returns_unknown_and_recovers():
    slow = f"{sys.executable} -c 'import time,sys; sys.stdin.readline(); time.sleep(30)'"
    s = SmtSession(slow, timeout_ms=300)
    x = Var("x")
    r = s.check([("a", Atom("=", x, IntConst(1)))], need_model=True)
    assert r.status == "unknown" and "timeout" in r.reason
    s.close()


def test_crash_raises_solver_error():
    crash = f"{sys.executable} -c 'pass'"
    s = SmtSession(crash, timeout_ms=2000)
    with pytest.raises(SolverError):
        s.check([("a", Atom("=", Var("x"), IntConst(1)))])
    s.close()


def test_session_restarts_after_timeout():
    with SmtSession(timeout_ms=5000) as s:
        s._kill()  # simulate a dead process; next query must respawn
        r = s.check([("a", Atom("=", Var("x"), IntConst(3)))], need_model=True)
        assert r.status == "sat" and r.model["x"] == 3
