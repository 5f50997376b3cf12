from .session import SmtSession, SmtResult, SolverError, default_solver_command
from .lower import lower_formula, declare_const

__all__ = ["SmtSession", "SmtResult", "SolverError", "default_solver_command",
           "lower_formula", "declare_const"]
