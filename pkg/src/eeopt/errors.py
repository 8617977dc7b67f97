"""Exception types shared across the solvers and the command line front end."""

from __future__ import annotations


class ConfigError(ValueError):
    """Raised when an experiment configuration is malformed.

    Collects every problem found during validation so the user sees the
    full list at once instead of fixing one field per run.
    """

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class InfeasibleError(RuntimeError):
    """Raised when the feasible set of a power-control problem is empty."""


class IterationCapError(RuntimeError):
    """Raised when an iterative solver hits its iteration budget.

    Carries the best iterate seen so far so callers can degrade gracefully
    (the command line maps this to a dedicated exit status).
    """

    def __init__(self, message, *, best=None, trace=None):
        super().__init__(message)
        self.best = best
        self.trace = trace


class InnerSolverError(RuntimeError):
    """Raised when an inner maximizer returns a value inconsistent with the
    fractional-programming invariants (e.g. the auxiliary value fails to
    certify progress), which indicates the inner solver was not global."""
