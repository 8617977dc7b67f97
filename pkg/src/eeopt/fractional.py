"""Generalized Dinkelbach iteration for (max-min) ratio maximization.

Maximizes ``min_k f_k(x) / g_k(x)`` over a feasible set that is handled
entirely by an injected inner maximizer.  Each iteration solves the
auxiliary problem

    F(lambda) = max_x min_k [ f_k(x) - lambda g_k(x) ]

and updates ``lambda`` to the smallest achieved ratio at the inner maximizer.
``F`` is decreasing in ``lambda`` and its unique zero is the optimal ratio;
the iteration converges superlinearly for a single ratio and at least
linearly in the max-min case.  The driver never looks inside the inner
problem, so the same loop serves the global solver (inner = monotonic
optimization) and the low-complexity solver (inner = concave program).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from .errors import InnerSolverError, IterationCapError

__all__ = [
    "RatioSpec",
    "DinkelbachConfig",
    "DinkelbachTrace",
    "auxiliary_value",
    "dinkelbach",
]


@dataclass(frozen=True)
class RatioSpec:
    """A bundle of ratios ``f_k / g_k`` sharing one decision variable.

    numerators / denominators -- callables on the decision variable; every
        denominator must be strictly positive on the feasible set (checked at
        each evaluation).
    count -- number of ratios (1 for plain fractional programs).
    numerator_plus / numerator_minus -- optional difference-of-increasing
        decomposition of a single numerator, used by solvers that need the
        monotonic structure of ``f = plus - minus``; None otherwise.
    """

    numerators: tuple[Callable, ...]
    denominators: tuple[Callable, ...]
    count: int
    numerator_plus: Callable | None = None
    numerator_minus: Callable | None = None

    def __post_init__(self):
        object.__setattr__(self, "numerators", tuple(self.numerators))
        object.__setattr__(self, "denominators", tuple(self.denominators))
        if self.count < 1:
            raise ValueError("count must be at least 1")
        if len(self.numerators) != self.count or len(self.denominators) != self.count:
            raise ValueError("need exactly `count` numerators and denominators")

    def ratios_at(self, x) -> np.ndarray:
        """All ratio values at ``x`` (validates denominator positivity)."""
        out = np.empty(self.count)
        for i, (f, g) in enumerate(zip(self.numerators, self.denominators)):
            den = float(g(x))
            if not den > 0.0:
                raise ValueError(
                    f"denominator {i} is not strictly positive at the iterate"
                )
            out[i] = float(f(x)) / den
        return out

    def min_denominator_at(self, x) -> float:
        return min(float(g(x)) for g in self.denominators)


def auxiliary_value(spec: RatioSpec, lam: float, x) -> float:
    """``min_k [f_k(x) - lambda g_k(x)]`` with denominator positivity check."""
    vals = []
    for i, (f, g) in enumerate(zip(spec.numerators, spec.denominators)):
        den = float(g(x))
        if not den > 0.0:
            raise ValueError(f"denominator {i} is not strictly positive at x")
        vals.append(float(f(x)) - lam * den)
    return min(vals)


@dataclass(frozen=True)
class DinkelbachConfig:
    lambda0: float = 0.0
    epsilon: float = 1e-6
    max_iter: int = 50

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")


@dataclass
class DinkelbachTrace:
    """Per-iteration record: lambda values, auxiliary values F(lambda), and
    the inner maximizers."""

    lambdas: list[float] = field(default_factory=list)
    f_values: list[float] = field(default_factory=list)
    xs: list[Any] = field(default_factory=list)

    @property
    def iterations(self) -> int:
        return len(self.lambdas)


def dinkelbach(
    spec: RatioSpec,
    inner: Callable[[float], tuple[Any, float]],
    cfg: DinkelbachConfig = DinkelbachConfig(),
) -> tuple[float, Any, DinkelbachTrace]:
    """Run the generalized Dinkelbach iteration.

    ``inner(lam)`` must return ``(x, F)`` where ``x`` maximizes the auxiliary
    objective at ``lam`` and ``F`` is the (certified upper bound on the)
    auxiliary value.  Termination uses a scale-aware tolerance:
    ``F <= epsilon * max(1, |lam| * min_k g_k(x))``, so the same epsilon
    controls the relative accuracy of the returned ratio regardless of the
    denominators' physical units.

    Returns ``(lam_star, x_star, trace)``.  Raises
    :class:`~eeopt.errors.IterationCapError` when ``max_iter`` is exhausted
    and :class:`~eeopt.errors.InnerSolverError` when the updates stall in a
    way that contradicts global optimality of the inner solver.
    """
    lam = float(cfg.lambda0)
    trace = DinkelbachTrace()
    for _ in range(cfg.max_iter):
        x, f_val = inner(lam)
        f_val = float(f_val)
        trace.lambdas.append(lam)
        trace.f_values.append(f_val)
        trace.xs.append(x)
        g_min = spec.min_denominator_at(x)
        scale = max(1.0, abs(lam) * g_min)
        if f_val < -cfg.epsilon * scale:
            if len(trace.lambdas) == 1:
                raise ValueError(
                    "auxiliary value is negative at lambda0; the starting "
                    "ratio overestimates the optimum"
                )
            raise InnerSolverError(
                "auxiliary value went negative mid-run; inner maximizer is "
                "not globally optimal"
            )
        if f_val <= cfg.epsilon * scale:
            return lam, x, trace
        new_lam = float(np.min(spec.ratios_at(x)))
        if new_lam <= lam:
            raise InnerSolverError(
                "ratio update failed to increase lambda; inner maximizer is "
                "not globally optimal"
            )
        lam = new_lam
    raise IterationCapError(
        f"no convergence within {cfg.max_iter} Dinkelbach iterations",
        best=(lam, trace.xs[-1]),
        trace=trace,
    )
