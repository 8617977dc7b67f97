"""Sequential fractional programming for energy-efficiency maximization.

The global solver certifies optimality but its cost grows with the number
of links.  The sequential solver trades the certificate for speed: each
link's interference log-term (the concave minus part of the rate) is
replaced by its first-order Taylor expansion around the current iterate,
which turns the metric into a concave/affine ratio (or a max-min family of
them) over a convex set.  Each such surrogate is maximized globally by
Dinkelbach's iteration with smooth concave inner solvers, the expansion
point moves to the surrogate maximizer, and the process repeats.  Because
the surrogate never overestimates the true metric and touches it at the
expansion point, every outer step ascends the true objective, and the
iterates converge to a stationary (KKT) point.  Stationary is not globally
optimal on a multimodal landscape, so unless a starting point is pinned
the efficiency solvers ascend from both a full-power and a low-power
start and keep the better outcome.

The same linearization with the ratio replaced by the plain sum of rates
gives a sum-rate maximizer, used as a benchmark power policy.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .errors import InfeasibleError, InnerSolverError, IterationCapError
from .fractional import DinkelbachConfig, RatioSpec, auxiliary_value, dinkelbach
from .model import (
    DcFunction,
    EeMetric,
    MinRate,
    NetworkInstance,
    grad_q_minus,
    grad_q_plus,
    metric_value,
    q_minus,
    q_plus,
    rate,
)
from .optim import maxmin_concave_max, project_box
from .report import SolveReport, verify_report

__all__ = [
    "InnerSolverConfig",
    "ScaConfig",
    "SurrogateProblem",
    "linearize_minus",
    "build_gee_surrogate",
    "build_wmee_surrogate",
    "inner_concave_max",
    "sca_gee",
    "sca_wmee",
    "sum_rate_max",
]

_ASCENT_SLACK = 1e-12
_FEAS_TOL = 1e-9


@dataclass(frozen=True)
class InnerSolverConfig:
    """Tolerances for the concave subproblem solvers.

    grad_tol / max_iters control the projected-gradient ascent; the barrier
    parameters apply only when the surrogate carries concave inequality
    constraints beyond the power box; softmin_gap bounds the smoothing
    error accepted when a max-min objective is sharpened, and so the
    suboptimality of each multi-ratio subproblem solve.
    """

    grad_tol: float = 1e-8
    max_iters: int = 500
    barrier_initial: float = 0.1
    barrier_shrink: float = 0.1
    barrier_stages: int = 5
    softmin_gap: float = 1e-7

    def __post_init__(self):
        for name in (
            "grad_tol",
            "max_iters",
            "barrier_initial",
            "barrier_shrink",
            "barrier_stages",
            "softmin_gap",
        ):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class ScaConfig:
    """Outer-loop controls for the sequential solvers.

    The loop stops once the relative objective improvement stays at or
    below ``outer_tol`` for two consecutive iterations, or after
    ``max_outer`` surrogate solves.  ``start`` optionally fixes the initial
    power vector and pins the solver to that single ascent; by default the
    efficiency solvers ascend from full power (halved uniformly until
    feasible) and once more from a thousandfold lower power, keeping the
    better outcome, because the two starts cover different basins of the
    generally multimodal efficiency landscape.
    """

    outer_tol: float = 1e-6
    max_outer: int = 100
    inner: InnerSolverConfig = field(default_factory=InnerSolverConfig)
    start: np.ndarray | None = None

    def __post_init__(self):
        if not self.outer_tol > 0:
            raise ValueError("outer_tol must be positive")
        if self.max_outer < 1:
            raise ValueError("max_outer must be at least 1")
        if self.start is not None:
            arr = np.asarray(self.start, dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, "start", arr)


@dataclass(frozen=True)
class SurrogateProblem:
    """One linearized subproblem: concave-over-affine ratio(s) on a convex set.

    Value callables (numerators, denominators, the constraint functions)
    accept a single power vector or a batch ``(n, k)``; gradient callables
    are evaluated at single vectors only, mirroring the model module.  Each
    constraint entry is a ``(c, grad_c)`` pair with ``c`` concave and the
    feasible region ``c(p) >= 0``; any point satisfying them satisfies the
    original difference-of-concave constraints, because only the subtracted
    part was linearized (an inner approximation).
    """

    expansion_point: np.ndarray
    numerators: tuple
    numerator_grads: tuple
    denominators: tuple
    denominator_grads: tuple
    constraints: tuple
    box: tuple

    def __post_init__(self):
        pt = np.asarray(self.expansion_point, dtype=np.float64)
        pt.setflags(write=False)
        object.__setattr__(self, "expansion_point", pt)
        for name in ("numerators", "numerator_grads", "denominators",
                     "denominator_grads", "constraints"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if len(self.numerators) != len(self.denominators):
            raise ValueError("need one denominator per numerator")

    def objective(self, p):
        """Surrogate metric: minimum of the ratios (batched)."""
        vals = [
            np.asarray(f(p), np.float64) / np.asarray(g(p), np.float64)
            for f, g in zip(self.numerators, self.denominators)
        ]
        return vals[0] if len(vals) == 1 else np.minimum.reduce(vals)


def linearize_minus(dc: DcFunction, p_j):
    """Affine upper bound on a difference pair's concave minus part.

    Returns ``p -> dc.minus(p_j) + grad(p_j) . (p - p_j)``, the tangent at
    the expansion point; concavity makes it an upper bound everywhere, with
    value and slope matching at ``p_j``.  The returned callable is batched.
    """
    p_j = np.asarray(p_j, dtype=np.float64)
    base = float(dc.minus(p_j))
    slope = np.asarray(dc.grad_minus(p_j), dtype=np.float64)

    def affine(p):
        d = np.asarray(p, dtype=np.float64) - p_j
        return base + d @ slope

    return affine


def constraint_slacks(instance: NetworkInstance, p) -> np.ndarray:
    """Values of the instance's extra constraints ``c_i(p)`` at one point."""
    return np.array(
        [float(spec.realized.value(np.asarray(p, np.float64)))
         for spec in instance.constraints]
    )


def _is_feasible(instance: NetworkInstance, p, tol=_FEAS_TOL) -> bool:
    p = np.asarray(p, dtype=np.float64)
    if np.any(p < -tol) or np.any(p > instance.p_max_vec + tol):
        return False
    for spec in instance.constraints:
        dc = spec.realized
        scale = max(1.0, abs(float(dc.plus(p))) + abs(float(dc.minus(p))))
        if float(dc.value(p)) < -tol * scale:
            return False
    return True


def _require_feasible(instance, p_j):
    if np.asarray(p_j).shape != (instance.k,):
        raise ValueError(f"expansion point must have shape ({instance.k},)")
    if not _is_feasible(instance, p_j):
        raise ValueError("expansion point violates the original constraints")


def _memo1(fn):
    """Cache a single-argument array function on its argument's content.

    The max-min machinery evaluates every per-link component at the same
    point back to back; caching the shared model call turns K passes into
    one (and saves the per-link matrix factorizations on the vector model).
    """
    cache = {"key": None, "val": None}

    def wrapped(p):
        p = np.asarray(p, dtype=np.float64)
        key = (p.shape, p.tobytes())
        if cache["key"] != key:
            cache["key"], cache["val"] = key, fn(p)
        return cache["val"]

    return wrapped


def _constraint_plus_grad(spec, instance):
    """Gradient of a realized constraint's plus part at a single vector."""
    if isinstance(spec.kind, MinRate):
        link, b, model = spec.kind.link, instance.bandwidth, instance.sinr

        def gplus(pvec):
            return b * grad_q_plus(model, pvec)[link]

        return gplus
    # Interference-temperature and total-power bounds have constant plus
    # parts; all the power dependence sits in the (affine) minus part.
    k = instance.k

    def gzero(pvec):
        return np.zeros(k)

    return gzero


def _surrogate_constraints(instance: NetworkInstance, p_j):
    out = []
    for spec in instance.constraints:
        lin = linearize_minus(spec.realized, p_j)
        slope = np.asarray(spec.realized.grad_minus(p_j), dtype=np.float64)
        gplus = _constraint_plus_grad(spec, instance)

        def c(p, _plus=spec.realized.plus, _lin=lin):
            return _plus(p) - _lin(p)

        def gc(pvec, _gplus=gplus, _slope=slope):
            return np.asarray(_gplus(pvec), np.float64) - _slope

        out.append((c, gc))
    return tuple(out)


def build_gee_surrogate(instance: NetworkInstance, p_j) -> SurrogateProblem:
    """Linearize the network-efficiency problem around ``p_j``.

    The single ratio has concave numerator ``B sum_k [q_k_plus - tangent of
    q_k_minus]`` and affine denominator ``sum_k (mu_k p_k + psi_k)``; the
    extra constraints keep their concave plus parts and get the same
    tangent treatment on their minus parts.  An infeasible expansion point
    is rejected.
    """
    _require_feasible(instance, p_j)
    p_j = np.asarray(p_j, dtype=np.float64)
    model, b = instance.sinr, instance.bandwidth
    mu, psi = instance.mu_vec, instance.psi_vec
    qm_j = q_minus(model, p_j)
    gm = grad_q_minus(model, p_j)
    psi_total = float(psi.sum())

    def num(p):
        p = np.asarray(p, dtype=np.float64)
        lin = qm_j + (p - p_j) @ gm.T
        return b * (q_plus(model, p) - lin).sum(axis=-1)

    def gnum(pvec):
        return b * (grad_q_plus(model, pvec).sum(axis=0) - gm.sum(axis=0))

    def den(p):
        return np.asarray(p, dtype=np.float64) @ mu + psi_total

    def gden(pvec):
        return mu.copy()

    return SurrogateProblem(
        expansion_point=p_j,
        numerators=(num,),
        numerator_grads=(gnum,),
        denominators=(den,),
        denominator_grads=(gden,),
        constraints=_surrogate_constraints(instance, p_j),
        box=(np.zeros(instance.k), instance.p_max_vec.copy()),
    )


def build_wmee_surrogate(instance: NetworkInstance, p_j) -> SurrogateProblem:
    """Linearize the worst-link-efficiency problem around ``p_j``.

    One ratio per link: weighted rate with the tangent replacing the
    interference log-term over that link's own consumed power.  The
    minimum of the ratios never exceeds the true worst weighted efficiency
    and matches it at ``p_j``.
    """
    _require_feasible(instance, p_j)
    p_j = np.asarray(p_j, dtype=np.float64)
    model, b = instance.sinr, instance.bandwidth
    mu, psi, w = instance.mu_vec, instance.psi_vec, instance.weight_vec
    k = instance.k
    qm_j = q_minus(model, p_j)
    gm = grad_q_minus(model, p_j)
    qp_at = _memo1(lambda p: q_plus(model, p))
    gp_at = _memo1(lambda p: grad_q_plus(model, p))

    nums, gnums, dens, gdens = [], [], [], []
    for i in range(k):

        def num(p, _i=i):
            p = np.asarray(p, dtype=np.float64)
            lin = qm_j[_i] + (p - p_j) @ gm[_i]
            return w[_i] * b * (qp_at(p)[..., _i] - lin)

        def gnum(pvec, _i=i):
            return w[_i] * b * (gp_at(pvec)[_i] - gm[_i])

        def den(p, _i=i):
            p = np.asarray(p, dtype=np.float64)
            return mu[_i] * p[..., _i] + psi[_i]

        def gden(pvec, _i=i):
            e = np.zeros(k)
            e[_i] = mu[_i]
            return e

        nums.append(num)
        gnums.append(gnum)
        dens.append(den)
        gdens.append(gden)

    return SurrogateProblem(
        expansion_point=p_j,
        numerators=tuple(nums),
        numerator_grads=tuple(gnums),
        denominators=tuple(dens),
        denominator_grads=tuple(gdens),
        constraints=_surrogate_constraints(instance, p_j),
        box=(np.zeros(k), instance.p_max_vec.copy()),
    )


def _interior_start(constraints, lo, hi, x0):
    """A strictly feasible barrier start near ``x0``.

    If ``x0`` already has positive slack it is used as-is.  Otherwise a
    phase-one max-min solve (on slack functions normalized to comparable
    scales) finds the most interior point, and the start is blended toward
    it just far enough to clear the boundary; with concave slacks any
    blend of a feasible point with a strictly interior one is strictly
    interior.
    """
    vals = np.array([float(c(x0)) for c, _ in constraints])
    scale = max(1.0, float(np.max(np.abs(vals))))
    if vals.min() > 1e-9 * scale:
        return x0
    center = 0.5 * (np.asarray(lo, np.float64) + np.asarray(hi, np.float64))
    comps = []
    for (c, gc), v0 in zip(constraints, vals):
        s = max(1.0, abs(v0), abs(float(c(center))))
        comps.append(
            (lambda x, _c=c, _s=s: float(_c(x)) / _s,
             lambda x, _g=gc, _s=s: np.asarray(_g(x), np.float64) / _s)
        )
    xi, v = maxmin_concave_max(
        comps, lo, hi, center, beta_stages=4, target_gap=1e-6,
        max_iters=300, grad_tol=1e-10,
    )
    if not v > 0.0:
        raise InfeasibleError(
            "the surrogate feasible set has no strictly interior point"
        )
    for eta in (0.9, 0.5, 0.0):
        x = eta * np.asarray(x0, np.float64) + (1.0 - eta) * xi
        if min(float(c(x)) for c, _ in constraints) > 0.0:
            return x
    return xi


def inner_concave_max(components, constraints, box, cfg: InnerSolverConfig,
                      *, x0=None):
    """Maximize the minimum of smooth concave components over a convex set.

    ``components`` is a sequence of ``(f, grad)`` pairs — one for a plain
    concave program, several for a max-min program (smoothed internally so
    first-order conditions stay well defined).  With only the box, the
    solver is projected gradient ascent with Armijo backtracking; concave
    ``constraints`` (``(c, grad_c)`` pairs) bring in a shrinking
    logarithmic barrier.  The monotone line search doubles as a safeguard:
    a non-concave objective shows up as a failed search and stops ascent
    rather than diverging.  Returns the maximizer.
    """
    lo, hi = box
    x0 = 0.5 * (np.asarray(lo, np.float64) + np.asarray(hi, np.float64)) \
        if x0 is None else np.asarray(x0, dtype=np.float64)
    if constraints:
        x0 = _interior_start(constraints, lo, hi, x0)
    x, _ = maxmin_concave_max(
        list(components),
        lo,
        hi,
        x0,
        constraints=tuple(constraints),
        target_gap=cfg.softmin_gap,
        max_iters=cfg.max_iters,
        grad_tol=cfg.grad_tol,
        barrier_kwargs=dict(
            stages=cfg.barrier_stages,
            kappa_initial=cfg.barrier_initial,
            kappa_shrink=cfg.barrier_shrink,
            max_iters=cfg.max_iters,
            grad_tol=cfg.grad_tol,
        ),
    )
    return x


def _aux_components(sur: SurrogateProblem, lam: float):
    comps = []
    for f, gf, g, gg in zip(sur.numerators, sur.numerator_grads,
                            sur.denominators, sur.denominator_grads):
        comps.append(
            (lambda p, _f=f, _g=g, _l=lam: float(_f(p)) - _l * float(_g(p)),
             lambda p, _gf=gf, _gg=gg, _l=lam:
                 np.asarray(_gf(p), np.float64)
                 - _l * np.asarray(_gg(p), np.float64))
        )
    return comps


def _maximize_surrogate(sur: SurrogateProblem, inner_cfg: InnerSolverConfig,
                        *, lam0: float, epsilon: float, max_iter: int = 60):
    """Globally maximize one surrogate's ratio via Dinkelbach.

    Warm-starts every parametric subproblem from the previous maximizer
    (initially the expansion point, where the auxiliary value at ``lam0``
    is exactly zero, so the first iteration cannot fail the sign check).
    An exhausted iteration budget or a stalled ratio update degrades to
    the best iterate found; the outer ascent guard makes that safe.
    """
    rspec = RatioSpec(
        numerators=sur.numerators,
        denominators=sur.denominators,
        count=len(sur.numerators),
    )
    if rspec.count > 1:
        # A smoothed max-min subproblem is only solved to within the
        # smoothing gap; asking Dinkelbach for more would stall it.
        epsilon = max(epsilon, inner_cfg.softmin_gap)
    state = {"x": np.array(sur.expansion_point), "n": 0, "lams": [], "xs": []}

    def inner(lam):
        x = inner_concave_max(
            _aux_components(sur, lam), sur.constraints, sur.box,
            inner_cfg, x0=state["x"],
        )
        state["x"] = x
        state["n"] += 1
        state["lams"].append(lam)
        state["xs"].append(x)
        return x, auxiliary_value(rspec, lam, x)

    try:
        lam, x, _ = dinkelbach(
            rspec, inner,
            DinkelbachConfig(lambda0=lam0, epsilon=epsilon, max_iter=max_iter),
        )
    except (IterationCapError, InnerSolverError):
        lam, x = state["lams"][-1], state["xs"][-1]
    return lam, np.asarray(x, dtype=np.float64), state["n"]


def _default_start(instance: NetworkInstance) -> np.ndarray:
    p = instance.p_max_vec.copy()
    for _ in range(31):
        if _is_feasible(instance, p):
            return p
        p = 0.5 * p
    raise InfeasibleError(
        "no feasible starting power found (full power halved 30 times)"
    )


def _starting_point(instance: NetworkInstance, cfg: ScaConfig) -> np.ndarray:
    if cfg.start is not None:
        p0 = np.asarray(cfg.start, dtype=np.float64)
        if p0.shape != (instance.k,):
            raise ValueError(f"start must have shape ({instance.k},)")
        if not _is_feasible(instance, p0):
            raise InfeasibleError("the configured starting point is infeasible")
        return p0.copy()
    return _default_start(instance)


def _sca_drive(instance, metric: EeMetric, build, cfg: ScaConfig,
               solver: str) -> SolveReport:
    if cfg.start is not None:
        return _sca_run(instance, metric, build, cfg, solver,
                        _starting_point(instance, cfg))
    # The efficiency landscape can hold one basin where every link
    # transmits and another where a strongly interfered link is shut off.
    # A second ascent from deep inside the noise-limited regime covers the
    # basin the full-power start misses; the report describes the winning
    # ascent and totals the work of both.
    t0 = time.perf_counter()
    first = _default_start(instance)
    best = _sca_run(instance, metric, build, cfg, solver, first)
    low = 1e-3 * first
    if _is_feasible(instance, low):
        probe = _sca_run(instance, metric, build, cfg, solver, low)
        if probe.value > best.value:
            probe.inner_work += best.inner_work
            best = probe
        else:
            best.inner_work += probe.inner_work
        best.wall_ms = (time.perf_counter() - t0) * 1e3
    return best


def _sca_run(instance, metric: EeMetric, build, cfg: ScaConfig,
             solver: str, p0: np.ndarray) -> SolveReport:
    t0 = time.perf_counter()
    p = p0
    vals = [metric_value(instance, metric, p)]
    lam_trace: list[float] = []
    inner_total = 0
    # Inner ratios must be resolved finer than the outer improvement test,
    # or the ascent trace would be dominated by subproblem noise.
    eps_inner = max(1e-12, min(1e-8, 1e-2 * cfg.outer_tol))
    lo = np.zeros(instance.k)
    status = "iteration-cap"
    small = 0
    for _ in range(cfg.max_outer):
        sur = build(instance, p)
        lam, x, n = _maximize_surrogate(
            sur, cfg.inner, lam0=vals[-1], epsilon=eps_inner
        )
        inner_total += n
        x = project_box(x, lo, instance.p_max_vec)
        v = metric_value(instance, metric, x)
        prev = vals[-1]
        if v < prev - _ASCENT_SLACK * max(1.0, abs(prev)):
            # The subproblem could not improve the true metric beyond
            # numerical noise: the expansion point is already stationary to
            # the inner solver's accuracy.  Keep it.
            status = "ok"
            break
        p = x
        vals.append(v)
        lam_trace.append(float(lam))
        if (v - prev) <= cfg.outer_tol * max(1.0, abs(prev)):
            small += 1
            if small >= 2:
                status = "ok"
                break
        else:
            small = 0
    link_rates = rate(instance, p)
    report = SolveReport(
        solver=solver,
        metric=metric.value,
        powers=p,
        value=vals[-1],
        link_ee=link_rates / instance.power_consumption(p),
        link_rates=link_rates,
        lambda_trace=lam_trace,
        sca_objective_trace=[float(v) for v in vals],
        outer_iterations=len(vals) - 1,
        inner_work=inner_total,
        wall_ms=(time.perf_counter() - t0) * 1e3,
        status=status,
    )
    verify_report(instance, report)
    return report


def sca_gee(instance: NetworkInstance, cfg: ScaConfig | None = None) -> SolveReport:
    """Maximize the network energy efficiency by sequential surrogates.

    Each outer iteration linearizes the interference terms at the current
    point and solves the resulting concave/affine fractional program to
    global optimality; the recorded objective trace is nondecreasing and
    the final point is feasible and stationary for the true problem.
    Raises :class:`~eeopt.errors.InfeasibleError` when no feasible start
    exists; ``status`` degrades to ``'iteration-cap'`` when ``max_outer``
    is exhausted before the improvement test triggers.
    """
    return _sca_drive(instance, EeMetric.GEE, build_gee_surrogate,
                      cfg or ScaConfig(), "sequential")


def sca_wmee(instance: NetworkInstance, cfg: ScaConfig | None = None) -> SolveReport:
    """Maximize the worst weighted link efficiency by sequential surrogates.

    As :func:`sca_gee`, but each surrogate is a generalized (max-min)
    fractional program with one concave/affine ratio per link, solved by
    the generalized Dinkelbach iteration over the smoothed minimum.
    """
    return _sca_drive(instance, EeMetric.WMEE, build_wmee_surrogate,
                      cfg or ScaConfig(), "sequential")


def sum_rate_max(instance: NetworkInstance, cfg: ScaConfig | None = None) -> SolveReport:
    """Maximize the total rate by the same sequential linearization.

    Iterates the zero-efficiency-weight subproblem of :func:`sca_gee` —
    maximize the concave surrogate of ``sum_k R_k`` — to convergence.  The
    report's ``value`` and trace are total rates, not efficiencies.
    """
    cfg = cfg or ScaConfig()
    t0 = time.perf_counter()
    p = _starting_point(instance, cfg)
    vals = [float(rate(instance, p).sum())]
    lo = np.zeros(instance.k)
    status = "iteration-cap"
    small = 0
    inner_total = 0
    for _ in range(cfg.max_outer):
        sur = build_gee_surrogate(instance, p)
        x = inner_concave_max(
            [(sur.numerators[0], sur.numerator_grads[0])],
            sur.constraints, sur.box, cfg.inner, x0=p,
        )
        inner_total += 1
        x = project_box(x, lo, instance.p_max_vec)
        v = float(rate(instance, x).sum())
        prev = vals[-1]
        if v < prev - _ASCENT_SLACK * max(1.0, abs(prev)):
            status = "ok"
            break
        p = x
        vals.append(v)
        if (v - prev) <= cfg.outer_tol * max(1.0, abs(prev)):
            small += 1
            if small >= 2:
                status = "ok"
                break
        else:
            small = 0
    link_rates = rate(instance, p)
    report = SolveReport(
        solver="sum-rate",
        metric="sum-rate",
        powers=p,
        value=vals[-1],
        link_ee=link_rates / instance.power_consumption(p),
        link_rates=link_rates,
        sca_objective_trace=[float(v) for v in vals],
        outer_iterations=len(vals) - 1,
        inner_work=inner_total,
        wall_ms=(time.perf_counter() - t0) * 1e3,
        status=status,
    )
    verify_report(instance, report)
    return report
