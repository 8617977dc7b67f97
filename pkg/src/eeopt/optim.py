"""Shared smooth-optimization primitives.

Small, dependency-free building blocks used by the solvers:

* projected gradient ascent with monotone Armijo backtracking on a box,
  run internally in box-normalized coordinates so heterogeneous power
  scales (watts vs. auxiliary level variables) do not skew the steps;
* a logarithmic-barrier wrapper for smooth concave inequality constraints;
* softmin smoothing for max-min objectives, with a sharpness continuation
  ladder (avoids introducing an epigraph variable for the minimum);
* batched line search along coordinates, used to polish incumbents of the
  global solver.

Everything here is a local method; global guarantees come from the callers'
structure (concavity for the sequential solver, certified bounds for the
branch-and-bound solver).
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "project_box",
    "pga_max",
    "barrier_max",
    "softmin_value_grad",
    "maxmin_concave_max",
    "line_zoom_ascent",
]

_ARMIJO_C1 = 1e-4
_MIN_STEP = 1e-14


def project_box(x, lo, hi):
    return np.minimum(np.maximum(x, lo), hi)


def pga_max(f, grad, lo, hi, x0, *, max_iters=500, grad_tol=1e-8):
    """Maximize a smooth concave ``f`` over ``[lo, hi]`` from ``x0``.

    Monotone by construction: a step is taken only when it increases ``f``,
    so the returned value is never below ``f(x0)``.  ``f`` may return -inf
    outside an implicit domain (the barrier wrapper relies on this); the
    starting point must be inside.  Returns ``(x, f(x))``.
    """
    lo = np.asarray(lo, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)
    span = hi - lo
    active = span > 0
    span_safe = np.where(active, span, 1.0)

    def to_x(z):
        return lo + z * span_safe

    z = np.where(active, (np.asarray(x0, np.float64) - lo) / span_safe, 0.0)
    z = np.clip(z, 0.0, 1.0)
    fx = float(f(to_x(z)))
    if not np.isfinite(fx):
        raise ValueError("starting point is outside the objective's domain")
    step = 1.0
    z_prev = g_prev = None
    for _ in range(max_iters):
        g = np.asarray(grad(to_x(z)), np.float64) * span_safe
        g = np.where(active, g, 0.0)
        gmax = np.max(np.abs(g)) if g.size else 0.0
        unit = g / max(1.0, gmax)
        if np.max(np.abs(np.clip(z + unit, 0.0, 1.0) - z)) <= grad_tol:
            break
        # Seed the backtracking with a spectral (Barzilai-Borwein) step when
        # the last pair of iterates exposes positive curvature; this keeps
        # the crawl along stiff ridges from shrinking the step permanently.
        if z_prev is not None:
            s = z - z_prev
            y = g_prev - g
            sy = float(s @ y)
            if sy > 0.0:
                step = min(max(float(s @ s) / sy, _MIN_STEP), 1e6)
        moved = False
        while step >= _MIN_STEP:
            z_new = np.clip(z + step * g, 0.0, 1.0)
            d = z_new - z
            f_new = float(f(to_x(z_new)))
            if np.isfinite(f_new) and f_new >= fx + _ARMIJO_C1 * float(g @ d):
                moved = True
                break
            step *= 0.5
        if not moved:
            break
        z_prev, g_prev = z, g
        z, fx = z_new, f_new
        step = min(step * 2.0, 1e6)
    return to_x(z), fx


def barrier_max(
    f,
    grad,
    constraints,
    lo,
    hi,
    x0,
    *,
    stages=5,
    kappa_initial=0.1,
    kappa_shrink=0.1,
    max_iters=500,
    grad_tol=1e-8,
):
    """Maximize concave ``f`` subject to smooth concave ``c_i(x) >= 0`` and a
    box, by a logarithmic barrier with decreasing weight.

    ``constraints`` is a sequence of ``(c, grad_c)`` pairs; ``x0`` must be
    strictly feasible (every ``c_i(x0) > 0``).  The barrier weight starts at
    ``kappa_initial`` scaled by the objective magnitude so behaviour is
    unit-independent.  Returns ``(x, f(x))`` with the best iterate measured
    by the true objective.
    """
    x = np.asarray(x0, dtype=np.float64).copy()
    c0 = [float(c(x)) for c, _ in constraints]
    if constraints and min(c0) <= 0.0:
        raise ValueError("barrier start must be strictly feasible")
    if not constraints:
        return pga_max(f, grad, lo, hi, x, max_iters=max_iters, grad_tol=grad_tol)
    scale = max(1.0, abs(float(f(x))))
    kappa = kappa_initial * scale
    best_x, best_f = x.copy(), float(f(x))
    for _ in range(stages):

        def f_bar(xx, _k=kappa):
            cs = np.array([float(c(xx)) for c, _ in constraints])
            if np.any(cs <= 0.0):
                return -np.inf
            return float(f(xx)) + _k * float(np.log(cs).sum())

        def g_bar(xx, _k=kappa):
            g = np.asarray(grad(xx), np.float64).copy()
            for c, gc in constraints:
                g += _k * np.asarray(gc(xx), np.float64) / float(c(xx))
            return g

        x, _ = pga_max(
            f_bar, g_bar, lo, hi, x, max_iters=max_iters, grad_tol=grad_tol
        )
        fx = float(f(x))
        if fx > best_f:
            best_x, best_f = x.copy(), fx
        kappa *= kappa_shrink
    return best_x, best_f


def softmin_value_grad(vals, grads, beta):
    """Smooth lower bound of ``min_k vals[k]`` and its gradient.

    ``-(1/beta) log sum_k exp(-beta vals[k])``; the gap to the true minimum
    is at most ``log(K)/beta``.  ``grads`` has one row per component.
    """
    vals = np.asarray(vals, dtype=np.float64)
    m = vals.min()
    e = np.exp(-beta * (vals - m))
    s = e.sum()
    value = m - np.log(s) / beta
    weights = e / s
    grad = weights @ np.asarray(grads, dtype=np.float64)
    return value, grad


def maxmin_concave_max(
    components,
    lo,
    hi,
    x0,
    *,
    constraints=(),
    beta_stages=6,
    target_gap=1e-9,
    max_iters=300,
    grad_tol=1e-8,
    barrier_kwargs=None,
):
    """Maximize ``min_k f_k(x)`` for concave smooth ``f_k`` over a box, with
    optional concave inequality constraints.

    ``components`` is a sequence of ``(f_k, grad_k)`` pairs.  The minimum is
    smoothed by softmin with sharpness increased geometrically until the
    smoothing gap falls below ``target_gap`` times the value scale; each
    stage warm-starts from the previous one.  Returns ``(x, true_min)``.
    """
    components = list(components)
    n_comp = len(components)
    x = np.asarray(x0, dtype=np.float64).copy()

    def true_min(xx):
        return min(float(f(xx)) for f, _ in components)

    if n_comp == 1:
        f, g = components[0]
        if constraints:
            kw = dict(barrier_kwargs or {})
            kw.setdefault("max_iters", max_iters)
            kw.setdefault("grad_tol", grad_tol)
            return barrier_max(f, g, constraints, lo, hi, x, **kw)
        return pga_max(f, g, lo, hi, x, max_iters=max_iters, grad_tol=grad_tol)

    scale = max(1.0, abs(true_min(x)))
    beta_lo = np.log(n_comp) / (1e-2 * scale)
    beta_hi = np.log(n_comp) / (target_gap * scale)
    best_x, best_v = x.copy(), true_min(x)
    betas = np.geomspace(beta_lo, beta_hi, beta_stages)
    for stage, beta in enumerate(betas):
        # Intermediate sharpness levels only position the warm start; spend
        # the full iteration budget on the final (accuracy-setting) stage.
        stage_iters = max_iters if stage == beta_stages - 1 \
            else max(60, max_iters // 4)

        def f_s(xx, _b=beta):
            vals = [float(f(xx)) for f, _ in components]
            m = min(vals)
            vals = np.asarray(vals)
            return m - np.log(np.exp(-_b * (vals - m)).sum()) / _b

        def g_s(xx, _b=beta):
            vals = np.array([float(f(xx)) for f, _ in components])
            grads = np.stack([np.asarray(g(xx), np.float64) for _, g in components])
            _, grad = softmin_value_grad(vals, grads, _b)
            return grad

        if constraints:
            kw = dict(barrier_kwargs or {})
            kw.pop("max_iters", None)
            kw.setdefault("grad_tol", grad_tol)
            x, _ = barrier_max(
                f_s, g_s, constraints, lo, hi, x, max_iters=stage_iters, **kw
            )
        else:
            x, _ = pga_max(
                f_s, g_s, lo, hi, x, max_iters=stage_iters, grad_tol=grad_tol
            )
        v = true_min(x)
        if v > best_v:
            best_x, best_v = x.copy(), v
    return best_x, best_v


def line_zoom_ascent(f_batch, x0, lo, hi, *, sweeps=3, points=17, levels=5):
    """Cyclic coordinate ascent by nested batched line grids.

    For each coordinate, evaluates ``points`` equispaced values across the
    current bracket, zooms into the winning cell, and repeats ``levels``
    times, shrinking the bracket geometrically.  Derivative-free and robust
    to kinks (max-min objectives), which gradient steps are not.  Returns
    ``(x, f(x))`` with ``f(x) >= f(x0)`` guaranteed.
    """
    lo = np.asarray(lo, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)
    x = project_box(np.asarray(x0, dtype=np.float64).copy(), lo, hi)
    fx = float(f_batch(x[None, :])[0])
    n = x.shape[0]
    for _ in range(sweeps):
        improved = False
        for j in range(n):
            if hi[j] <= lo[j]:
                continue
            a, b = lo[j], hi[j]
            for _level in range(levels):
                ts = np.linspace(a, b, points)
                trial = np.tile(x, (points, 1))
                trial[:, j] = ts
                vals = f_batch(trial)
                i = int(np.argmax(vals))
                if vals[i] > fx:
                    fx = float(vals[i])
                    x = trial[i].copy()
                    improved = True
                a = ts[max(i - 1, 0)]
                b = ts[min(i + 1, points - 1)]
        if not improved:
            break
    return x, fx
