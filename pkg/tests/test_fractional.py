"""Dinkelbach driver tests with analytically solvable inner problems."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from eeopt import InnerSolverError, IterationCapError
from eeopt.fractional import (
    DinkelbachConfig,
    DinkelbachTrace,
    RatioSpec,
    auxiliary_value,
    dinkelbach,
)


def _argmax_on_grid(fn, lo=0.0, hi=1.0, n=200001):
    xs = np.linspace(lo, hi, n)
    vals = fn(xs)
    i = int(np.argmax(vals))
    return float(xs[i]), float(vals[i])


def quadratic_over_affine_spec():
    # max (2x - x^2)/(x + 1) on [0, 1]; the optimum is at x = sqrt(3) - 1
    # with ratio 4 - 2 sqrt(3) (stationarity of the parametric problem).
    return RatioSpec(
        numerators=(lambda x: 2.0 * x - x * x,),
        denominators=(lambda x: x + 1.0,),
        count=1,
    )


def quadratic_inner(lam):
    # max 2x - x^2 - lam (x + 1) on [0, 1]: unconstrained peak at
    # x = 1 - lam/2, clipped to the box.
    x = min(1.0, max(0.0, 1.0 - lam / 2.0))
    return x, (2.0 * x - x * x) - lam * (x + 1.0)


def test_single_ratio_quadratic():
    lam, x, trace = dinkelbach(
        quadratic_over_affine_spec(),
        quadratic_inner,
        DinkelbachConfig(lambda0=0.0, epsilon=1e-10, max_iter=50),
    )
    assert_allclose(lam, 4.0 - 2.0 * np.sqrt(3.0), atol=1e-9)
    assert_allclose(x, np.sqrt(3.0) - 1.0, atol=1e-5)
    assert trace.iterations <= 6


def test_lambda_strictly_increasing_and_f_nonincreasing():
    _, _, trace = dinkelbach(
        quadratic_over_affine_spec(),
        quadratic_inner,
        DinkelbachConfig(epsilon=1e-10),
    )
    lams = np.array(trace.lambdas)
    assert np.all(np.diff(lams) > 0)
    fvals = np.array(trace.f_values)
    assert np.all(np.diff(fvals) <= 1e-12)
    assert fvals[-1] >= -1e-12


def test_max_min_two_ratios():
    # max min(x, 1 - x) with unit denominators: optimum 1/2 at x = 1/2.
    spec = RatioSpec(
        numerators=(lambda x: x, lambda x: 1.0 - x),
        denominators=(lambda x: 1.0, lambda x: 1.0),
        count=2,
    )

    def inner(lam):
        # max min(x, 1-x) - lam over [0, 1]
        return 0.5, 0.5 - lam

    lam, x, trace = dinkelbach(spec, inner, DinkelbachConfig(epsilon=1e-12))
    assert_allclose(lam, 0.5, atol=1e-12)
    assert_allclose(x, 0.5)
    assert trace.iterations == 2  # one update from 0, then certified


def test_auxiliary_value_decreasing_in_lambda():
    spec = quadratic_over_affine_spec()
    lams = np.linspace(0.0, 1.0, 20)
    fvals = []
    for lam in lams:
        _, fv = quadratic_inner(lam)
        fvals.append(fv)
        # auxiliary_value agrees with the inner report at the maximizer
        x, _ = quadratic_inner(lam)
        assert_allclose(auxiliary_value(spec, lam, x), fv, rtol=1e-12)
    assert np.all(np.diff(fvals) < 0)


def test_zero_of_f_is_optimal_ratio():
    # F(lambda*) = 0 exactly characterizes the max ratio.
    lam_star = 4.0 - 2.0 * np.sqrt(3.0)
    _, f_at_star = quadratic_inner(lam_star)
    assert abs(f_at_star) < 1e-12
    _, f_below = quadratic_inner(lam_star - 0.1)
    _, f_above = quadratic_inner(lam_star + 0.1)
    assert f_below > 0 > f_above


def test_termination_scale_uses_denominator_size():
    # With a huge denominator the absolute auxiliary tolerance must inflate
    # accordingly; otherwise the loop would spin past the ratio precision.
    big = 1e9

    spec = RatioSpec(
        numerators=(lambda x: (2.0 * x - x * x) * big,),
        denominators=(lambda x: (x + 1.0) * big,),
        count=1,
    )

    def inner(lam):
        x = min(1.0, max(0.0, 1.0 - lam / 2.0))
        return x, big * (2.0 * x - x * x) - lam * big * (x + 1.0)

    lam, _, trace = dinkelbach(spec, inner, DinkelbachConfig(epsilon=1e-10))
    # the ratio is unchanged by the common scaling
    assert_allclose(lam, 4.0 - 2.0 * np.sqrt(3.0), atol=1e-8)
    assert trace.iterations <= 8


def test_negative_start_raises():
    with pytest.raises(ValueError, match="lambda0"):
        dinkelbach(
            quadratic_over_affine_spec(),
            quadratic_inner,
            DinkelbachConfig(lambda0=10.0),
        )


def test_iteration_cap_carries_best_iterate():
    with pytest.raises(IterationCapError) as exc:
        dinkelbach(
            quadratic_over_affine_spec(),
            quadratic_inner,
            DinkelbachConfig(epsilon=1e-10, max_iter=2),
        )
    lam, x = exc.value.best
    assert 0 < lam < 4.0 - 2.0 * np.sqrt(3.0) + 1e-9
    assert isinstance(exc.value.trace, DinkelbachTrace)
    assert exc.value.trace.iterations == 2


def test_stalling_inner_solver_detected():
    # An inner "solver" that always returns the same suboptimal point with an
    # inflated value cannot push lambda upward; the driver must notice.
    spec = quadratic_over_affine_spec()

    def bad_inner(lam):
        return 0.9, 1.0  # claims progress it cannot certify

    with pytest.raises(InnerSolverError):
        dinkelbach(spec, bad_inner, DinkelbachConfig(epsilon=1e-10))


def test_nonpositive_denominator_rejected():
    spec = RatioSpec(
        numerators=(lambda x: x,),
        denominators=(lambda x: x,),  # zero at x = 0
        count=1,
    )
    with pytest.raises(ValueError, match="strictly positive"):
        spec.ratios_at(0.0)


def test_grid_oracle_agreement():
    # Independent check: brute-force the ratio on a fine grid and compare.
    spec = quadratic_over_affine_spec()
    x_grid, ratio_grid = _argmax_on_grid(
        lambda x: (2.0 * x - x * x) / (x + 1.0)
    )
    lam, x, _ = dinkelbach(spec, quadratic_inner, DinkelbachConfig(epsilon=1e-12))
    assert_allclose(lam, ratio_grid, atol=1e-9)
    assert_allclose(x, x_grid, atol=1e-4)
