import dataclasses
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from flrw_ode.cosmology import CosmologyParams
from flrw_ode.errors import DomainError
from flrw_ode.linear_propagator import (
    CoefficientFn,
    build_fundamental,
    check_bounds_decreasing,
    check_bounds_increasing,
    constant_coefficient,
    duhamel,
    kernel_rho12,
    kernel_rho22,
    peano_baker,
    weight_coefficient,
)


def test_free_particle():
    pair = build_fundamental(constant_coefficient(0.0), 3.0, 0.01)
    assert np.allclose(pair.rho0, 1.0, atol=1e-15)
    assert np.allclose(pair.rho1, pair.grid, atol=1e-13)
    assert (pair.rho0[0], pair.drho0[0], pair.rho1[0], pair.drho1[0]) == (1.0, 0.0, 0.0, 1.0)


def test_harmonic_and_hyperbolic_closed_forms():
    pair = build_fundamental(constant_coefficient(4.0), 5.0, 1e-3)
    t = pair.grid
    assert np.max(np.abs(pair.rho0 - np.cos(2 * t))) < 1e-10
    assert np.max(np.abs(pair.rho1 - 0.5 * np.sin(2 * t))) < 1e-10
    H = 0.8
    pair = build_fundamental(constant_coefficient(-H * H), 4.0, 1e-3)
    assert np.max(np.abs(pair.rho1 - np.sinh(H * pair.grid) / H)) < 1e-10


def test_step_refinement_is_fourth_order():
    coeff = CoefficientFn(lambda t: 1.0 + 0.5 * np.sin(3 * t))
    ref = build_fundamental(coeff, 2.0, 1e-4)
    errs = [abs(build_fundamental(coeff, 2.0, h).rho1[-1] - ref.rho1[-1]) for h in (0.04, 0.02)]
    assert 10 < errs[0] / errs[1] < 24


def test_interpolation_between_nodes():
    pair = build_fundamental(constant_coefficient(4.0), 2.0, 1e-3)
    t = np.linspace(0.0, 2.0, 777)
    r0, d0, r1, d1 = pair.evaluate(t)
    assert np.max(np.abs(r0 - np.cos(2 * t))) < 1e-10
    assert np.max(np.abs(d1 - np.cos(2 * t))) < 1e-10
    with pytest.raises(DomainError):
        pair.evaluate(2.5)


def test_domain_of_coefficient():
    coeff = weight_coefficient(CosmologyParams(3, 1 / 3, 1.0, -1.0))
    with pytest.raises(DomainError):
        build_fundamental(coeff, 0.5, 1e-3)
    pair = build_fundamental(coeff, 0.45, 1e-3)
    assert np.max(np.abs(pair.wronskian() - 1)) < 1e-8


def test_kernels():
    free = build_fundamental(constant_coefficient(0.0), 2.0, 1e-3)
    assert kernel_rho12(free, 1.5, 0.4) == pytest.approx(1.1, abs=1e-12)
    assert kernel_rho22(free, 1.5, 0.4) == pytest.approx(1.0, abs=1e-12)
    osc = build_fundamental(constant_coefficient(9.0), 2.0, 1e-3)
    t, s = 1.7, 0.35
    assert kernel_rho12(osc, t, s) == pytest.approx(math.sin(3 * (t - s)) / 3, abs=1e-10)
    assert kernel_rho22(osc, t, s) == pytest.approx(math.cos(3 * (t - s)), abs=1e-10)
    assert kernel_rho12(osc, t, t) == pytest.approx(0.0, abs=1e-12)
    assert kernel_rho22(osc, t, t) == pytest.approx(1.0, abs=1e-9)
    assert kernel_rho12(osc, t, 0.0) == pytest.approx(osc.evaluate(t)[2], abs=1e-15)
    with pytest.raises(DomainError):
        kernel_rho12(osc, 0.3, 0.5)
    with pytest.raises(DomainError):
        kernel_rho22(osc, 2.5, 0.5)


def test_duhamel_matches_direct_integration():
    c = CoefficientFn(lambda t: 2.0 + np.cos(t))
    pair = build_fundamental(c, 4.0, 1e-3)
    grid = np.linspace(0, 4.0, 2001)
    b = np.exp(-grid) * np.sin(5 * grid)
    rho, drho = duhamel(pair, grid, 0.3, -0.7, b)
    sol = solve_ivp(lambda t, y: [y[1], -(2 + np.cos(t)) * y[0] + np.exp(-t) * np.sin(5 * t)],
                    (0, 4.0), [0.3, -0.7], t_eval=grid, rtol=1e-12, atol=1e-12)
    assert np.max(np.abs(rho - sol.y[0])) < 1e-6
    assert np.max(np.abs(drho - sol.y[1])) < 1e-6


def test_homogeneous_combination_solves_the_ode():
    c = CoefficientFn(lambda t: 1.0 + t**2)
    pair = build_fundamental(c, 2.0, 1e-3)
    y = 0.4 * pair.rho0 - 1.3 * pair.rho1
    h = pair.grid[1] - pair.grid[0]
    d2 = (-y[:-4] + 16 * y[1:-3] - 30 * y[2:-2] + 16 * y[3:-1] - y[4:]) / (12 * h**2)
    assert np.max(np.abs(d2 + pair.coeff_values[2:-2] * y[2:-2])) < 1e-6


def test_peano_baker_examples():
    res = peano_baker(constant_coefficient(3.0), 0.0, 5)
    assert np.array_equal(res.matrix, np.eye(2))
    res = peano_baker(constant_coefficient(0.0), 0.7, 3)
    assert np.allclose(res.matrix, [[1, 0.7], [0, 1]], atol=1e-15)
    res = peano_baker(constant_coefficient(1.0), 0.1, 8)
    assert res.converged
    t = 0.1
    assert np.allclose(res.matrix, [[math.cos(t), math.sin(t)], [-math.sin(t), math.cos(t)]], atol=1e-8)


def test_peano_baker_warns_when_truncated():
    with pytest.warns(RuntimeWarning):
        res = peano_baker(constant_coefficient(4.0), 2.0, 3)
    assert not res.converged


def test_bound_checks_constant_and_degenerate():
    pair = build_fundamental(constant_coefficient(2.0), 10.0, 1e-3)
    rep = check_bounds_decreasing(pair)
    assert rep.ok and all(not c.skipped for c in rep.checks)
    assert check_bounds_increasing(pair).ok
    zero = build_fundamental(constant_coefficient(0.0), 3.0, 1e-2)
    rep = check_bounds_decreasing(zero)
    assert rep.applicable
    skipped = [c.name for c in rep.checks if c.skipped]
    assert any("1/sqrt" in n for n in skipped)
    assert not check_bounds_increasing(zero).applicable


def test_bound_checks_precondition_vs_violation():
    rising = CoefficientFn(lambda t: 1.0 + t)
    pair = build_fundamental(rising, 3.0, 1e-3)
    assert not check_bounds_decreasing(pair).applicable
    assert check_bounds_increasing(pair).ok


def test_bound_checks_cosmology_weights():
    p1 = CosmologyParams(3, 0.5, 1.0, 1.0)
    assert check_bounds_decreasing(build_fundamental(weight_coefficient(p1), 10.0, 1e-3)).ok
    p4 = CosmologyParams(3, 1.0, 1.0, -1.0)
    t_end = 0.9 * (-2 / (3 * 2 * -1.0))
    assert check_bounds_increasing(build_fundamental(weight_coefficient(p4), t_end, 1e-4)).ok


def test_violation_is_reported():
    # a decreasing coefficient with data inflated beyond the bound
    pair = build_fundamental(constant_coefficient(1.0), 5.0, 1e-2)
    bad = dataclasses.replace(pair, drho1=pair.drho1 * 1.5)
    rep = check_bounds_decreasing(bad)
    assert rep.applicable and not rep.ok
    assert rep.violations[0].name.startswith("|rho1'|")
    assert rep.violations[0].max_excess > 0.4


@settings(max_examples=40, deadline=None)
@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(0.5, 4), st.floats(0.5, 3))
def test_wronskian_random_coefficients(c0, c1, w, t_end):
    coeff = CoefficientFn(lambda t: c0 + c1 * np.sin(w * t))
    pair = build_fundamental(coeff, t_end, 1e-3)
    assert np.max(np.abs(pair.wronskian() - 1)) < 1e-8


def test_scalar_fallback_loop():
    def scalar_only(t):
        return math.cos(t) + 2.0

    coeff = CoefficientFn(scalar_only)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        vals = coeff.sample(np.array([0.0, 1.0]))
    assert vals.tolist() == [3.0, math.cos(1.0) + 2.0]
