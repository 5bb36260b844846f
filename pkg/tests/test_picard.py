import math

import numpy as np
import pytest
from scipy.integrate import trapezoid

from flrw_ode.cosmology import CosmologyParams, weight_A
from flrw_ode.dynamics import Scenario, Trajectory, integrate_Y
from flrw_ode.errors import DomainError, NonContractionError, UnsupportedRegimeError
from flrw_ode.linear_propagator import build_fundamental, constant_coefficient, weight_coefficient
from flrw_ode.nonlinearity import NonlinearitySpec, eval_f
from flrw_ode.picard import (
    TheoremTag,
    apply_psi,
    existence_budget,
    homogeneous,
    norm_X,
    solve_fixed_point,
    solve_scenario,
)

FLAT = CosmologyParams(2, 0.0, 1.0, 0.0)


def test_psi_ignores_input_when_linear():
    pair = build_fundamental(constant_coefficient(2.0), 2.0, 1e-3)
    g = np.linspace(0, 2, 201)
    junk = Trajectory(g, np.column_stack([np.sin(7 * g), g**2]), np.zeros((201, 2)))
    out = apply_psi(pair, NonlinearitySpec(0.0, 3.0), (1.0, 0.5), (0.0, -1.0), junk)
    hom = homogeneous(pair, (1.0, 0.5), (0.0, -1.0), g)
    assert np.allclose(out.Y, hom.Y, atol=1e-13) and np.allclose(out.DtY, hom.DtY, atol=1e-13)


def test_psi_with_free_kernel():
    pair = build_fundamental(constant_coefficient(0.0), 1.0, 1e-3)
    g = np.linspace(0, 1, 1001)
    Y = Trajectory(g, np.column_stack([g, np.zeros_like(g)]), np.zeros((1001, 2)))
    spec = NonlinearitySpec(1.0, 3.0)
    out = apply_psi(pair, spec, (1.0, 0.0), (2.0, 0.0), Y)
    # f(Y) = t^3 e1, int_0^t (t - s) s^3 ds = t^5 / 20
    assert np.max(np.abs(out.Y[:, 0] - (1 + 2 * g - g**5 / 20))) < 1e-10
    assert np.max(np.abs(out.DtY[:, 0] - (2 - g**4 / 4))) < 1e-10


def test_grid_mismatch_is_rejected():
    pair = build_fundamental(constant_coefficient(0.0), 1.0, 1e-3)
    g = np.linspace(0, 2, 11)
    with pytest.raises(DomainError):
        apply_psi(pair, NonlinearitySpec(1, 3), (0.0,), (0.0,), Trajectory(g, np.zeros((11, 1)), np.zeros((11, 1))))


def test_linear_problem_converges_in_one_iteration():
    pair = build_fundamental(weight_coefficient(CosmologyParams(3, 0.5, 1, 1)), 2.0, 1e-3)
    res = solve_fixed_point(pair, NonlinearitySpec(0.0, 3.0), (0.3, 0, 0), (0, 0.2, 0), 2.0)
    assert res.iterations == 1 and res.residual == 0.0


def test_fixed_point_is_its_own_image():
    pair = build_fundamental(constant_coefficient(1.0), 1.0, 1e-3)
    spec = NonlinearitySpec(1.0, 3.0)
    res = solve_fixed_point(pair, spec, (0.5, 0.0), (0.0, 0.4), 1.0)
    again = apply_psi(pair, spec, (0.5, 0.0), (0.0, 0.4), res.trajectory)
    assert np.max(np.abs(again.Y - res.trajectory.Y)) <= 1e-8


def test_flat_case_matches_integrator():
    spec = NonlinearitySpec(1.0, 3.0)
    Y0, Y1 = (0.4, 0.0), (0.0, 0.3)
    b = existence_budget(FLAT, spec, Y0, Y1)
    T = 0.5
    s = Scenario(FLAT, spec, Y0, Y1, T)
    res = solve_scenario(s)
    ref = integrate_Y(s)
    assert np.array_equal(res.trajectory.grid, ref.grid)
    assert np.max(np.abs(res.trajectory.Y - ref.Y)) <= 1e-5
    assert b.theorem_tag is TheoremTag.THM2 and b.global_


def test_increments_contract_geometrically():
    pair = build_fundamental(constant_coefficient(0.5), 1.0, 1e-3)
    res = solve_fixed_point(pair, NonlinearitySpec(-1.0, 3.0), (0.5,), (0.5,), 1.0)
    inc = np.array(res.increments)
    assert len(inc) > 4
    assert np.all(inc[3:] / inc[2:-1] < 1)


def test_noncontraction_is_reported():
    pair = build_fundamental(constant_coefficient(0.0), 20.0, 1e-2)
    with pytest.raises(NonContractionError) as info:
        solve_fixed_point(pair, NonlinearitySpec(1.0, 3.0), (5.0,), (5.0,), 20.0, n_grid=2001)
    assert len(info.value.increments) >= 1


def test_budget_gate():
    pair = build_fundamental(constant_coefficient(0.0), 1.0, 1e-3)
    with pytest.raises(DomainError):
        solve_fixed_point(pair, NonlinearitySpec(1, 3), (0.1,), (0.0,), 1.0, budget=0.5)
    with pytest.warns(RuntimeWarning):
        solve_fixed_point(pair, NonlinearitySpec(1, 3), (0.1,), (0.0,), 1.0, budget=0.5,
                          allow_outside_budget=True)


def test_norms_of_zero_and_flat():
    g = np.linspace(0, 1, 101)
    zero = Trajectory(g, np.zeros((101, 2)), np.zeros((101, 2)))
    nz = norm_X(CosmologyParams(3, 0.0, 1, 1), zero, 1.0)
    assert (nz.x_norm, nz.sup_Y, nz.sup_DtY) == (0.0, 0.0, 0.0)
    tr = Trajectory(g, np.column_stack([np.sin(g), 0 * g]), np.column_stack([np.cos(g), 0 * g]))
    flat = norm_X(FLAT, tr, 1.0)
    assert flat.x_norm == pytest.approx(1.0) and flat.sup_Y == pytest.approx(math.sin(1.0))
    assert flat.xprime_norm is None


def test_norm_of_constant_state_in_expanding_case():
    # q0 = 2 / (1 + 1.5 t), A = q0^2 / 8: A(0) = 1/2, A(1) = 0.08
    p = CosmologyParams(3, 0.0, 1.0, 1.0)
    g = np.linspace(0, 1, 20001)
    tr = Trajectory(g, np.tile([1.0, 0.0], (len(g), 1)), np.zeros((len(g), 2)))
    nx = norm_X(p, tr, 1.0)
    assert nx.x_norm == pytest.approx(math.sqrt(0.5) + math.sqrt(0.42), rel=1e-8)
    assert nx.xprime_norm is None


def test_norms_grow_with_T():
    p = CosmologyParams(3, 1.0, 1.0, -1.0)
    s = Scenario(p, NonlinearitySpec(1.0, 3.0), (0.2, 0, 0), (0, 0.1, 0), 0.3)
    tr = integrate_Y(s)
    vals = [norm_X(p, tr, T).xprime_norm for T in (0.05, 0.1, 0.2, 0.3)]
    assert all(v is not None for v in vals) and np.all(np.diff(vals) >= 0)


def test_budget_regimes():
    grow = CosmologyParams(3, 0.5, 1.0, 1.0)
    b = existence_budget(grow, NonlinearitySpec(1.0, 3.0), (5.0, 0, 0), (5.0, 0, 0))
    assert b.theorem_tag is TheoremTag.THM1 and b.global_ and b.T_admissible == math.inf
    b = existence_budget(grow, NonlinearitySpec(-1.0, 3.0), (0.5, 0, 0), (0.5, 0, 0))
    assert b.theorem_tag is TheoremTag.THM1 and not b.global_ and 0 < b.T_admissible < math.inf
    crunch = CosmologyParams(3, 1 / 3, 1.0, -1.0)
    b = existence_budget(crunch, NonlinearitySpec(-1.0, 3.0), (0.01, 0, 0), (0.0, 0, 0))
    assert b.theorem_tag is TheoremTag.THM3 and b.global_ and b.T_admissible == pytest.approx(0.5)
    b = existence_budget(crunch, NonlinearitySpec(-1.0, 3.0), (30.0, 0, 0), (0.0, 0, 0))
    assert not b.global_ and 0 < b.T_admissible < 0.5
    with pytest.raises(UnsupportedRegimeError):
        existence_budget(CosmologyParams.de_sitter(2, 1.0), NonlinearitySpec(1, 3), (1, 0), (0, 0))
    with pytest.raises(ValueError):
        existence_budget(grow, NonlinearitySpec(-1.0, 1.5), (1, 0, 0), (0, 0, 0))


def test_zero_data_budget_is_maximal():
    for params in (CosmologyParams(2, 0.0, 1.0, 0.0), CosmologyParams(3, 0.5, 1.0, 1.0),
                   CosmologyParams(3, 1.0, 1.0, -1.0)):
        spec = NonlinearitySpec(-1.0, 3.0)
        zero = existence_budget(params, spec, (0.0,) * params.n, (0.0,) * params.n)
        some = existence_budget(params, spec, (0.3,) + (0.0,) * (params.n - 1), (0.0,) * params.n)
        assert zero.T_admissible >= some.T_admissible


def test_budget_nonincreasing_in_data_and_lambda(rng):
    cases = [CosmologyParams(3, 0.5, 1.0, 1.0), CosmologyParams(2, 0.0, 1.0, 0.0),
             CosmologyParams(3, -1 / 3, 1.0, -1.0), CosmologyParams(3, 1.0, 1.0, -1.0)]
    for _ in range(100):
        params = cases[rng.integers(4)]
        p = rng.uniform(2, 4)
        lam = -rng.uniform(0.1, 3)
        Y1 = (rng.uniform(0, 1),) + (0.0,) * (params.n - 1)
        Ya, Yb = sorted(rng.uniform(0, 2, 2))
        ta = existence_budget(params, NonlinearitySpec(lam, p), (Ya,) + Y1[1:], Y1).T_admissible
        tb = existence_budget(params, NonlinearitySpec(lam, p), (Yb,) + Y1[1:], Y1).T_admissible
        t2 = existence_budget(params, NonlinearitySpec(2 * lam, p), (Ya,) + Y1[1:], Y1).T_admissible
        assert (tb or 0.0) <= (ta or 0.0) * (1 + 1e-12)
        assert (t2 or 0.0) <= (ta or 0.0) * (1 + 1e-12)


def test_energy_estimate_constant_is_uniform(rng):
    # x_norm(T) <= K (D + ||f(Y)||_L1) with a K shared across the suite
    ratios = []
    for _ in range(15):
        params = CosmologyParams(3, rng.uniform(0, 1), 1.0, rng.uniform(0.2, 1.5))
        spec = NonlinearitySpec(rng.uniform(0, 1), rng.uniform(2, 3))
        Y0 = tuple(rng.uniform(-0.5, 0.5, 3))
        Y1 = tuple(rng.uniform(-0.5, 0.5, 3))
        s = Scenario(params, spec, Y0, Y1, 2.0)
        tr = solve_scenario(s).trajectory
        nx = norm_X(params, tr, 2.0)
        f = np.linalg.norm(eval_f(spec, tr.Y), axis=1)
        l1 = float(trapezoid(f, tr.grid))
        D = math.sqrt(float(weight_A(params, 0.0))) * np.linalg.norm(Y0) + np.linalg.norm(Y1)
        ratios.append(nx.x_norm / (D + l1))
    assert max(ratios) <= 100
