"""Picard iteration for the integral form of the Cauchy problem.

The solution is the fixed point of

    Psi(Y)(t) = rho0(t) Y0 + rho1(t) Y1 - int_0^t rho12(t, s) f(Y)(s) ds

on a uniform grid.  The module also carries the weighted norms used in the
local existence argument and heuristic existence-time budgets.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.optimize import brentq

from . import cosmology
from .cosmology import CaseTag, CosmologyParams
from .dynamics import Trajectory, TrajectoryStatus
from .errors import DomainError, NonContractionError, UnsupportedRegimeError
from .linear_propagator import FundamentalPair, build_fundamental, duhamel, weight_coefficient
from .nonlinearity import NonlinearitySpec, eval_f

#: consecutive growing increments tolerated before giving up
GROWTH_STRIKES = 3


def _check_grid(pair: FundamentalPair, grid: np.ndarray):
    if grid[0] != 0.0 or grid[-1] > pair.t_end * (1 + 1e-14):
        raise DomainError(f"trajectory grid must lie in [0, {pair.t_end}] and start at 0")
    h = np.diff(grid)
    if np.any(h <= 0):
        raise DomainError("trajectory grid must be increasing")


def apply_psi(pair: FundamentalPair, spec: NonlinearitySpec, Y0, Y1, Y: Trajectory) -> Trajectory:
    """One application of the Picard operator, with its time derivative."""
    grid = np.asarray(Y.grid, dtype=float)
    _check_grid(pair, grid)
    forcing = -eval_f(spec, Y.Y)
    psi, dpsi = duhamel(pair, grid, Y0, Y1, forcing)
    return Trajectory(grid, psi, dpsi, TrajectoryStatus.COMPLETED, Y.params_hash)


def homogeneous(pair: FundamentalPair, Y0, Y1, grid) -> Trajectory:
    r0, d0, r1, d1 = pair.evaluate(np.asarray(grid, dtype=float))
    Y0, Y1 = np.asarray(Y0, float), np.asarray(Y1, float)
    Y = r0[:, None] * Y0 + r1[:, None] * Y1
    DY = d0[:, None] * Y0 + d1[:, None] * Y1
    return Trajectory(np.asarray(grid, float), Y, DY)


@dataclass(frozen=True)
class FixedPointResult:
    trajectory: Trajectory
    iterations: int
    residual: float
    increments: tuple[float, ...]


def _increment(a: Trajectory, b: Trajectory) -> float:
    return float(max(np.max(np.abs(a.Y - b.Y)), np.max(np.abs(a.DtY - b.DtY))))


def solve_fixed_point(
    pair: FundamentalPair,
    spec: NonlinearitySpec,
    Y0,
    Y1,
    T: float,
    max_iter: int = 200,
    tol: float = 1e-12,
    n_grid: int = 1001,
    budget: float | None = None,
    allow_outside_budget: bool = False,
) -> FixedPointResult:
    """Iterate ``Y_{k+1} = Psi(Y_k)`` from the homogeneous solution.

    Stops once the sup-norm increment (over ``Y`` and ``DtY``) drops below
    ``tol``.  When ``budget`` is given and ``T`` exceeds it, the call fails
    unless ``allow_outside_budget`` is set, in which case it only warns.

    Raises:
        NonContractionError: increments grew on 3 consecutive iterations,
            or ``max_iter`` was exhausted.
    """
    if not 0 < T <= pair.t_end * (1 + 1e-14):
        raise DomainError(f"T must lie in (0, {pair.t_end}]")
    if budget is not None and T > budget:
        msg = f"T = {T} exceeds the existence budget {budget}"
        if not allow_outside_budget:
            raise DomainError(msg)
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
    grid = np.linspace(0.0, min(T, pair.t_end), n_grid)
    current = homogeneous(pair, Y0, Y1, grid)
    increments: list[float] = []
    strikes = 0
    for k in range(1, max_iter + 1):
        nxt = apply_psi(pair, spec, Y0, Y1, current)
        if not (np.all(np.isfinite(nxt.Y)) and np.all(np.isfinite(nxt.DtY))):
            raise NonContractionError(f"iterate {k} is not finite", increments)
        inc = _increment(nxt, current)
        increments.append(inc)
        current = nxt
        if inc < tol:
            return FixedPointResult(current, k, inc, tuple(increments))
        if len(increments) > 1 and inc > increments[-2]:
            strikes += 1
            if strikes >= GROWTH_STRIKES:
                raise NonContractionError(
                    f"increments grew for {GROWTH_STRIKES} consecutive iterations", increments)
        else:
            strikes = 0
    raise NonContractionError(f"no convergence in {max_iter} iterations", increments)


def solve_scenario(scenario, step: float | None = None, n_grid: int = 1001,
                   tol: float = 1e-12, max_iter: int = 200, max_refine: int = 4,
                   stable_tol: float = 1e-9) -> FixedPointResult:
    """Fixed point for a :class:`~flrw_ode.dynamics.Scenario` on ``[0, t_end]``.

    The output grid is doubled until two successive solutions agree to
    ``stable_tol`` on the coarse nodes (or ``max_refine`` is reached).
    """
    params = scenario.cosmology
    coeff = weight_coefficient(params)
    if step is None:
        amax = float(np.max(np.abs(cosmology.weight_A(params, np.linspace(0, scenario.t_end, 64)))))
        step = min(1e-3, 0.01 / math.sqrt(max(amax, 1e-300)))
    pair = build_fundamental(coeff, scenario.t_end, step)
    res = solve_fixed_point(pair, scenario.nonlinearity, scenario.y0, scenario.y1,
                            scenario.t_end, max_iter, tol, n_grid)
    stride = 1
    for _ in range(max_refine):
        n_fine = 2 * (n_grid - 1) + 1
        fine = solve_fixed_point(pair, scenario.nonlinearity, scenario.y0, scenario.y1,
                                 scenario.t_end, max_iter, tol, n_fine)
        delta = float(np.max(np.abs(fine.trajectory.Y[::2] - res.trajectory.Y)))
        res, n_grid, stride = fine, n_fine, 2 * stride
        if delta < stable_tol:
            break
    traj = res.trajectory
    coarse = Trajectory(traj.grid[::stride], traj.Y[::stride], traj.DtY[::stride],
                        TrajectoryStatus.COMPLETED, scenario.digest())
    return FixedPointResult(coarse, res.iterations, res.residual, res.increments)


@dataclass(frozen=True)
class WeightedNorms:
    """Weighted norms of a trajectory on ``[0, T]``.

    ``x_norm`` needs ``A >= 0, DtA <= 0`` and ``xprime_norm`` needs
    ``A > 0, DtA >= 0`` on the samples; otherwise they are ``None``.
    """

    x_norm: float | None
    xprime_norm: float | None
    sup_Y: float
    sup_DtY: float


def norm_X(params: CosmologyParams, Y: Trajectory, T: float) -> WeightedNorms:
    grid = np.asarray(Y.grid)
    mask = grid <= T * (1 + 1e-14)
    t = grid[mask]
    if len(t) == 0:
        raise DomainError("T precedes the trajectory grid")
    y = np.linalg.norm(Y.Y[mask], axis=1)
    dy = np.linalg.norm(Y.DtY[mask], axis=1)
    A = np.asarray(cosmology.weight_A(params, t), dtype=float)
    dA = np.asarray(cosmology.weight_A_rate(params, t), dtype=float)
    sup_y = float(np.max(y))
    sup_dy = float(np.max(dy))

    def l2(w, v):
        if len(t) < 2:
            return 0.0
        return math.sqrt(float(cumulative_trapezoid(w * v**2, t)[-1]))

    x_norm = None
    if np.all(A >= 0) and np.all(dA <= 0):
        x_norm = sup_dy + float(np.max(np.sqrt(A) * y)) + l2(-dA, y)
    xprime_norm = None
    if np.all(A > 0) and np.all(dA >= 0):
        xprime_norm = float(np.max(dy / np.sqrt(A))) + sup_y + l2(dA / A**2, dy)
    return WeightedNorms(x_norm, xprime_norm, sup_y, sup_dy)


class TheoremTag(enum.Enum):
    THM1 = "Thm1"
    THM2 = "Thm2"
    THM3 = "Thm3"


@dataclass(frozen=True)
class ExistenceBudget:
    """Heuristic existence time from the local theory.

    ``T_admissible`` is ``None`` when the formula admits no positive time.
    """

    theorem_tag: TheoremTag
    T_admissible: float | None
    constants: tuple[float, float]
    q_star: float | None
    global_: bool
    D: float
    heuristic: bool = True
    note: str = ""


def _budget_expanding(params, spec, y0, y1, C0, C, q_star):
    p = spec.p
    if not 1 <= q_star <= math.inf:
        raise ValueError("q_star must lie in [1, inf]")
    if 1.0 - p / 2.0 > 1.0 / q_star + 1e-15:
        raise ValueError(f"q_star = {q_star} violates 1 - p/2 <= 1/q_star for p = {p}")
    A0 = float(cosmology.weight_A(params, 0.0))
    D = math.sqrt(A0) * y0 + y1
    hz = cosmology.horizon(params)
    T1 = hz.t1
    T0 = hz.t0
    if spec.lam >= 0 and spec.is_vector:
        return ExistenceBudget(TheoremTag.THM1, T1, (C0, C), q_star, True, D,
                               note="energy bound: time can be taken up to T1")
    K = C * abs(spec.lam)
    R = 2 * C0 * D
    if K == 0 or R == 0:
        return ExistenceBudget(TheoremTag.THM1, T1, (C0, C), q_star, False, D,
                               note="vanishing nonlinear term")
    absT0 = abs(T0)
    Cp = (2 * params.a1 / params.a0) ** (-p - 1 + 1 / q_star)
    if math.isfinite(q_star):
        Cp *= ((p + 1) * q_star) ** (-1 / q_star)
        # log-space: the bracket overflows for small data or large q_star
        log_x = -q_star * math.log(2 * K * Cp * R ** (p - 1)) - math.log(absT0)
        arg = np.logaddexp(0.0, log_x) / ((p + 1) * q_star)
        T = absT0 * math.expm1(arg) if arg < 700 else math.inf
    else:
        T = absT0 * ((2 * K * Cp * R ** (p - 1)) ** (-1 / (p + 1)) - 1)
    if not T > 0:
        return ExistenceBudget(TheoremTag.THM1, None, (C0, C), q_star, False, D,
                               note="no admissible T from this formula")
    return ExistenceBudget(TheoremTag.THM1, min(T, T1), (C0, C), q_star, False, D)


def _flat_time(R0, lam_c, p, C0, y1):
    cands = [lam_c * R0 ** (1 - p), lam_c * R0 ** ((1 - p) / 2),
             math.sqrt(lam_c / 2) * R0 ** ((1 - p) / 2)]
    if y1 > 0:
        cands.append(R0 / (2 * C0 * y1))
    return min(cands)


def _budget_flat(params, spec, y0, y1, C0, C):
    p, lam = spec.p, spec.lam
    hz = cosmology.horizon(params)
    D = y0 + y1
    glob = lam == 0 or (lam >= 0 and spec.is_vector)
    if glob:
        return ExistenceBudget(TheoremTag.THM2, hz.t1, (C0, C), None, True, D,
                               note="energy bound gives a global solution")
    if D == 0:
        return ExistenceBudget(TheoremTag.THM2, hz.t1, (C0, C), None, False, D,
                               note="zero data")
    lam_c = C / abs(lam)
    # with Y0 = 0 the optimum is the interior crossing, away from R0 = 0
    R_lo = 2 * y0 if y0 > 0 else 1e-12
    if y1 == 0 or p <= 1:
        # every candidate but the last is nonincreasing in R0 for p >= 1
        R0 = R_lo
    else:
        # the increasing last term meets the decreasing minimum once
        def gap(r):
            return r / (2 * C0 * y1) - _flat_time(r, lam_c, p, C0, 0.0)

        if gap(R_lo) >= 0:
            R0 = R_lo
        else:
            hi = max(2 * R_lo, 1.0)
            while gap(hi) < 0:
                hi *= 2
            R0 = brentq(gap, R_lo, hi, xtol=1e-14, rtol=1e-14)
    T = _flat_time(R0, lam_c, p, C0, y1)
    glob = params.critical_gap == 0 and params.a1 < 0 and T >= hz.t0
    return ExistenceBudget(TheoremTag.THM2, min(T, hz.t1), (C0, C), None, glob, D)


def _budget_contracting(params, spec, y0, y1, C0, C):
    p, lam = spec.p, spec.lam
    hz = cosmology.horizon(params)
    T0 = hz.t0
    A0 = float(cosmology.weight_A(params, 0.0))
    Dp = y0 + y1 / math.sqrt(A0)
    if lam >= 0 and spec.is_vector:
        return ExistenceBudget(TheoremTag.THM3, T0, (C0, C), None, True, Dp,
                               note="energy bound gives existence up to T0")
    small = (2 * C * abs(lam) * params.a0**2 / (params.n * (1 + params.sigma) * params.a1**2)
             * (C0 * Dp) ** (p - 1))
    if small <= 1:
        return ExistenceBudget(TheoremTag.THM3, T0, (C0, C), None, True, Dp,
                               note="small data")
    k = C * abs(lam) * params.a0 / abs(params.a1) * (C0 * Dp) ** (p - 1)
    kT0 = k * T0
    if kT0 <= 2:
        T = T0
    else:
        T = T0 * (1 - math.sqrt(1 - 2 / kT0))
    return ExistenceBudget(TheoremTag.THM3, T, (C0, C), None, False, Dp)


def existence_budget(params: CosmologyParams, spec: NonlinearitySpec, Y0, Y1,
                     constants=(1.0, 1.0), q_star: float = math.inf) -> ExistenceBudget:
    """Existence time predicted by the theorem matching the regime.

    Cases I, II, III and IV map to the expanding-weight, flat-weight and
    contracting-weight estimates respectively.  ``constants = (C0, C)``
    stands in for the unspecified constants of the estimates.

    Raises:
        UnsupportedRegimeError: regime ``Other``.
    """
    C0, C = (float(c) for c in constants)
    y0 = float(np.linalg.norm(np.atleast_1d(Y0)))
    y1 = float(np.linalg.norm(np.atleast_1d(Y1)))
    tag = cosmology.classify(params).case_tag
    if tag is CaseTag.I:
        return _budget_expanding(params, spec, y0, y1, C0, C, q_star)
    if tag in (CaseTag.II, CaseTag.III):
        return _budget_flat(params, spec, y0, y1, C0, C)
    if tag is CaseTag.IV:
        return _budget_contracting(params, spec, y0, y1, C0, C)
    raise UnsupportedRegimeError(f"no existence estimate for {params}")
