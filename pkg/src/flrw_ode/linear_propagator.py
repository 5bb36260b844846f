"""Fundamental solutions of ``rho'' + c(t) rho = 0``.

``rho0`` and ``rho1`` start from ``(1, 0)`` and ``(0, 1)``; the matrix
``Phi = [[rho0, rho1], [rho0', rho1']]`` propagates any homogeneous solution
and, through the kernels ``rho12``/``rho22``, the forced one as well.

The pair is computed numerically with classical RK4 on a uniform grid.  The
iterated-integral (Peano-Baker) representation of ``Phi`` is kept as an
independent small-``t`` oracle.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import cumulative_simpson
from scipy.interpolate import CubicHermiteSpline

from . import cosmology
from .errors import DomainError

#: Slack added to every right-hand side of the energy bounds.
BOUND_SLACK = 1e-10
#: A Peano-Baker term below this max-norm counts as converged.
SERIES_TOL = 1e-10


@dataclass(frozen=True)
class CoefficientFn:
    """Continuous coefficient ``c(t)`` on ``[0, domain_end)``."""

    func: Callable
    domain_end: float = math.inf
    name: str = ""

    def __call__(self, t):
        return self.func(t)

    def sample(self, times) -> np.ndarray:
        times = np.asarray(times, dtype=float)
        if times.size and times.max() >= self.domain_end:
            raise DomainError(f"coefficient {self.name!r} defined only below t = {self.domain_end}")
        try:
            vals = np.asarray(self.func(times), dtype=float)
            if vals.shape != times.shape:
                vals = np.broadcast_to(vals, times.shape).astype(float)
        except (TypeError, ValueError):
            vals = np.array([float(self.func(float(s))) for s in times.ravel()]).reshape(times.shape)
        if not np.all(np.isfinite(vals)):
            raise DomainError(f"coefficient {self.name!r} is not finite on the requested times")
        return vals


def constant_coefficient(c: float) -> CoefficientFn:
    return CoefficientFn(lambda t: np.full(np.shape(t), float(c)) if np.ndim(t) else float(c),
                         name=f"const({c})")


def weight_coefficient(params: cosmology.CosmologyParams) -> CoefficientFn:
    """The cosmological weight ``A(t)`` as a coefficient."""
    hz = cosmology.horizon(params)
    end = hz.t_max if hz.finite else math.inf
    # t_max itself is admissible for A, so open the interval by one ulp
    if math.isfinite(end):
        end = math.nextafter(end, math.inf)
    return CoefficientFn(lambda t: cosmology.weight_A(params, t), domain_end=end,
                         name=f"A[{params}]")


@dataclass(frozen=True, eq=False)
class FundamentalPair:
    """``rho0, rho1`` and their derivatives sampled on a uniform grid."""

    grid: np.ndarray
    rho0: np.ndarray
    drho0: np.ndarray
    rho1: np.ndarray
    drho1: np.ndarray
    coeff_values: np.ndarray
    _splines: tuple = field(default=(), repr=False)

    @property
    def t_end(self) -> float:
        return float(self.grid[-1])

    def wronskian(self) -> np.ndarray:
        return self.rho0 * self.drho1 - self.drho0 * self.rho1

    def evaluate(self, t):
        """``(rho0, drho0, rho1, drho1)`` at ``t`` by cubic Hermite interpolation."""
        t_arr = np.asarray(t, dtype=float)
        if np.any(t_arr < 0) or np.any(t_arr > self.t_end * (1 + 1e-14)):
            raise DomainError(f"t outside the grid [0, {self.t_end}]")
        t_arr = np.minimum(t_arr, self.t_end)
        vals = tuple(s(t_arr) for s in self._splines)
        if np.ndim(t) == 0:
            return tuple(float(v) for v in vals)
        return vals


def _make_pair(grid, r0, d0, r1, d1, c) -> FundamentalPair:
    # second derivatives come from the equation itself
    splines = (
        CubicHermiteSpline(grid, r0, d0),
        CubicHermiteSpline(grid, d0, -c * r0),
        CubicHermiteSpline(grid, r1, d1),
        CubicHermiteSpline(grid, d1, -c * r1),
    )
    return FundamentalPair(grid, r0, d0, r1, d1, c, splines)


def build_fundamental(coeff: CoefficientFn, t_end: float, step: float) -> FundamentalPair:
    """Integrate both fundamental solutions with RK4.

    The step is shrunk so that an integer number of steps lands on ``t_end``.
    """
    if not step > 0:
        raise ValueError("step must be positive")
    if not 0 < t_end < coeff.domain_end:
        raise DomainError(f"t_end must lie in (0, {coeff.domain_end})")
    n_steps = max(1, math.ceil(t_end / step - 1e-9))
    h = t_end / n_steps
    fine = np.linspace(0.0, t_end, 2 * n_steps + 1)
    c_fine = coeff.sample(fine)

    out = np.empty((n_steps + 1, 4))
    # state (rho0, drho0, rho1, drho1); both columns share the coefficient
    x0, v0, x1, v1 = 1.0, 0.0, 0.0, 1.0
    out[0] = x0, v0, x1, v1
    h2 = 0.5 * h
    for k in range(n_steps):
        ca, cm, cb = c_fine[2 * k], c_fine[2 * k + 1], c_fine[2 * k + 2]
        res = []
        for x, v in ((x0, v0), (x1, v1)):
            k1x, k1v = v, -ca * x
            k2x, k2v = v + h2 * k1v, -cm * (x + h2 * k1x)
            k3x, k3v = v + h2 * k2v, -cm * (x + h2 * k2x)
            k4x, k4v = v + h * k3v, -cb * (x + h * k3x)
            res.append((x + h / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x),
                        v + h / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v)))
        (x0, v0), (x1, v1) = res
        out[k + 1] = x0, v0, x1, v1

    grid = fine[::2].copy()
    return _make_pair(grid, out[:, 0], out[:, 1], out[:, 2], out[:, 3], c_fine[::2].copy())


def _check_ts(pair: FundamentalPair, t, s):
    t, s = np.asarray(t, float), np.asarray(s, float)
    if np.any(s < 0) or np.any(s > t) or np.any(t > pair.t_end * (1 + 1e-14)):
        raise DomainError("kernel needs 0 <= s <= t <= grid end")


def kernel_rho12(pair: FundamentalPair, t, s):
    """``rho12(t, s) = -rho0(t) rho1(s) + rho1(t) rho0(s)``."""
    _check_ts(pair, t, s)
    r0t, _, r1t, _ = pair.evaluate(t)
    r0s, _, r1s, _ = pair.evaluate(s)
    return -r0t * r1s + r1t * r0s


def kernel_rho22(pair: FundamentalPair, t, s):
    """``rho22(t, s) = -rho0'(t) rho1(s) + rho1'(t) rho0(s)``."""
    _check_ts(pair, t, s)
    _, d0t, _, d1t = pair.evaluate(t)
    r0s, _, r1s, _ = pair.evaluate(s)
    return -d0t * r1s + d1t * r0s


def duhamel(pair: FundamentalPair, grid, init, dinit, forcing):
    """Solution of ``rho'' + c rho = b`` from the variation-of-constants formula.

    ``forcing`` holds ``b`` on ``grid`` with shape ``(len(grid),)`` or
    ``(len(grid), n)``; ``init``/``dinit`` are ``rho(0)``/``rho'(0)``.
    Returns ``(rho, rho')`` on ``grid``.  Convolutions with ``rho12``/``rho22``
    separate into cumulative integrals, evaluated by composite Simpson.
    """
    grid = np.asarray(grid, dtype=float)
    b = np.asarray(forcing, dtype=float)
    if grid[0] != 0.0:
        raise DomainError("grid must start at 0")
    r0, d0, r1, d1 = pair.evaluate(grid)
    if b.ndim == 2:
        r0, d0, r1, d1 = (v[:, None] for v in (r0, d0, r1, d1))
    i0 = cumulative_simpson(r0 * b, x=grid, axis=0, initial=0.0)
    i1 = cumulative_simpson(r1 * b, x=grid, axis=0, initial=0.0)
    init = np.asarray(init, dtype=float)
    dinit = np.asarray(dinit, dtype=float)
    rho = r0 * init + r1 * dinit - r0 * i1 + r1 * i0
    drho = d0 * init + d1 * dinit - d0 * i1 + d1 * i0
    return rho, drho


@dataclass(frozen=True)
class PeanoBakerResult:
    matrix: np.ndarray
    terms: int
    last_term_norm: float

    @property
    def converged(self) -> bool:
        return self.last_term_norm < SERIES_TOL


def peano_baker(coeff: CoefficientFn, t: float, terms: int, quad_points: int = 201) -> PeanoBakerResult:
    """Truncated iterated-integral series ``sum_{m <= terms} Phi_m(t)``.

    Each term is the cumulative integral of ``[[0, 1], [-c, 0]] Phi_{m-1}``
    over a shared grid of ``quad_points`` nodes on ``[0, t]`` (composite
    Simpson), so all nesting levels reuse the same quadrature.  A warning
    is issued when the last included term is not below ``1e-10``.
    """
    if terms < 0:
        raise ValueError("terms must be nonnegative")
    if t == 0:
        return PeanoBakerResult(np.eye(2), terms, 0.0)
    if quad_points < 3:
        raise ValueError("quad_points must be at least 3")
    s = np.linspace(0.0, t, quad_points)
    c = coeff.sample(s)
    gen = np.zeros((quad_points, 2, 2))
    gen[:, 0, 1] = 1.0
    gen[:, 1, 0] = -c
    term = np.broadcast_to(np.eye(2), (quad_points, 2, 2)).copy()
    total = term[-1].copy()
    last = 1.0
    for _ in range(terms):
        term = cumulative_simpson(gen @ term, x=s, axis=0, initial=0.0)
        total += term[-1]
        last = float(np.max(np.abs(term[-1])))
    res = PeanoBakerResult(total, terms, last)
    if not res.converged:
        warnings.warn(f"Peano-Baker series not converged at t={t}: last term {last:.3e}",
                      RuntimeWarning, stacklevel=2)
    return res


@dataclass(frozen=True)
class BoundCheck:
    name: str
    skipped: bool
    max_excess: float
    violations: int
    worst_time: float | None = None


@dataclass(frozen=True)
class BoundReport:
    applicable: bool
    reason: str
    checks: tuple[BoundCheck, ...] = ()

    @property
    def violations(self) -> list[BoundCheck]:
        return [c for c in self.checks if c.violations]

    @property
    def ok(self) -> bool:
        return self.applicable and not self.violations


def _bound(name, grid, value, rhs, usable) -> BoundCheck:
    usable = np.asarray(usable, dtype=bool)
    if not usable.any():
        return BoundCheck(name, True, 0.0, 0)
    excess = np.where(usable, np.abs(value) - (rhs + BOUND_SLACK), -np.inf)
    worst = int(np.argmax(excess))
    n_viol = int(np.count_nonzero(excess > 0))
    return BoundCheck(name, False, float(excess[worst] + BOUND_SLACK), n_viol,
                      float(grid[worst]) if n_viol else None)


def _monotone(c: np.ndarray, sign: int) -> bool:
    tol = 1e-12 * max(1.0, float(np.max(np.abs(c))))
    return bool(np.all(sign * np.diff(c) >= -tol))


def check_bounds_decreasing(pair: FundamentalPair, coeff: CoefficientFn | None = None) -> BoundReport:
    """Energy bounds valid for a nonnegative, nonincreasing coefficient.

    ``max_excess`` reports ``max(|value| - bound)`` (negative means margin).
    """
    c = pair.coeff_values if coeff is None else coeff.sample(pair.grid)
    if np.any(c < 0) or not _monotone(c, -1):
        return BoundReport(False, "coefficient is not nonnegative and nonincreasing on the grid")
    c0 = c[0]
    pos = c > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        checks = (
            _bound("|rho0| <= sqrt(c(0)/c(t))", pair.grid, pair.rho0, np.sqrt(c0 / c), pos),
            _bound("|rho0'| <= sqrt(c(0))", pair.grid, pair.drho0, np.full_like(c, math.sqrt(c0)), np.ones_like(pos)),
            _bound("|rho1| <= 1/sqrt(c(t))", pair.grid, pair.rho1, 1.0 / np.sqrt(c), pos),
            _bound("|rho1'| <= 1", pair.grid, pair.drho1, np.ones_like(c), np.ones_like(pos)),
        )
    return BoundReport(True, "", checks)


def check_bounds_increasing(pair: FundamentalPair, coeff: CoefficientFn | None = None) -> BoundReport:
    """Energy bounds valid for a positive, nondecreasing coefficient."""
    c = pair.coeff_values if coeff is None else coeff.sample(pair.grid)
    if np.any(c <= 0) or not _monotone(c, +1):
        return BoundReport(False, "coefficient is not positive and nondecreasing on the grid")
    c0 = c[0]
    every = np.ones_like(c, dtype=bool)
    checks = (
        _bound("|rho0| <= 1", pair.grid, pair.rho0, np.ones_like(c), every),
        _bound("|rho0'| <= sqrt(c(t))", pair.grid, pair.drho0, np.sqrt(c), every),
        _bound("|rho1| <= 1/sqrt(c(0))", pair.grid, pair.rho1, np.full_like(c, 1.0 / math.sqrt(c0)), every),
        _bound("|rho1'| <= sqrt(c(t)/c(0))", pair.grid, pair.drho1, np.sqrt(c / c0), every),
    )
    return BoundReport(True, "", checks)
