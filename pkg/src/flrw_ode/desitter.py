"""Closed-form solutions on de Sitter backgrounds, where ``A = -H^2``.

Covers the linear case ``p = 1`` (trigonometric, linear or exponential in
``t`` depending on the sign of ``lambda - H^2``), circular orbits of radius
``R`` for ``p != 1``, the solar-orbit angular velocity, and the sign test
that rules out global weak solutions of ``Y'' - H^2 Y + lambda |Y|^p = 0``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConsistencyError, DomainError

#: relative tolerance for the orbit-family checks on initial data
ORBIT_DATA_RTOL = 1e-10
#: relative tolerance for the threshold ``lambda R^{p-1} = H^2``
THRESHOLD_RTOL = 1e-12


class Branch(enum.Enum):
    TRIG_P1 = "TrigP1"
    LINEAR_P1 = "LinearP1"
    EXP_P1 = "ExpP1"
    ORBIT = "Orbit"
    CONSTANT_ORBIT = "ConstantOrbit"
    NULL_ONLY = "NullOnly"


@dataclass(frozen=True)
class DeSitterExact:
    """An exact solution; ``params`` holds the branch constants by name."""

    branch: Branch
    params: dict
    Y0: tuple
    Y1: tuple

    def evaluate(self, t):
        """``(Y, DtY)`` arrays of shape ``(len(t), n)``."""
        t = np.atleast_1d(np.asarray(t, dtype=float))[:, None]
        Y0, Y1 = np.array(self.Y0), np.array(self.Y1)
        b, k = self.branch, self.params
        if b is Branch.TRIG_P1:
            w = k["omega"]
            c, s = np.cos(w * t), np.sin(w * t)
            return Y0 * c + Y1 * s / w, -Y0 * w * s + Y1 * c
        if b is Branch.LINEAR_P1:
            return Y0 + Y1 * t, np.broadcast_to(Y1, (t.shape[0], Y1.size)).copy()
        if b is Branch.EXP_P1:
            m = k["kappa"]
            B, C = np.array(k["B"]), np.array(k["C"])
            ep, em = np.exp(m * t), np.exp(-m * t)
            return B * ep + C * em, m * (B * ep - C * em)
        if b is Branch.ORBIT:
            R, w, d = k["R"], k["omega"], k["delta"]
            phase = w * t[:, 0] + d
            Y = np.zeros((t.shape[0], Y0.size))
            DY = np.zeros_like(Y)
            Y[:, 0], Y[:, 1] = R * np.cos(phase), R * np.sin(phase)
            DY[:, 0], DY[:, 1] = -R * w * np.sin(phase), R * w * np.cos(phase)
            return Y, DY
        if b is Branch.CONSTANT_ORBIT:
            return np.broadcast_to(Y0, (t.shape[0], Y0.size)).copy(), np.zeros((t.shape[0], Y0.size))
        raise ValueError("only the zero solution has constant radius on this branch")


def p1_solution(H: float, lam: float, Y0, Y1) -> DeSitterExact:
    """Exact solution of ``Y'' - H^2 Y + lambda Y = 0``, branch by the sign of ``lambda - H^2``."""
    Y0 = tuple(float(v) for v in np.atleast_1d(Y0))
    Y1 = tuple(float(v) for v in np.atleast_1d(Y1))
    gap = lam - H * H
    if gap > 0:
        return DeSitterExact(Branch.TRIG_P1, {"omega": math.sqrt(gap)}, Y0, Y1)
    if gap == 0:
        return DeSitterExact(Branch.LINEAR_P1, {}, Y0, Y1)
    m = math.sqrt(-gap)
    y0, y1 = np.array(Y0), np.array(Y1)
    B = tuple(0.5 * (y0 + y1 / m))
    C = tuple(0.5 * (y0 - y1 / m))
    return DeSitterExact(Branch.EXP_P1, {"kappa": m, "B": B, "C": C}, Y0, Y1)


def exact_p1(H: float, lam: float, Y0, Y1, t) -> np.ndarray:
    return p1_solution(H, lam, Y0, Y1).evaluate(t)[0]


def exact_orbit(H: float, lam: float, p: float, Y0, Y1) -> DeSitterExact:
    """Circular solution with ``|Y| = R = |Y0|`` in the ``(Y^1, Y^2)`` plane.

    Initial data must sit on the family: higher components zero,
    ``Y0 . Y1 = 0``, ``|Y1| = R omega`` and counterclockwise rotation (the
    family's ``omega`` is positive).

    Raises:
        ConsistencyError: data off the circular family.
    """
    y0 = np.atleast_1d(np.asarray(Y0, dtype=float))
    y1 = np.atleast_1d(np.asarray(Y1, dtype=float))
    if y0.size < 2 or y0.shape != y1.shape:
        raise ValueError("orbit data need matching vectors with n >= 2")
    if p == 1:
        raise ValueError("p = 1 is the linear family; use p1_solution")
    if np.any(y0[2:] != 0) or np.any(y1[2:] != 0):
        raise ConsistencyError("components beyond the orbital plane must vanish")
    R = math.hypot(y0[0], y0[1])
    if R == 0:
        raise ValueError("orbit radius |Y0| must be positive")
    speed = math.hypot(y1[0], y1[1])
    key = (tuple(y0), tuple(y1))
    level = lam * R ** (p - 1)
    h2 = H * H
    if abs(level - h2) <= THRESHOLD_RTOL * max(abs(level), h2):
        if speed != 0:
            raise ConsistencyError("at the threshold radius the data must be at rest (Y1 = 0)")
        return DeSitterExact(Branch.CONSTANT_ORBIT, {"R": R}, *key)
    if level < h2:
        return DeSitterExact(Branch.NULL_ONLY, {"R": R}, *key)
    omega = math.sqrt(level - h2)
    if abs(float(y0 @ y1)) > ORBIT_DATA_RTOL * R * max(speed, R * omega):
        raise ConsistencyError("Y1 must be orthogonal to Y0 on a circular orbit")
    if abs(speed - R * omega) > ORBIT_DATA_RTOL * R * omega:
        raise ConsistencyError(f"|Y1| = {speed} differs from R omega = {R * omega}")
    if y0[0] * y1[1] - y0[1] * y1[0] <= 0:
        raise ConsistencyError("the circular family rotates counterclockwise")
    delta = math.atan2(y0[1], y0[0])
    return DeSitterExact(Branch.ORBIT, {"R": R, "omega": omega, "delta": delta}, *key)


def orbit_data(R: float, omega: float, delta: float = 0.0, n: int = 2):
    """Initial data ``(Y0, Y1)`` on the circular family."""
    Y0 = np.zeros(n)
    Y1 = np.zeros(n)
    Y0[:2] = R * math.cos(delta), R * math.sin(delta)
    Y1[:2] = -R * omega * math.sin(delta), R * omega * math.cos(delta)
    return Y0, Y1


@dataclass(frozen=True)
class OrbitConfig:
    """Two-body constants in km, kg and s; ``H_km_s_mpc`` in km s^-1 Mpc^-1."""

    G: float = 6.67408e-20
    M: float = 1.9884e30
    R: float = 1.496e8
    T: float = 3.1556925e7
    H_km_s_mpc: float = 70.0
    mpc_km: float = 3.085677581e19

    @property
    def H(self) -> float:
        """Hubble rate in s^-1."""
        return self.H_km_s_mpc / self.mpc_km


@dataclass(frozen=True)
class OrbitOmega:
    omega: float
    omegaT: float
    correction: float
    minkowski: float
    delta_omega: float


def orbit_omega(cfg: OrbitConfig) -> OrbitOmega:
    """Angular velocity ``sqrt(GM/R^3 - H^2)`` and its Minkowski comparison.

    ``delta_omega = sqrt(GM/R^3) - omega`` is computed without cancellation so
    that corrections far below machine epsilon remain visible.
    """
    gm = cfg.G * cfg.M
    w0 = math.sqrt(gm / cfg.R**3)
    corr = cfg.H**2 * cfg.R**3 / gm
    if corr >= 1:
        raise DomainError("GM/R^3 <= H^2: no real angular velocity")
    delta = -w0 * math.expm1(0.5 * math.log1p(-corr))
    omega = w0 * math.sqrt(1.0 - corr)
    return OrbitOmega(omega, w0 * cfg.T, corr, w0, delta)


class WeakVerdict(enum.Enum):
    NO_GLOBAL_WEAK_SOLUTION = "NoGlobalWeakSolution"
    INCONCLUSIVE = "Inconclusive"


def weak_blowup_verdict(H: float, lam: float, p: float, Y0: float, Y1: float) -> WeakVerdict:
    """Sign test for ``Y'' - H^2 Y + lambda |Y|^p = 0`` in one dimension.

    ``H Y0 + Y1 <= 0`` with nonzero data excludes a global weak solution; the
    converse is not claimed.
    """
    if np.ndim(Y0) or np.ndim(Y1):
        raise ValueError("the weak blow-up test is one-dimensional")
    if not lam > 0:
        raise ValueError("needs lambda > 0")
    if not 1 < p < math.inf:
        raise ValueError("needs 1 < p < inf")
    if not H >= 0:
        raise ValueError("needs H >= 0")
    if (Y0, Y1) != (0, 0) and H * Y0 + Y1 <= 0:
        return WeakVerdict.NO_GLOBAL_WEAK_SOLUTION
    return WeakVerdict.INCONCLUSIVE


def x_frame_condition(H: float, X0: float, X1: float) -> bool:
    """The same sign test in comoving variables ``X0 = Y0``, ``X1 = Y1 - H Y0``."""
    if np.ndim(X0) or np.ndim(X1):
        raise ValueError("the weak blow-up test is one-dimensional")
    return X1 + 2 * H * X0 <= 0
