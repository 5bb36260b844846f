"""Reference integrators for the Cauchy problem and its comoving frame.

``integrate_Y`` solves ``Y'' + A(t) Y + f(Y) = 0`` directly.  ``integrate_X``
solves the comoving-frame equation ``X'' + q0 X' + a^{-1} f(a X) = 0`` for
``X = Y / a``; for the vector nonlinearity the last term is the potential
force ``lambda |Y|^{p-1} X``.  Both use the same adaptive Dormand-Prince
pair, sample the solution on a uniform output grid through the dense
interpolant and stop early on blow-up or step-size underflow.
"""

from __future__ import annotations

import enum
import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import cosmology
from ._dopri import DenseSolution, StopReason, dopri45, locate_crossing
from .cosmology import CosmologyParams
from .errors import DomainError, StepFloorError
from .nonlinearity import NonlinearityKind, NonlinearitySpec, eval_f

DEFAULT_GRID = 1001
DEFAULT_BLOW_THRESHOLD = 1e8
BLOWUP_THRESHOLDS = (1e4, 1e6, 1e8)
#: successive crossing gaps must shrink at least this fast to count as escape
BLOWUP_GAP_RATIO = 0.9


class TrajectoryStatus(enum.Enum):
    COMPLETED = "Completed"
    BLOW_UP = "BlowUpDetected"
    HORIZON = "HorizonReached"
    STEP_FLOOR = "StepFloor"


@dataclass(frozen=True)
class Scenario:
    """A fully specified Cauchy problem plus solver settings.

    ``t_end`` beyond the admissible horizon is clipped to ``(1 - 1e-9) T1``
    when ``clip_to_horizon`` is set, otherwise rejected.
    """

    cosmology: CosmologyParams
    nonlinearity: NonlinearitySpec
    Y0: tuple
    Y1: tuple
    t_end: float
    rtol: float = 1e-10
    atol: float = 1e-10
    blow_threshold: float = DEFAULT_BLOW_THRESHOLD
    n_out: int = DEFAULT_GRID
    clip_to_horizon: bool = True
    clipped: bool = field(default=False, init=False)

    def __post_init__(self):
        n = self.cosmology.n
        Y0 = tuple(float(v) for v in np.atleast_1d(self.Y0))
        Y1 = tuple(float(v) for v in np.atleast_1d(self.Y1))
        if len(Y0) != n or len(Y1) != n:
            raise ValueError(f"initial data must have {n} components")
        if self.nonlinearity.kind is NonlinearityKind.POWER_SCALAR and n > 1:
            raise ValueError("the scalar nonlinearity lambda|Y|^p has no vector direction for n > 1")
        if not self.t_end > 0:
            raise ValueError("t_end must be positive")
        if self.n_out < 2:
            raise ValueError("n_out must be at least 2")
        object.__setattr__(self, "Y0", Y0)
        object.__setattr__(self, "Y1", Y1)
        t_max = cosmology.horizon(self.cosmology).t_max
        if self.t_end > t_max:
            if not self.clip_to_horizon:
                raise DomainError(f"t_end = {self.t_end} beyond the horizon limit {t_max}")
            object.__setattr__(self, "t_end", t_max)
            object.__setattr__(self, "clipped", True)

    @property
    def n(self) -> int:
        return self.cosmology.n

    @property
    def y0(self) -> np.ndarray:
        return np.array(self.Y0)

    @property
    def y1(self) -> np.ndarray:
        return np.array(self.Y1)

    def replace(self, **changes) -> "Scenario":
        fields = dict(
            cosmology=self.cosmology, nonlinearity=self.nonlinearity, Y0=self.Y0, Y1=self.Y1,
            t_end=self.t_end, rtol=self.rtol, atol=self.atol, blow_threshold=self.blow_threshold,
            n_out=self.n_out, clip_to_horizon=self.clip_to_horizon,
        )
        fields.update(changes)
        return Scenario(**fields)

    def digest(self) -> str:
        payload = {
            "cosmology": [self.cosmology.n, self.cosmology.sigma, self.cosmology.a0, self.cosmology.a1],
            "nonlinearity": [self.nonlinearity.lam, self.nonlinearity.p, self.nonlinearity.kind.value],
            "Y0": self.Y0, "Y1": self.Y1, "t_end": self.t_end,
            "tol": [self.rtol, self.atol], "blow": self.blow_threshold, "n_out": self.n_out,
        }
        raw = json.dumps(payload, sort_keys=True).encode()
        return hashlib.sha256(raw).hexdigest()[:16]


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Samples of a solution and its derivative on ``grid``.

    ``frame`` is ``"Y"`` or ``"X"``; X-frame trajectories store ``X`` and
    ``D_t X`` in the ``Y``/``DtY`` arrays.
    """

    grid: np.ndarray
    Y: np.ndarray
    DtY: np.ndarray
    status: TrajectoryStatus = TrajectoryStatus.COMPLETED
    params_hash: str = ""
    t_blowup: float | None = None
    frame: str = "Y"
    dense: DenseSolution | None = field(default=None, repr=False)
    n_steps: int = 0
    n_rejected: int = 0

    @property
    def t_final(self) -> float:
        return float(self.grid[-1])

    @property
    def reached_end(self) -> bool:
        return self.status in (TrajectoryStatus.COMPLETED, TrajectoryStatus.HORIZON)

    def sup_norm(self) -> float:
        return float(np.max(np.linalg.norm(self.Y, axis=1)))

    def state_at(self, t):
        """``(Y, DtY)`` arrays at ``t`` via the dense interpolant."""
        if self.dense is None:
            raise ValueError("trajectory carries no dense interpolant")
        y = self.dense(t)
        n = self.Y.shape[1]
        return y[:, :n], y[:, n:]


def _y_rhs(s: Scenario):
    params, spec = s.cosmology, s.nonlinearity
    n = s.n
    const = params.n / 8.0 * params.critical_gap * (2.0 * params.a1 / params.a0) ** 2
    slope = params.n * (1.0 + params.sigma) * params.a1 / (2.0 * params.a0)
    lam, p = spec.lam, spec.p
    vector = spec.is_vector

    def weight(t):
        g = 1.0 + slope * t
        return const / (g * g)

    def rhs(t, y):
        Y = y[:n]
        r = math.sqrt(float(Y @ Y))
        if vector:
            if p == 1.0:
                force = lam * Y
            elif r == 0.0:
                force = eval_f(spec, Y)
            else:
                force = (lam * r ** (p - 1.0)) * Y
        else:
            force = np.full(n, lam * r**p)
        return np.concatenate((y[n:], -weight(t) * Y - force))

    return rhs


def _x_rhs(s: Scenario):
    params, spec = s.cosmology, s.nonlinearity
    n = s.n
    lam, p = spec.lam, spec.p

    if params.is_de_sitter:
        def scale(t):
            return params.a0 * math.exp(params.a1 * t / params.a0)
    else:
        expo = 2.0 / (params.n * (1.0 + params.sigma))
        slope = params.n * (1.0 + params.sigma) * params.a1 / (2.0 * params.a0)

        def scale(t):
            return params.a0 * (1.0 + slope * t) ** expo

    slope_q = params.n * (1.0 + params.sigma) * params.a1 / (2.0 * params.a0)
    q_init = 2.0 * params.a1 / params.a0

    def rhs(t, x):
        X = x[:n]
        a = scale(t)
        q = q_init / (1.0 + slope_q * t)
        rx = math.sqrt(float(X @ X))
        if spec.is_vector:
            if p == 1.0:
                force = lam * X
            elif rx == 0.0:
                force = eval_f(spec, X)
            else:
                # U*(|Y|^2) X with |Y| = a |X|
                force = (lam * (a * rx) ** (p - 1.0)) * X
        else:
            force = np.full(n, lam * a ** (p - 1.0) * rx**p)
        return np.concatenate((x[n:], -q * x[n:] - force))

    return rhs, scale


def _finish(s: Scenario, res, magnitude, frame: str) -> Trajectory:
    grid = np.linspace(0.0, s.t_end, s.n_out)
    t_blow = None
    if res.reason is StopReason.THRESHOLD:
        t_blow = locate_crossing(res.dense, magnitude, s.blow_threshold)
        grid = np.append(grid[grid < t_blow], t_blow)
        status = TrajectoryStatus.BLOW_UP
    elif res.reason is StopReason.STEP_FLOOR:
        grid = np.append(grid[grid < res.t_final], res.t_final)
        status = TrajectoryStatus.STEP_FLOOR
    else:
        status = TrajectoryStatus.HORIZON if s.clipped else TrajectoryStatus.COMPLETED
    states = res.dense(grid)
    n = s.n
    Y, DY = states[:, :n], states[:, n:]
    return Trajectory(grid, Y, DY, status, s.digest(), t_blow, frame, res.dense,
                      res.n_steps, res.n_rejected)


def _y_magnitude(t, Y):
    return math.sqrt(float(np.dot(Y, Y)))


def integrate_Y(s: Scenario) -> Trajectory:
    """Solve ``Y'' + A Y + f(Y) = 0`` with the scenario's initial data."""
    y0 = np.concatenate((s.y0, s.y1))
    res = dopri45(_y_rhs(s), y0, s.t_end, rtol=s.rtol, atol=s.atol,
                  magnitude=_y_magnitude, threshold=s.blow_threshold)
    traj = _finish(s, res, _y_magnitude, "Y")
    # grid[0] is exactly the initial state; keep it bit-identical
    traj.Y[0], traj.DtY[0] = s.y0, s.y1
    return traj


def integrate_X(s: Scenario) -> Trajectory:
    """Solve the comoving-frame equation for ``X = Y / a``.

    Initial data are converted from the scenario's ``(Y0, Y1)``; the blow-up
    threshold is applied to ``|Y| = a |X|``.
    """
    params = s.cosmology
    rhs, scale = _x_rhs(s)
    X0 = s.y0 / params.a0
    X1 = (s.y1 - params.a1 * X0) / params.a0

    def magnitude(t, X):
        return scale(t) * math.sqrt(float(np.dot(X, X)))

    res = dopri45(rhs, np.concatenate((X0, X1)), s.t_end, rtol=s.rtol, atol=s.atol,
                  magnitude=magnitude, threshold=s.blow_threshold)
    traj = _finish(s, res, magnitude, "X")
    traj.Y[0], traj.DtY[0] = X0, X1
    return traj


class FrameDirection(enum.Enum):
    X_TO_Y = "XtoY"
    Y_TO_X = "YtoX"


def frame_map(params: CosmologyParams, traj: Trajectory, direction) -> Trajectory:
    """Pointwise ``Y = a X``, ``DtY = a DtX + (Da) X`` or its inverse."""
    direction = FrameDirection(direction)
    expected = "X" if direction is FrameDirection.X_TO_Y else "Y"
    if traj.frame != expected:
        raise ValueError(f"{direction.value} needs a {expected}-frame trajectory")
    a = cosmology.scale_factor(params, traj.grid)[:, None]
    da = cosmology.scale_rate(params, traj.grid)[:, None]
    if direction is FrameDirection.X_TO_Y:
        Y = a * traj.Y
        DY = a * traj.DtY + da * traj.Y
        frame = "Y"
    else:
        Y = traj.Y / a
        DY = (traj.DtY - da * Y) / a
        frame = "X"
    return Trajectory(traj.grid, Y, DY, traj.status, traj.params_hash, traj.t_blowup, frame)


def _fd4(z: np.ndarray, h: float):
    """Fourth-order central first and second differences at interior nodes 2..N-3."""
    d1 = (z[:-4] - 8 * z[1:-3] + 8 * z[3:-1] - z[4:]) / (12 * h)
    d2 = (-z[:-4] + 16 * z[1:-3] - 30 * z[2:-2] + 16 * z[3:-1] - z[4:]) / (12 * h * h)
    return d1, d2


def emden_fowler_residual(s: Scenario, beta: float, traj: Trajectory) -> float:
    """Max residual of the trajectory rewritten in ``s = e^t``, ``Z = Y s^{-beta}``.

    ``Z`` is differentiated numerically: fourth-order differences in the
    uniform variable ``t = log s`` followed by the chain rule
    ``Z_s = z_t / s``, ``Z_ss = (z_tt - z_t) / s^2``.  The extreme two nodes
    at each end are not evaluated.
    """
    spec = s.nonlinearity
    if not spec.is_vector:
        raise ValueError("the Emden-Fowler rewriting needs the vector nonlinearity")
    if traj.frame != "Y":
        raise ValueError("needs a Y-frame trajectory")
    t = traj.grid
    h = np.diff(t)
    if len(t) < 5 or not np.allclose(h, h[0], rtol=1e-9, atol=0):
        raise ValueError("needs a uniform grid with at least 5 nodes")
    sv = np.exp(t)
    Z = traj.Y * np.exp(-beta * t)[:, None]
    d1, d2 = _fd4(Z, h[0])
    si = sv[2:-2, None]
    Zs = d1 / si
    Zss = (d2 - d1) / si**2
    Zi = Z[2:-2]
    A = cosmology.weight_A(s.cosmology, t[2:-2])[:, None]
    r = np.linalg.norm(Zi, axis=1)[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        power = np.where(r == 0, 0.0, r ** (spec.p - 1.0)) if spec.p != 1 else np.ones_like(r)
    res = (Zss + (2 * beta + 1) / si * Zs + (beta**2 + A) / si**2 * Zi
           + spec.lam * si ** (beta * (spec.p - 1.0) - 2.0) * power * Zi)
    return float(np.max(np.abs(res)))


@dataclass(frozen=True)
class BlowUpBracket:
    """Escape-time bracket from escalating thresholds.

    ``t_low`` is the first-threshold crossing, ``t_high`` the extrapolated
    escape time assuming power-law growth between thresholds.
    """

    t_low: float
    t_high: float
    crossings: tuple[float, ...]
    thresholds: tuple[float, ...]

    @property
    def width(self) -> float:
        return self.t_high - self.t_low


@dataclass(frozen=True)
class NoBlowUpBefore:
    t_end: float
    crossings: tuple[float, ...] = ()


def estimate_blowup_time(s: Scenario, thresholds=BLOWUP_THRESHOLDS):
    """Bracket the finite escape time, or report that none was seen.

    The scenario is re-run with each threshold.  Blow-up is claimed only when
    every threshold is crossed and the gaps between successive crossings
    shrink by at least :data:`BLOWUP_GAP_RATIO` (finite-time escape);
    exponential growth, whose gaps stay constant, is reported as
    :class:`NoBlowUpBefore`.

    Raises:
        StepFloorError: if any run ends on step-size underflow.
    """
    thresholds = tuple(sorted(thresholds))
    crossings = []
    for thr in thresholds:
        traj = integrate_Y(s.replace(blow_threshold=thr))
        if traj.status is TrajectoryStatus.STEP_FLOOR:
            raise StepFloorError(f"step floor at t = {traj.t_final} before |Y| reached {thr:g}")
        if traj.status is not TrajectoryStatus.BLOW_UP:
            return NoBlowUpBefore(s.t_end, tuple(crossings))
        crossings.append(traj.t_blowup)
    gaps = np.diff(crossings)
    if len(gaps) < 2 or gaps[-1] <= 0 or not np.all(gaps[1:] <= BLOWUP_GAP_RATIO * gaps[:-1]):
        return NoBlowUpBefore(s.t_end, tuple(crossings))
    # Aitken tail of a geometric gap sequence
    ratio = gaps[-1] / gaps[-2]
    t_high = crossings[-1] + gaps[-1] * ratio / (1.0 - ratio)
    return BlowUpBracket(crossings[0], float(t_high), tuple(crossings), thresholds)
