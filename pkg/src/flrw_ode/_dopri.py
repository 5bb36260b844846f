"""Dormand-Prince 5(4) with PI step control and 4th-order dense output."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import brentq

SAFETY = 0.9
MIN_STEP = 1e-12
MIN_FACTOR = 0.2
MAX_FACTOR = 10.0
# PI exponents (Hairer-Wanner, DOPRI5)
BETA = 0.04
ALPHA = 0.2 - 0.75 * BETA

C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])
A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
]
B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
E = np.array([-71 / 57600, 0.0, 71 / 16695, -71 / 1920, 17253 / 339200, -22 / 525, 1 / 40])
# dense output: y(t + x h) = y + h * K^T P [x, x^2, x^3, x^4]
P = np.array([
    [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])


class StopReason(enum.Enum):
    END = "end"
    THRESHOLD = "threshold"
    STEP_FLOOR = "step_floor"


class DenseSolution:
    """Piecewise quartic interpolant over the accepted steps."""

    def __init__(self, t_old, h, y_old, Q):
        self.t_old = np.asarray(t_old)
        self.h = np.asarray(h)
        self.y_old = np.asarray(y_old)
        self.Q = np.asarray(Q)

    @property
    def t_span(self):
        return float(self.t_old[0]), float(self.t_old[-1] + self.h[-1])

    def __call__(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        idx = np.clip(np.searchsorted(self.t_old, t, side="right") - 1, 0, len(self.t_old) - 1)
        x = (t - self.t_old[idx]) / self.h[idx]
        powers = np.stack([x, x**2, x**3, x**4], axis=-1)
        return self.y_old[idx] + self.h[idx][:, None] * np.einsum("kij,kj->ki", self.Q[idx], powers)


@dataclass
class OdeResult:
    t_final: float
    y_final: np.ndarray
    reason: StopReason
    dense: DenseSolution
    n_steps: int
    n_rejected: int
    n_fev: int


def _rms(x):
    return math.sqrt(float(np.dot(x, x)) / x.size)


def _initial_step(rhs, t0, y0, f0, rtol, atol, h_max):
    scale = atol + rtol * np.abs(y0)
    d0, d1 = _rms(y0 / scale), _rms(f0 / scale)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, h_max)
    f1 = rhs(t0 + h0, y0 + h0 * f0)
    d2 = _rms((f1 - f0) / scale) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1, h_max)


def dopri45(
    rhs: Callable,
    y0,
    t_end: float,
    *,
    rtol: float,
    atol: float,
    h_max: float | None = None,
    h_min: float = MIN_STEP,
    magnitude: Callable | None = None,
    threshold: float = math.inf,
) -> OdeResult:
    """Integrate ``y' = rhs(t, y)`` on ``[0, t_end]``.

    Stops early when ``magnitude(t, y) >= threshold`` after an accepted step
    (the crossing time is then located on the dense output), or when the
    controller asks for a step below ``h_min``.
    """
    y = np.array(y0, dtype=float)
    t = 0.0
    h_max = t_end / 10.0 if h_max is None else h_max
    f = rhs(t, y)
    n_fev = 1
    h = _initial_step(rhs, t, y, f, rtol, atol, h_max)
    n_fev += 1

    K = np.empty((7, y.size))
    t_olds, hs, y_olds, Qs = [], [], [], []
    err_old = 1e-4
    n_steps = n_rej = 0
    reason = StopReason.END
    last_rejected = False

    while t < t_end:
        h = min(h, h_max)
        final = t + h >= t_end
        if final:
            h = t_end - t
        elif h < h_min:
            reason = StopReason.STEP_FLOOR
            break

        K[0] = f
        for i in range(1, 6):
            K[i] = rhs(t + C[i] * h, y + h * (A[i] @ K[:i]))
        y_new = y + h * (B @ K[:6])
        f_new = rhs(t + h, y_new)
        K[6] = f_new
        n_fev += 6

        if np.all(np.isfinite(y_new)) and np.all(np.isfinite(f_new)):
            scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
            err = _rms(h * (E @ K) / scale)
        else:
            err = math.inf

        if err <= 1.0:
            t_olds.append(t)
            hs.append(h)
            y_olds.append(y.copy())
            Qs.append(K.T @ P)
            t, y, f = (t_end if final else t + h), y_new, f_new
            n_steps += 1
            err = max(err, 1e-10)
            factor = SAFETY * err**-ALPHA * err_old**BETA
            factor = min(MAX_FACTOR, max(MIN_FACTOR, factor))
            if last_rejected:
                factor = min(1.0, factor)
            err_old = err
            last_rejected = False
            h *= factor
            if magnitude is not None and magnitude(t, y[: y.size // 2]) >= threshold:
                reason = StopReason.THRESHOLD
                break
        else:
            n_rej += 1
            last_rejected = True
            if math.isfinite(err):
                h *= max(MIN_FACTOR, SAFETY * err**-ALPHA)
            else:
                h *= MIN_FACTOR

    if not t_olds:
        # no accepted step: degenerate interpolant holding the initial state
        t_olds, hs, y_olds, Qs = [0.0], [max(h, 1e-300)], [y.copy()], [np.zeros((y.size, 4))]
    dense = DenseSolution(np.array(t_olds), np.array(hs), np.array(y_olds), np.array(Qs))
    return OdeResult(t, y, reason, dense, n_steps, n_rej, n_fev)


def locate_crossing(dense: DenseSolution, magnitude: Callable, threshold: float) -> float:
    """Time within the last dense step where ``magnitude`` reaches ``threshold``."""
    a = float(dense.t_old[-1])
    b = float(a + dense.h[-1])
    half = dense.y_old.shape[1] // 2

    def g(s):
        return magnitude(s, dense(s)[0, :half]) - threshold

    if g(a) >= 0:
        return a
    if g(b) <= 0:
        return b
    return brentq(g, a, b, xtol=1e-15 * max(1.0, b), rtol=4 * np.finfo(float).eps)
