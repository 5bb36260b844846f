"""Spatially flat FLRW background: scale factor, friction rate and weight.

The universe is described by four numbers ``(n, sigma, a0, a1)``: spatial
dimension, equation-of-state exponent, initial scale ``a(0)`` and initial
rate ``a'(0)``.  Everything else (Hubble constant, Big-Rip/Big-Crunch time,
the weight ``A(t)`` entering ``Y'' + A Y + f(Y) = 0``) is derived here.

All functions accept a float or a numpy array for ``t`` and return the same
kind.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

#: Relative margin kept from the horizon time ``T1``; ``q0`` diverges there.
HORIZON_EPS = 1e-9

#: Absolute tolerance for recognising the Milne value ``sigma = -1 + 2/n``.
CRITICAL_SIGMA_ATOL = 1e-12


@dataclass(frozen=True)
class CosmologyParams:
    """Universe model ``(n, sigma, a0, a1)``."""

    n: int
    sigma: float
    a0: float
    a1: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"spatial dimension n must be a positive integer, got {self.n}")
        if not self.a0 > 0:
            raise ValueError(f"a0 must be positive, got {self.a0}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "sigma", float(self.sigma))
        object.__setattr__(self, "a0", float(self.a0))
        object.__setattr__(self, "a1", float(self.a1))

    @property
    def hubble(self) -> float:
        """Hubble constant ``H = a1 / a0``."""
        return self.a1 / self.a0

    @property
    def is_de_sitter(self) -> bool:
        # exact comparison: the exponential branch is a separate formula
        return self.sigma == -1.0

    @property
    def critical_gap(self) -> float:
        """``sigma + 1 - 2/n``, snapped to 0 within :data:`CRITICAL_SIGMA_ATOL`."""
        gap = self.sigma + 1.0 - 2.0 / self.n
        return 0.0 if abs(gap) <= CRITICAL_SIGMA_ATOL else gap

    @classmethod
    def de_sitter(cls, n: int, H: float) -> "CosmologyParams":
        """``a(t) = exp(H t)``."""
        return cls(n=n, sigma=-1.0, a0=1.0, a1=H)


@dataclass(frozen=True)
class Horizon:
    """``t0`` is ``None`` when undefined (de Sitter or static); ``t1`` may be ``inf``."""

    t0: float | None
    t1: float

    @property
    def finite(self) -> bool:
        return math.isfinite(self.t1)

    @property
    def t_max(self) -> float:
        """Largest admissible evaluation time."""
        return (1.0 - HORIZON_EPS) * self.t1 if self.finite else math.inf


class CaseTag(enum.Enum):
    I = "I"
    II = "II"
    III = "III"
    IV = "IV"
    OTHER = "Other"


class Sign(enum.Enum):
    POS = "pos"
    ZERO = "zero"
    NEG = "neg"

    @classmethod
    def of(cls, x: float) -> "Sign":
        if x > 0:
            return cls.POS
        if x < 0:
            return cls.NEG
        return cls.ZERO


@dataclass(frozen=True)
class RegimeClass:
    case_tag: CaseTag
    sign_A: Sign
    sign_DtA: Sign

    def describe(self) -> str:
        return f"case {self.case_tag.value}, A {self.sign_A.value}, DtA {self.sign_DtA.value}"


def horizon(params: CosmologyParams) -> Horizon:
    """Big-Rip/Big-Crunch time ``T0`` and existence horizon ``T1``."""
    k = (1.0 + params.sigma) * params.a1
    if params.is_de_sitter or params.a1 == 0.0:
        t0 = None
    else:
        t0 = -2.0 * params.a0 / (params.n * k)
    t1 = t0 if k < 0 else math.inf
    return Horizon(t0=t0, t1=t1)


def _check_domain(params: CosmologyParams, t):
    t_arr = np.asarray(t, dtype=float)
    t_max = horizon(params).t_max
    if np.any(t_arr < 0) or np.any(t_arr > t_max) or not np.all(np.isfinite(t_arr)):
        raise DomainError(f"t outside [0, {t_max!r}] for {params}")
    return t_arr


def _out(x, like):
    return float(x) if np.ndim(like) == 0 else x


def _growth_factor(params: CosmologyParams, t):
    """``1 + n(1+sigma) a1 t / (2 a0)``; positive on ``[0, T1)``."""
    return 1.0 + params.n * (1.0 + params.sigma) * params.a1 * t / (2.0 * params.a0)


def scale_factor(params: CosmologyParams, t):
    """Scale function ``a(t)``."""
    t_arr = _check_domain(params, t)
    if params.is_de_sitter:
        a = params.a0 * np.exp(params.a1 * t_arr / params.a0)
    else:
        a = params.a0 * _growth_factor(params, t_arr) ** (2.0 / (params.n * (1.0 + params.sigma)))
    return _out(a, t)


def scale_rate(params: CosmologyParams, t):
    """``D_t a(t) = a(t) q0(t) / 2``."""
    return scale_factor(params, t) * q0(params, t) / 2.0


def q0(params: CosmologyParams, t):
    """Friction rate ``q0 = D_t(a^2) / a^2``."""
    t_arr = _check_domain(params, t)
    q = (2.0 * params.a1 / params.a0) / _growth_factor(params, t_arr)
    return _out(q, t)


def q0_rate(params: CosmologyParams, t):
    """``D_t q0 = -n(1+sigma) q0^2 / 4``."""
    q = q0(params, t)
    return -params.n * (1.0 + params.sigma) * q * q / 4.0


def weight_A(params: CosmologyParams, t):
    """Weight ``A = (n/8)(sigma + 1 - 2/n) q0^2``."""
    q = q0(params, t)
    return params.n / 8.0 * params.critical_gap * q * q


def weight_A_definition(params: CosmologyParams, t):
    """``A = -q0^2/4 - D_t q0 / 2`` evaluated term by term (cross-check form)."""
    q = q0(params, t)
    return -0.25 * q * q - 0.5 * q0_rate(params, t)


def weight_A_rate(params: CosmologyParams, t):
    """``D_t A = -(n^2/16)(sigma + 1 - 2/n)(sigma + 1) q0^3``."""
    q = q0(params, t)
    return -(params.n**2) / 16.0 * params.critical_gap * (params.sigma + 1.0) * q**3


def classify(params: CosmologyParams) -> RegimeClass:
    """Which of the four expansion/contraction regimes the parameters fall in."""
    a1, gap = params.a1, params.critical_gap
    if a1 == 0.0:
        return RegimeClass(CaseTag.II, Sign.ZERO, Sign.ZERO)
    if gap == 0.0:
        return RegimeClass(CaseTag.III, Sign.ZERO, Sign.ZERO)
    if gap > 0:
        tag = CaseTag.I if a1 > 0 else CaseTag.IV
    else:
        tag = CaseTag.OTHER
    # sign(q0) = sign(a1) on [0, T1)
    sign_A = Sign.of(gap)
    sign_DtA = Sign.of(-gap * (params.sigma + 1.0) * a1)
    return RegimeClass(tag, sign_A, sign_DtA)
