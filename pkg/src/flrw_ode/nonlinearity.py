"""Power nonlinearities ``lambda |Y|^{p-1} Y`` and ``lambda |Y|^p``.

Arrays of shape ``(..., n)`` are accepted everywhere; the last axis is the
spatial index.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import SingularityError


class NonlinearityKind(enum.Enum):
    POWER_VECTOR = "vector"
    POWER_SCALAR = "scalar"


@dataclass(frozen=True)
class NonlinearitySpec:
    """Coupling ``lam`` (lambda), exponent ``p`` and form."""

    lam: float
    p: float
    kind: NonlinearityKind = NonlinearityKind.POWER_VECTOR

    def __post_init__(self):
        object.__setattr__(self, "lam", float(self.lam))
        object.__setattr__(self, "p", float(self.p))
        object.__setattr__(self, "kind", NonlinearityKind(self.kind))

    @property
    def is_vector(self) -> bool:
        return self.kind is NonlinearityKind.POWER_VECTOR


def norm(Y) -> np.ndarray:
    return np.sqrt(np.sum(np.square(Y), axis=-1))


def eval_f(spec: NonlinearitySpec, Y) -> np.ndarray:
    """Evaluate ``f(Y)``.

    The scalar form returns the magnitude ``lambda |Y|^p`` broadcast over the
    last axis; only ``n = 1`` gives it a meaning as a vector field.

    Raises:
        SingularityError: ``|Y| = 0`` with ``p < 1``.
    """
    Y = np.asarray(Y, dtype=float)
    r = norm(Y)[..., None]
    if spec.p < 1 and np.any(r == 0):
        raise SingularityError(f"f(Y) undefined at Y = 0 for p = {spec.p}")
    if spec.is_vector:
        if spec.p == 1:
            return spec.lam * Y
        with np.errstate(invalid="ignore", divide="ignore"):
            out = spec.lam * r ** (spec.p - 1.0) * Y
        # 0^(p-1) * 0 for p > 1
        return np.where(r == 0, 0.0, out)
    return np.broadcast_to(spec.lam * r**spec.p, Y.shape).copy()


def lipschitz_bound_vector(Y, Z, p: float):
    """Both sides of ``||Y|^{p-1}Y - |Z|^{p-1}Z| <= p(|Y|^{p-1} + |Z|^{p-1})|Y - Z|``."""
    if not p > 1:
        raise ValueError(f"Lipschitz bound needs p > 1, got {p}")
    Y = np.asarray(Y, dtype=float)
    Z = np.asarray(Z, dtype=float)
    ry, rz = norm(Y), norm(Z)
    lhs = norm(ry[..., None] ** (p - 1) * Y - rz[..., None] ** (p - 1) * Z)
    rhs = p * (ry ** (p - 1) + rz ** (p - 1)) * norm(Y - Z)
    return lhs, rhs


def lipschitz_bound_scalar(Y, Z, p: float):
    """Both sides of ``||Y|^p - |Z|^p| <= p max(|Y|, |Z|)^{p-1} |Y - Z|``."""
    if not p > 1:
        raise ValueError(f"Lipschitz bound needs p > 1, got {p}")
    Y = np.asarray(Y, dtype=float)
    Z = np.asarray(Z, dtype=float)
    ry, rz = norm(Y), norm(Z)
    lhs = np.abs(ry**p - rz**p)
    rhs = p * np.maximum(ry, rz) ** (p - 1) * norm(Y - Z)
    return lhs, rhs
