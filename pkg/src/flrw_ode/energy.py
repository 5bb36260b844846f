"""Energy identities ``e0(t) + int_0^t e1 = e0(0)`` along trajectories."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_simpson

from . import cosmology
from .cosmology import CaseTag, CosmologyParams
from .dynamics import Trajectory
from .errors import RegimeMismatchError
from .nonlinearity import NonlinearitySpec

A_FLOOR = 1e-300
DRIFT_FACTOR = 100.0

# 3-point Gauss-Legendre on [0, 1]
_GL_X = 0.5 + 0.5 * np.array([-np.sqrt(0.6), 0.0, np.sqrt(0.6)])
_GL_W = 0.5 * np.array([5 / 9, 8 / 9, 5 / 9])


class EnergyRegime(enum.Enum):
    DECREASING = "Decreasing"
    INCREASING = "Increasing"


@dataclass(frozen=True, eq=False)
class EnergyLedger:
    grid: np.ndarray
    e0: np.ndarray
    e1: np.ndarray
    e1_integral: np.ndarray
    drift: np.ndarray
    regime: EnergyRegime

    @property
    def max_drift(self) -> float:
        return float(np.max(np.abs(self.drift)))

    def drift_bound(self, tol: float) -> float:
        return DRIFT_FACTOR * tol * (1.0 + abs(float(self.e0[0])))

    def within_bound(self, tol: float) -> bool:
        return self.max_drift <= self.drift_bound(tol)


def _densities(regime, params, spec, t, Y, DY):
    y2 = np.sum(Y * Y, axis=-1)
    dy2 = np.sum(DY * DY, axis=-1)
    pot = spec.lam * y2 ** ((spec.p + 1) / 2) / (spec.p + 1)
    A = np.asarray(cosmology.weight_A(params, t), dtype=float)
    dA = np.asarray(cosmology.weight_A_rate(params, t), dtype=float)
    if regime is EnergyRegime.DECREASING:
        return 0.5 * dy2 + 0.5 * A * y2 + pot, -0.5 * dA * y2
    if np.any(A < A_FLOOR):
        raise RegimeMismatchError("weight A vanishes on the grid; the increasing identity needs A > 0")
    ratio = dA / A**2
    return 0.5 * dy2 / A + 0.5 * y2 + pot / A, ratio * (0.5 * dy2 + pot)


def _ledger(regime, params, spec, traj: Trajectory) -> EnergyLedger:
    if not spec.is_vector:
        raise ValueError("energy identities need the vector nonlinearity")
    if traj.frame != "Y":
        raise ValueError("energy identities are stated in the Y frame")
    t = np.asarray(traj.grid, dtype=float)
    e0, e1 = _densities(regime, params, spec, t, traj.Y, traj.DtY)
    if traj.dense is not None and len(t) > 1:
        # Gauss nodes on the dense interpolant keep quadrature error far below tol
        h = np.diff(t)
        nodes = (t[:-1, None] + h[:, None] * _GL_X).ravel()
        Yq, DYq = traj.state_at(nodes)
        _, e1q = _densities(regime, params, spec, nodes, Yq, DYq)
        pieces = h * (e1q.reshape(-1, 3) @ _GL_W)
        integral = np.concatenate(([0.0], np.cumsum(pieces)))
    elif len(t) > 2:
        integral = cumulative_simpson(e1, x=t, initial=0.0)
    else:
        integral = np.concatenate(([0.0], np.cumsum(np.diff(t) * 0.5 * (e1[1:] + e1[:-1]))))
    drift = e0 + integral - e0[0]
    return EnergyLedger(t, e0, e1, integral, drift, regime)


def ledger_decreasing(params: CosmologyParams, spec: NonlinearitySpec, Y: Trajectory,
                      strict: bool = True) -> EnergyLedger:
    """Ledger for ``e0 = |DtY|^2/2 + A|Y|^2/2 + lam|Y|^{p+1}/(p+1)``, ``e1 = -DtA|Y|^2/2``.

    The identity itself holds for any weight; ``strict`` enforces the sign
    hypotheses ``A >= 0, DtA <= 0`` (cases I-III) under which it yields
    bounds.
    """
    if strict and cosmology.classify(params).case_tag not in (CaseTag.I, CaseTag.II, CaseTag.III):
        raise RegimeMismatchError(f"decreasing energy needs cases I-III, got {params}")
    return _ledger(EnergyRegime.DECREASING, params, spec, Y)


def ledger_increasing(params: CosmologyParams, spec: NonlinearitySpec, Y: Trajectory,
                      strict: bool = True) -> EnergyLedger:
    """Ledger for the contracting regime (case IV), with ``A^{-1}``-weighted energy ``e0``."""
    if strict and cosmology.classify(params).case_tag is not CaseTag.IV:
        raise RegimeMismatchError(f"increasing energy needs case IV, got {params}")
    return _ledger(EnergyRegime.INCREASING, params, spec, Y)


def matching_ledger(params: CosmologyParams, spec: NonlinearitySpec, Y: Trajectory) -> EnergyLedger:
    """Regime-matched ledger; outside cases I-IV the decreasing identity is used unchecked."""
    tag = cosmology.classify(params).case_tag
    if tag is CaseTag.IV:
        return ledger_increasing(params, spec, Y)
    return ledger_decreasing(params, spec, Y, strict=tag is not CaseTag.OTHER)
