"""Semilinear ODEs ``Y'' + A(t) Y + f(Y) = 0`` on FLRW backgrounds."""

from .cosmology import CaseTag, CosmologyParams, Horizon, RegimeClass, Sign, classify, horizon
from .dynamics import (
    BlowUpBracket,
    NoBlowUpBefore,
    Scenario,
    Trajectory,
    TrajectoryStatus,
    estimate_blowup_time,
    frame_map,
    integrate_X,
    integrate_Y,
)
from .nonlinearity import NonlinearityKind, NonlinearitySpec

__all__ = [
    "BlowUpBracket",
    "CaseTag",
    "CosmologyParams",
    "Horizon",
    "NoBlowUpBefore",
    "NonlinearityKind",
    "NonlinearitySpec",
    "RegimeClass",
    "Scenario",
    "Sign",
    "Trajectory",
    "TrajectoryStatus",
    "classify",
    "estimate_blowup_time",
    "frame_map",
    "horizon",
    "integrate_X",
    "integrate_Y",
]

__version__ = "0.1.0"
