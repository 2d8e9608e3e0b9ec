"""Invariant-manifold laboratory for accelerated gradient methods."""

from . import flows, integrators, objectives, projective, riccati
from .objectives import Objective, SpectralBounds, get_objective
from .flows import PhaseState, Trajectory
from .integrators import IterateLog, SplitStepConfig
from .riccati import ScalarModeRoots, SlopeOperator, TripleMomentumState

__version__ = "0.1.0"

__all__ = [
    "flows",
    "integrators",
    "objectives",
    "projective",
    "riccati",
    "Objective",
    "SpectralBounds",
    "get_objective",
    "PhaseState",
    "Trajectory",
    "IterateLog",
    "SplitStepConfig",
    "ScalarModeRoots",
    "SlopeOperator",
    "TripleMomentumState",
]
