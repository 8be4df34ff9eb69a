"""Singular N-peakon solutions of the r-Camassa-Holm equation."""

from .core import (
    BranchKind,
    Diagnostics,
    DomainError,
    OrderingViolation,
    PeakonState,
    RCHError,
    Segment,
    height_from_momentum,
    momentum_from_height,
    signed_pow,
)
from .dynamics import (
    IntegratorSettings,
    SolverFailure,
    Trajectory,
    integrate,
    vector_field,
)
from .profile import (
    NewtonDiverged,
    Profile,
    ProfileSolveSettings,
    energy,
    evaluate,
    heights_to_profile,
    sample,
    solve_profile,
)
from .quadrature import NoBracket, QuadratureError, QuadratureSettings

__version__ = "0.1.0"

__all__ = [
    "BranchKind", "Diagnostics", "DomainError", "IntegratorSettings",
    "NewtonDiverged", "NoBracket", "OrderingViolation", "PeakonState",
    "Profile", "ProfileSolveSettings", "QuadratureError", "QuadratureSettings",
    "RCHError", "Segment", "SolverFailure", "Trajectory", "energy", "evaluate",
    "height_from_momentum", "heights_to_profile", "integrate",
    "momentum_from_height", "sample", "signed_pow", "solve_profile",
    "vector_field", "__version__",
]
