"""Quadripartite entanglement from four concurrent intracavity downconversions."""

__version__ = "0.1.0"

from .errors import (  # noqa: F401
    DegenerateCovariance,
    Diverged,
    DomainError,
    MethodMismatch,
    NoConvergence,
    NotAFixedPoint,
    QuadOPOError,
    SymmetryError,
    TooManyDivergences,
    Unstable,
)
from .model import SystemParams, threshold_pump, validate  # noqa: F401
