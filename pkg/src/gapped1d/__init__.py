"""Viable-set ground state search for gapped one-dimensional chains.

The solver builds the ground state as a matrix product state by sweeping a
cut from left to right and keeping a small set of left-half vectors whose span
supports a good approximation. An exact-diagonalization oracle is bundled for
short chains.
"""

from .errors import (
    ConfigError,
    DegenerateSpanError,
    DenseCapError,
    Gapped1DError,
    IterationAborted,
    NetTooLargeError,
    NotNormalizedError,
    ShapeError,
    TermOverflowError,
)
from .hamiltonian import LocalHamiltonian, ModelSpec, build, normalize
from .mps import MpsState
from .numerics import DEFAULT, Numerics

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DEFAULT",
    "DegenerateSpanError",
    "DenseCapError",
    "Gapped1DError",
    "IterationAborted",
    "LocalHamiltonian",
    "ModelSpec",
    "MpsState",
    "NetTooLargeError",
    "NotNormalizedError",
    "Numerics",
    "ShapeError",
    "TermOverflowError",
    "build",
    "normalize",
]
