"""Quantum action for the inverse-square oscillator and a 2-D chaotic
oscillator: exact propagators, extremal Euclidean paths, action fits,
large-T asymptotics and phase-space chaos measures."""

__version__ = "0.1.0"

from .model import (  # noqa: E402
    ActionParams1D, ActionParams2D, BoundarySet, DomainError, PhysConst,
    BALANCED_BOUNDARY, CLASSICAL_2D, FIG2_BOUNDARY, QUANTUM_2D,
)

__all__ = [
    "ActionParams1D", "ActionParams2D", "BoundarySet", "DomainError", "PhysConst",
    "BALANCED_BOUNDARY", "CLASSICAL_2D", "FIG2_BOUNDARY", "QUANTUM_2D", "__version__",
]
