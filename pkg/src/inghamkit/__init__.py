"""Numerical toolkit for Ingham-type uncertainty principles.

Submodules
----------
grid        uniform grids, Fourier transforms, slices
gridio      grid files and CSV export
weights     decay profiles and the criterion integral
synthesis   compactly supported functions with prescribed decay
vanish      half-space supports and log-integral tests
nilpotent   structure constants, BCH, coadjoint orbits, Pfaffians
heisenberg  Schrödinger representations and Plancherel checks
cli         command line entry point
"""

from .errors import (
    CapacityError,
    ContractError,
    DomainError,
    InghamError,
    InputError,
    NearSingularError,
    NumericError,
    ResolutionError,
    UnsupportedStepError,
    ValidationError,
)

__version__ = "0.1.0"

__all__ = [
    "CapacityError",
    "ContractError",
    "DomainError",
    "InghamError",
    "InputError",
    "NearSingularError",
    "NumericError",
    "ResolutionError",
    "UnsupportedStepError",
    "ValidationError",
    "__version__",
]
