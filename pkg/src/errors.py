"""Error hierarchy shared by every module.

Each error carries a one-line ``reason`` that the CLI prints on standard error.
"""

from __future__ import annotations

from typing import Optional


class SpectraForgeError(Exception):
    """Base class for all domain errors raised by this package."""

    code = "error"

    def __init__(self, message: str) -> None:
        super().__init__(message)
        self.message = message

    @property
    def reason(self) -> str:
        return f"{self.code}: {self.message}"


class SpecialFunctionDomainError(SpectraForgeError, ValueError):
    code = "domain_error"


class SeriesOverflowError(SpectraForgeError, OverflowError):
    code = "overflow"


class SeriesConvergenceError(SpectraForgeError, ArithmeticError):
    code = "no_convergence"


class SingularityError(SpectraForgeError, RuntimeError):
    """A zero of a seed function or of a chain denominator."""

    code = "singularity"

    def __init__(self, message: str, location: Optional[float] = None) -> None:
        super().__init__(message)
        self.location = location

    def __reduce__(self):
        return self.__class__, (self.message, self.location)

    @property
    def reason(self) -> str:
        if self.location is None:
            return f"{self.code}: {self.message}"
        return f"{self.code} at x≈{self.location:.3f}"


class SingularPotentialError(SingularityError):
    code = "singular_potential"


class DenominatorZeroError(SingularityError):
    code = "denominator_zero"


class UsageError(SpectraForgeError, ValueError):
    """Flag combinations argparse cannot reject on its own."""

    code = "usage_error"


class DegenerateEnergiesError(SpectraForgeError, ValueError):
    code = "degenerate_energies"


class OrderingViolationError(SpectraForgeError, ValueError):
    code = "ordering_violation"


class OutOfDomainError(SpectraForgeError, ValueError):
    code = "out_of_domain"


class GridTooNarrowError(SpectraForgeError, ValueError):
    code = "grid_too_narrow"


class EigenSolverError(SpectraForgeError, ValueError):
    code = "eigensolver_error"


__all__ = [
    "SpectraForgeError",
    "SpecialFunctionDomainError",
    "SeriesOverflowError",
    "SeriesConvergenceError",
    "SingularityError",
    "SingularPotentialError",
    "DenominatorZeroError",
    "DegenerateEnergiesError",
    "OrderingViolationError",
    "OutOfDomainError",
    "GridTooNarrowError",
    "EigenSolverError",
    "UsageError",
]
