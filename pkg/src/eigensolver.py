"""Finite-difference eigensolver used as an independent check on predicted spectra.

H = -(1/2) d^2/dx^2 + V(x) is discretized with the three-point stencil on the
interior points of a uniform grid (Dirichlet ends). Eigenvalues come from
Sturm-sequence counts and multisection, so only the requested levels are
ever computed.
"""

from __future__ import annotations

import logging
from typing import Callable, List, Sequence, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .errors import EigenSolverError, GridTooNarrowError, SingularityError

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

DEFAULT_GRID_L = 10.0
DEFAULT_GRID_N = 2001
REFINED_GRID_N = 4001
DEFAULT_TOLERANCE = 2e-3
WIDE_SCALE_TOLERANCE = 4e-3
BISECTION_TOL = 1e-10
# sub-intervals per multisection round
MULTISECTION = 32
# the grid ends must sit this far above the highest checked level
WALL_MARGIN = 5.0


class Grid(BaseModel):
    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    x_min: float = -DEFAULT_GRID_L
    x_max: float = DEFAULT_GRID_L
    n_points: int = Field(default=DEFAULT_GRID_N, ge=3)

    @model_validator(mode="after")
    def _ordered(self) -> "Grid":
        if not self.x_max > self.x_min:
            raise ValueError(f"grid needs x_max > x_min, got [{self.x_min}, {self.x_max}]")
        return self

    @classmethod
    def symmetric(cls, half_width: float = DEFAULT_GRID_L, n_points: int = DEFAULT_GRID_N) -> "Grid":
        return cls(x_min=-half_width, x_max=half_width, n_points=n_points)

    @property
    def spacing(self) -> float:
        return (self.x_max - self.x_min) / (self.n_points - 1)

    def points(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n_points)

    def interior(self) -> np.ndarray:
        return self.points()[1:-1]

    def doubled(self) -> "Grid":
        """Same extent, half the spacing."""
        return Grid(x_min=self.x_min, x_max=self.x_max, n_points=2 * self.n_points - 1)


class TridiagonalOperator(BaseModel):
    """Symmetric tridiagonal matrix with a constant off-diagonal."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    diagonal: np.ndarray
    off_diagonal: float

    @property
    def dimension(self) -> int:
        return int(self.diagonal.size)

    def apply(self, vector: np.ndarray) -> np.ndarray:
        out = self.diagonal * vector
        out[:-1] += self.off_diagonal * vector[1:]
        out[1:] += self.off_diagonal * vector[:-1]
        return out


class VerificationReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    predicted: List[float]
    labels: List[str]
    computed: List[float]
    refined: List[float]
    abs_errors: List[float]
    level_tolerances: List[float]
    tolerance: float
    passed: bool = Field(serialization_alias="pass")
    discretization_estimate: float
    grid_points: int

    @model_validator(mode="after")
    def _consistent(self) -> "VerificationReport":
        sizes = {len(self.predicted), len(self.computed), len(self.abs_errors), len(self.level_tolerances)}
        if len(sizes) != 1:
            raise ValueError("report lists must have equal length")
        return self


def discretize(potential: Callable[[ArrayLike], ArrayLike], grid: Grid) -> TridiagonalOperator:
    """diagonal_i = 1/h^2 + V(x_i) on interior points, off-diagonal -1/(2 h^2)."""
    h = grid.spacing
    xs = grid.interior()
    values = np.asarray(potential(xs), dtype=float)
    if not np.all(np.isfinite(values)):
        bad = float(xs[np.argmax(~np.isfinite(values))])
        raise SingularityError("potential is not finite on the grid", location=bad)
    return TridiagonalOperator(diagonal=1.0 / (h * h) + values, off_diagonal=-0.5 / (h * h))


def sturm_count(op: TridiagonalOperator, pivots: ArrayLike) -> np.ndarray:
    """Number of eigenvalues strictly below each pivot (vectorized over pivots)."""
    mu = np.asarray(pivots, dtype=float)
    b2 = op.off_diagonal * op.off_diagonal
    pivmin = np.finfo(float).tiny * max(1.0, b2)
    diagonal = op.diagonal.tolist()

    q = diagonal[0] - mu
    q = np.where(np.abs(q) < pivmin, -pivmin, q)
    count = (q < 0).astype(np.int64)
    for d in diagonal[1:]:
        q = (d - mu) - b2 / q
        q = np.where(np.abs(q) < pivmin, -pivmin, q)
        count += q < 0
    return count


def lowest_eigenvalues(op: TridiagonalOperator, k: int) -> List[float]:
    """The k smallest eigenvalues, ascending, to absolute tolerance 1e-10."""
    if not 1 <= k <= op.dimension:
        raise EigenSolverError(f"k must lie in [1, {op.dimension}], got {k}")

    # Gershgorin lower bound; upper bound by doubling until k levels are enclosed
    lower = float(np.min(op.diagonal) - 2.0 * abs(op.off_diagonal))
    steps = lower + np.concatenate([[0.0], 2.0 ** np.arange(-2, 64)])
    counts = sturm_count(op, steps)
    upper = float(steps[np.argmax(counts >= k)])

    targets = np.arange(k)
    lo = np.full(k, lower)
    hi = np.full(k, upper)
    fractions = np.linspace(0.0, 1.0, MULTISECTION + 1)
    while np.max(hi - lo) > BISECTION_TOL:
        pivots = lo[:, None] + (hi - lo)[:, None] * fractions[None, :]
        pivots[:, 0], pivots[:, -1] = lo, hi
        counts = sturm_count(op, pivots)
        # first pivot with more than j eigenvalues below it
        first = np.argmax(counts >= targets[:, None] + 1, axis=1)
        first = np.maximum(first, 1)
        rows = np.arange(k)
        lo, hi = pivots[rows, first - 1], pivots[rows, first]
    return (0.5 * (lo + hi)).tolist()


def rayleigh_quotient(op: TridiagonalOperator, samples: np.ndarray) -> float:
    """<psi|H|psi> / <psi|psi> for psi sampled on the operator's interior points."""
    psi = np.asarray(samples, dtype=float)
    if psi.size != op.dimension:
        raise EigenSolverError(f"expected {op.dimension} samples, got {psi.size}")
    return float(psi @ op.apply(psi) / (psi @ psi))


def _level_tolerances(values: Sequence[float], tol: float) -> List[float]:
    """Levels closer than 2 tol are checked at a third of their gap."""
    out = []
    for i, value in enumerate(values):
        gaps = [abs(value - values[j]) for j in (i - 1, i + 1) if 0 <= j < len(values)]
        gap = min(gaps) if gaps else float("inf")
        out.append(gap / 3.0 if gap < 2.0 * tol else tol)
    return out


def verify_spectrum(predicted, potential: Callable[[ArrayLike], ArrayLike], grid: Grid, tol: float) -> VerificationReport:
    """Compare a SpectrumPrediction with FD eigenvalues on ``grid`` and on the doubled grid."""
    levels = list(predicted.levels)
    if not levels:
        raise EigenSolverError("nothing to verify: the prediction is empty")
    values = [level.value for level in levels]

    top = max(values)
    walls = np.asarray(potential(np.array([grid.x_min, grid.x_max])), dtype=float)
    if np.any(walls < top + WALL_MARGIN):
        raise GridTooNarrowError(
            f"V at the grid ends ({walls[0]:.3g}, {walls[1]:.3g}) must exceed the top level {top:.3g} by {WALL_MARGIN}"
        )

    level_tols = _level_tolerances(values, tol)
    if min(level_tols) < tol and grid.n_points < REFINED_GRID_N:
        logger.warning("close levels: refining grid to %d points", REFINED_GRID_N)
        grid = Grid(x_min=grid.x_min, x_max=grid.x_max, n_points=REFINED_GRID_N)

    computed = lowest_eigenvalues(discretize(potential, grid), len(values))
    refined = lowest_eigenvalues(discretize(potential, grid.doubled()), len(values))
    errors = [abs(c - p) for c, p in zip(computed, values)]
    estimate = max(abs(c - r) / 3.0 for c, r in zip(computed, refined))
    passed = all(err <= lt for err, lt in zip(errors, level_tols))
    logger.info("verified %d levels on %d points: pass=%s", len(values), grid.n_points, passed)

    return VerificationReport(
        predicted=values,
        labels=[level.label for level in levels],
        computed=computed,
        refined=refined,
        abs_errors=errors,
        level_tolerances=level_tols,
        tolerance=tol,
        passed=passed,
        discretization_estimate=estimate,
        grid_points=grid.n_points,
    )


__all__ = [
    "Grid",
    "TridiagonalOperator",
    "VerificationReport",
    "discretize",
    "sturm_count",
    "lowest_eigenvalues",
    "rayleigh_quotient",
    "verify_spectrum",
]
