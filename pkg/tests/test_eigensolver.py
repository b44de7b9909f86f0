import math
import sys
from pathlib import Path

import numpy as np
import pytest
from pydantic import ValidationError
from scipy.linalg import eigh_tridiagonal

# set the path to one folder level above this file's location
sys.path.append(str(Path(__file__).parent.parent))
import src.eigensolver as eigensolver
from src.eigensolver import Grid, TridiagonalOperator
from src.errors import EigenSolverError, GridTooNarrowError, SingularityError
from src.riccati import oscillator_potential
from src.transforms import SpectrumLevel, SpectrumPrediction


def _prediction(values):
    return SpectrumPrediction(levels=[SpectrumLevel(value=v, label=f"inherited({i})", scale=1.0) for i, v in enumerate(values)])


def test_grid_defaults_and_validation():
    grid = Grid()
    assert (grid.x_min, grid.x_max, grid.n_points) == (-10.0, 10.0, 2001)
    assert grid.spacing == pytest.approx(0.01)
    assert grid.doubled().n_points == 4001
    assert grid.doubled().spacing == pytest.approx(0.005)
    with pytest.raises(ValidationError):
        Grid(x_min=1.0, x_max=-1.0)
    with pytest.raises(ValidationError):
        Grid(n_points=2)


def test_discretize_free_particle_entries():
    grid = Grid(x_min=0.0, x_max=2.0, n_points=5)
    op = eigensolver.discretize(lambda x: np.zeros_like(x), grid)
    np.testing.assert_allclose(op.diagonal, [4.0, 4.0, 4.0])
    assert op.off_diagonal == -2.0
    assert op.dimension == 3


def test_discretize_shift_moves_diagonal_only():
    grid = Grid(n_points=201)
    base = eigensolver.discretize(oscillator_potential, grid)
    shifted = eigensolver.discretize(lambda x: oscillator_potential(x) + 1.75, grid)
    np.testing.assert_allclose(shifted.diagonal - base.diagonal, 1.75, atol=1e-12)
    assert shifted.off_diagonal == base.off_diagonal


def test_discretize_rejects_singular_potential():
    grid = Grid(x_min=-1.0, x_max=1.0, n_points=11)
    with pytest.raises(SingularityError):
        eigensolver.discretize(lambda x: 1.0 / x, grid)


def test_lowest_eigenvalues_closed_form():
    op = TridiagonalOperator(diagonal=np.array([2.0, 2.0, 2.0]), off_diagonal=-1.0)
    values = eigensolver.lowest_eigenvalues(op, 3)
    np.testing.assert_allclose(values, [2.0 - math.sqrt(2.0), 2.0, 2.0 + math.sqrt(2.0)], atol=1e-10)


def test_lowest_eigenvalues_out_of_range():
    op = TridiagonalOperator(diagonal=np.array([2.0, 2.0, 2.0]), off_diagonal=-1.0)
    with pytest.raises(EigenSolverError):
        eigensolver.lowest_eigenvalues(op, 4)
    with pytest.raises(EigenSolverError):
        eigensolver.lowest_eigenvalues(op, 0)


def test_oscillator_spectrum():
    op = eigensolver.discretize(oscillator_potential, Grid())
    values = eigensolver.lowest_eigenvalues(op, 5)
    assert values[0] == pytest.approx(0.5, abs=1e-3)
    np.testing.assert_allclose(values, [0.5, 1.5, 2.5, 3.5, 4.5], atol=2e-3)


def test_matches_scipy_tridiagonal_solver():
    rng = np.random.default_rng(3)
    diagonal = rng.uniform(-5.0, 5.0, 300)
    op = TridiagonalOperator(diagonal=diagonal, off_diagonal=-0.8)
    expected = eigh_tridiagonal(diagonal, np.full(299, -0.8), eigvals_only=True, select="i", select_range=(0, 9))
    np.testing.assert_allclose(eigensolver.lowest_eigenvalues(op, 10), expected, atol=1e-9)


def test_free_particle_closed_form():
    """Dirichlet free particle on [0, L]: a + 2 b cos(k pi / (n + 1))."""
    grid = Grid(x_min=0.0, x_max=3.0, n_points=152)
    op = eigensolver.discretize(lambda x: np.zeros_like(x), grid)
    n = op.dimension
    exact = sorted(op.diagonal[0] + 2.0 * op.off_diagonal * math.cos(k * math.pi / (n + 1)) for k in range(1, n + 1))
    np.testing.assert_allclose(eigensolver.lowest_eigenvalues(op, 6), exact[:6], atol=1e-9)


def test_sturm_count_monotone():
    op = eigensolver.discretize(oscillator_potential, Grid(n_points=401))
    pivots = np.linspace(-1.0, 8.0, 500)
    counts = eigensolver.sturm_count(op, pivots)
    assert np.all(np.diff(counts) >= 0)
    assert counts[0] == 0
    assert eigensolver.sturm_count(op, np.array([1.0]))[0] == 1


def test_shift_equivariance():
    grid = Grid(n_points=801)
    base = eigensolver.lowest_eigenvalues(eigensolver.discretize(oscillator_potential, grid), 4)
    shifted = eigensolver.lowest_eigenvalues(eigensolver.discretize(lambda x: oscillator_potential(x) - 3.0, grid), 4)
    np.testing.assert_allclose(np.array(shifted) + 3.0, base, atol=1e-9)


def test_grid_halving_convergence():
    """Second-order stencil: halving h shrinks the error by about four."""
    coarse = eigensolver.lowest_eigenvalues(eigensolver.discretize(oscillator_potential, Grid(n_points=201)), 3)
    fine = eigensolver.lowest_eigenvalues(eigensolver.discretize(oscillator_potential, Grid(n_points=401)), 3)
    for n in range(3):
        ratio = abs(coarse[n] - (n + 0.5)) / abs(fine[n] - (n + 0.5))
        assert 2.5 <= ratio <= 6.0


def test_rayleigh_quotient_of_ground_state():
    grid = Grid()
    op = eigensolver.discretize(oscillator_potential, grid)
    xs = grid.interior()
    assert eigensolver.rayleigh_quotient(op, np.exp(-0.5 * xs * xs)) == pytest.approx(0.5, abs=1e-4)
    with pytest.raises(EigenSolverError):
        eigensolver.rayleigh_quotient(op, np.ones(5))


def test_verify_spectrum_passes_on_oscillator():
    report = eigensolver.verify_spectrum(_prediction([0.5, 1.5, 2.5, 3.5, 4.5]), oscillator_potential, Grid(), 2e-3)
    assert report.passed
    assert len(report.computed) == len(report.refined) == 5
    assert report.discretization_estimate < 1e-3
    assert report.model_dump(by_alias=True)["pass"] is True


def test_verify_spectrum_zero_tolerance_fails():
    report = eigensolver.verify_spectrum(_prediction([0.5, 1.5]), oscillator_potential, Grid(n_points=501), 0.0)
    assert not report.passed
    assert all(err > 0.0 for err in report.abs_errors)


def test_verify_spectrum_tightens_close_levels():
    """Levels 0.5 and 0.501 are checked at a third of their gap on the refined grid."""
    report = eigensolver.verify_spectrum(_prediction([0.5, 0.501]), oscillator_potential, Grid(), 2e-3)
    assert report.grid_points == eigensolver.REFINED_GRID_N
    assert report.level_tolerances[0] == pytest.approx(0.001 / 3.0)
    assert not report.passed


def test_verify_spectrum_rejects_narrow_grid():
    with pytest.raises(GridTooNarrowError):
        eigensolver.verify_spectrum(_prediction([0.5, 1.5, 2.5]), oscillator_potential, Grid.symmetric(3.0, 601), 2e-3)


def test_verify_spectrum_rejects_empty_prediction():
    with pytest.raises(EigenSolverError):
        eigensolver.verify_spectrum(SpectrumPrediction(levels=[]), oscillator_potential, Grid(), 2e-3)
