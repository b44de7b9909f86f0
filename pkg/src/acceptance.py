"""Built-in acceptance suite run by ``verify``.

Every check rebuilds its configuration from scratch, runs the finite-difference
oracle or the pointwise identity it targets, and reports the worst deviation.
"""

from __future__ import annotations

import contextlib
import io
import logging
import math
import tempfile
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import erf

from .data_models.output import CriterionOutput, VerifyOutput
from .eigensolver import (
    DEFAULT_TOLERANCE,
    REFINED_GRID_N,
    WIDE_SCALE_TOLERANCE,
    Grid,
    VerificationReport,
    discretize,
    lowest_eigenvalues,
    rayleigh_quotient,
    verify_spectrum,
)
from .errors import SpectraForgeError
from .riccati import (
    FactorizationConfig,
    alpha_numeric,
    alpha_oscillator,
    alpha_oscillator_solution,
    oscillator_potential,
    riccati_residual,
    scaled_alpha,
)
from .specfun import gamma_ratio
from .transforms import (
    ScalingParam,
    TransformSpec,
    build_potential,
    f_diagnostic,
    factorization_residual,
    ground_state_fn,
    intertwining_residual,
    local_minima,
    predict_spectrum,
    second_order_oscillator_v,
)

logger = logging.getLogger(__name__)

IDENTITY_TOL = 1e-8
REDUCTION_TOL = 1e-12
EVENNESS_TOL = 1e-10
BACKEND_TOL = 1e-6
RANDOM_CONFIGS = 20
SEED = 20240615

SQRT2 = math.sqrt(2.0)


def _first(eps: float, nu: float = 0.0) -> TransformSpec:
    return TransformSpec(kind="first_order", f1=FactorizationConfig(eps=eps, nu=nu))


def _second(eps1: float, nu1: float, eps2: float, nu2: float) -> TransformSpec:
    return TransformSpec(
        kind="second_order", f1=FactorizationConfig(eps=eps1, nu=nu1), f2=FactorizationConfig(eps=eps2, nu=nu2)
    )


def _scaled_first(eps: float, nu: float, q: float) -> TransformSpec:
    return TransformSpec(kind="scaled_first", f1=FactorizationConfig(eps=eps, nu=nu), s1=ScalingParam(q=q))


def _scaled_second(eps1: float, nu1: float, q1: float, eps2: float, nu2: float, q2: float) -> TransformSpec:
    return TransformSpec(
        kind="scaled_second",
        f1=FactorizationConfig(eps=eps1, nu=nu1),
        f2=FactorizationConfig(eps=eps2, nu=nu2),
        s1=ScalingParam(q=q1),
        s2=ScalingParam(q=q2),
    )


def _run_spectrum(spec: TransformSpec, n_max: int, tol: float, grid: Optional[Grid] = None) -> VerificationReport:
    potential = build_potential(spec)
    return verify_spectrum(predict_spectrum(spec, n_max), potential, grid or Grid(), tol)


def _gaussian(x: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    g = np.exp(-0.5 * x * x)
    return g, -x * g, (x * x - 1.0) * g, (3.0 * x - x**3) * g


def _worst(values: Sequence[float]) -> float:
    return float(max(values)) if len(values) else 0.0


def check_oscillator_baseline() -> CriterionOutput:
    values = lowest_eigenvalues(discretize(oscillator_potential, Grid()), 5)
    worst = _worst([abs(v - (n + 0.5)) for n, v in enumerate(values)])
    return CriterionOutput(
        criterion=1,
        name="oscillator baseline",
        passed=worst <= DEFAULT_TOLERANCE,
        detail=f"max |E_n - (n + 1/2)| = {worst:.3e}",
    )


def check_created_ground_state() -> CriterionOutput:
    report = _run_spectrum(_first(-1.0, 0.5), 4, DEFAULT_TOLERANCE)
    xs = Grid().points()
    shifted = build_potential(_first(-0.5, 0.0))(xs)
    deviation = float(np.max(np.abs(shifted - (0.5 * xs * xs - 1.0))))
    return CriterionOutput(
        criterion=2,
        name="first order adds a ground level",
        passed=report.passed and deviation <= EVENNESS_TOL,
        detail=f"max level error {_worst(report.abs_errors):.3e}; shifted oscillator deviation {deviation:.3e}",
    )


def check_erf_reduction() -> CriterionOutput:
    xs = np.linspace(-5.0, 5.0, 1001)
    worst = 0.0
    for nu in (0.3, -0.7):
        alpha, _ = alpha_oscillator(xs, FactorizationConfig(eps=-0.5, nu=nu))
        closed = xs + (2.0 * nu / math.sqrt(math.pi)) * np.exp(-xs * xs) / (1.0 + nu * erf(xs))
        worst = max(worst, float(np.max(np.abs(alpha - closed))))
    return CriterionOutput(
        criterion=3,
        name="error-function reduction at eps = -1/2",
        passed=worst <= IDENTITY_TOL,
        detail=f"max |alpha - closed form| = {worst:.3e}",
    )


def check_moving_first_excited() -> CriterionOutput:
    grid = Grid(n_points=REFINED_GRID_N)
    base = _run_spectrum(_second(0.4, 0.0, -0.5, 10000.0), 3, DEFAULT_TOLERANCE, grid)
    passed = base.passed
    fixed_drift = 0.0
    for eps1 in (-0.4, 0.0, 0.4):
        report = _run_spectrum(_second(eps1, 0.0, -0.5, 10000.0), 3, DEFAULT_TOLERANCE, grid)
        passed = passed and report.passed
        fixed = [c for c, label in zip(report.computed, report.labels) if label != "created(eps1)"]
        reference = [c for c, label in zip(base.computed, base.labels) if label != "created(eps1)"]
        fixed_drift = max(fixed_drift, _worst([abs(a - b) for a, b in zip(fixed, reference)]))
    passed = passed and fixed_drift <= DEFAULT_TOLERANCE
    return CriterionOutput(
        criterion=4,
        name="second order moves only the first excited level",
        passed=passed,
        detail=f"max level error {_worst(base.abs_errors):.3e}; fixed-level drift {fixed_drift:.3e}",
    )


def check_fixed_ground() -> CriterionOutput:
    passed = True
    ground_drift = 0.0
    details = []
    for q in (1.0 / SQRT2, 1.0, SQRT2):
        spec = _scaled_first(-0.5 * q * q, 0.0, q)
        tol = WIDE_SCALE_TOLERANCE if spec.energy_scale >= 1.5 else DEFAULT_TOLERANCE
        report = _run_spectrum(spec, 4, tol)
        ground_drift = max(ground_drift, abs(report.computed[0] + 0.5))

        grid = Grid()
        psi = ground_state_fn(spec, grid)
        op = discretize(build_potential(spec), grid)
        quotient = rayleigh_quotient(op, psi.samples[1:-1])
        passed = passed and report.passed and abs(quotient - psi.energy) <= tol
        details.append(f"q={q:.4f}: err {_worst(report.abs_errors):.2e}")

    wells = local_minima(build_potential(_scaled_first(-0.25, 0.0, 1.0 / SQRT2)), -5.0, 5.0)
    passed = passed and ground_drift <= DEFAULT_TOLERANCE and len(wells) == 2
    details.append(f"ground drift {ground_drift:.2e}; wells at q=1/sqrt2: {len(wells)}")
    return CriterionOutput(criterion=5, name="scaling holds the ground level", passed=passed, detail="; ".join(details))


def check_fixed_first_excited() -> CriterionOutput:
    scaled = _run_spectrum(_scaled_second(-1.0, 0.0, SQRT2, -1.5, 1.1, 1.0), 3, DEFAULT_TOLERANCE)
    unscaled = _run_spectrum(_scaled_second(-0.5, 0.0, 1.0, -1.5, 1.1, 1.0), 3, DEFAULT_TOLERANCE)
    drift = abs(scaled.computed[1] - unscaled.computed[1])
    return CriterionOutput(
        criterion=6,
        name="two-step scaling holds the first excited level",
        passed=scaled.passed and unscaled.passed and drift <= DEFAULT_TOLERANCE,
        detail=f"max level error {_worst(scaled.abs_errors + unscaled.abs_errors):.3e}; level drift {drift:.3e}",
    )


def check_fixed_two_lowest() -> CriterionOutput:
    scaled = _run_spectrum(_scaled_second(0.36, 0.0, 1.2, -0.72, 10000.0, 1.0), 2, DEFAULT_TOLERANCE)
    unscaled = _run_spectrum(_scaled_second(0.25, 0.0, 1.0, -0.5, 10000.0, 1.0), 2, DEFAULT_TOLERANCE)
    drift = _worst([abs(a - b) for a, b in zip(scaled.computed[:2], unscaled.computed[:2])])
    return CriterionOutput(
        criterion=7,
        name="two-step scaling holds the two lowest levels",
        passed=scaled.passed and unscaled.passed and drift <= DEFAULT_TOLERANCE,
        detail=f"max level error {_worst(scaled.abs_errors + unscaled.abs_errors):.3e}; level drift {drift:.3e}",
    )


def _property_deviations() -> List[Tuple[str, float, float]]:
    rng = np.random.default_rng(SEED)
    xs = np.linspace(-5.0, 5.0, 201)
    out = []

    riccati = 0.0
    certification_xs = np.linspace(-6.0, 6.0, 201)
    for _ in range(RANDOM_CONFIGS):
        config = FactorizationConfig(eps=float(rng.uniform(-3.0, 0.45)), nu=float(rng.uniform(-0.99, 0.99)))
        residual = riccati_residual(alpha_oscillator_solution(config), certification_xs)
        riccati = max(riccati, float(np.max(np.abs(residual))))
    out.append(("riccati residual", riccati, IDENTITY_TOL))

    scaled = 0.0
    config = FactorizationConfig(eps=-0.8, nu=0.4)
    sol = alpha_oscillator_solution(config)
    for q in (1.0 / SQRT2, SQRT2):
        alpha1, alpha1_prime = scaled_alpha(sol, q, xs)
        lhs = q * q * (alpha1_prime + alpha1 * alpha1)
        scaled = max(scaled, float(np.max(np.abs(lhs - 2.0 * (oscillator_potential(xs / q) - config.eps)))))
        potential = build_potential(_scaled_first(config.eps, config.nu, q))(xs)
        via_f = oscillator_potential(xs) - f_diagnostic(xs, config, ScalingParam(q=q)) / (q * q)
        scaled = max(scaled, float(np.max(np.abs(potential - via_f))))
    out.append(("scaled riccati identity", scaled, IDENTITY_TOL))

    reduction = float(
        max(
            np.max(np.abs(build_potential(_scaled_first(-0.8, 0.4, 1.0))(xs) - build_potential(_first(-0.8, 0.4))(xs))),
            np.max(
                np.abs(
                    build_potential(_scaled_second(0.2, 0.3, 1.0, -1.0, 2.0, 1.0))(xs)
                    - build_potential(_second(0.2, 0.3, -1.0, 2.0))(xs)
                )
            ),
        )
    )
    out.append(("q = 1 reduction", reduction, REDUCTION_TOL))

    f1, f2 = FactorizationConfig(eps=0.2, nu=0.3), FactorizationConfig(eps=-1.0, nu=2.0)
    swap = float(np.max(np.abs(second_order_oscillator_v(xs, f1, f2) - second_order_oscillator_v(xs, f2, f1))))
    out.append(("swap symmetry", swap, REDUCTION_TOL))

    points = np.linspace(-4.0, 4.0, 161)
    intertwining = max(
        intertwining_residual(_first(-1.0, 0.5), _gaussian, points),
        intertwining_residual(_scaled_first(-0.25, 0.0, 1.0 / SQRT2), _gaussian, points),
        intertwining_residual(_second(0.4, 0.0, -0.5, 10000.0), _gaussian, points),
        intertwining_residual(_scaled_second(-1.0, 0.0, SQRT2, -1.5, 1.1, 1.0), _gaussian, points),
        factorization_residual(_scaled_first(-1.0, 0.3, SQRT2), _gaussian, points),
    )
    out.append(("intertwining residual", intertwining, IDENTITY_TOL))

    even = build_potential(_first(-1.3, 0.0))
    evenness = float(np.max(np.abs(even(xs) - even(-xs))))
    out.append(("nu = 0 evenness", evenness, EVENNESS_TOL))

    backend = 0.0
    grid = Grid.symmetric(5.0, 1001)
    off_nodes = np.linspace(-4.995, 4.995, 777)
    for config in (FactorizationConfig(eps=-1.0, nu=0.5), FactorizationConfig(eps=0.3, nu=-0.6)):
        numeric = alpha_numeric(oscillator_potential, config.eps, 2.0 * config.nu * gamma_ratio(config.eps), grid)
        analytic, _ = alpha_oscillator(off_nodes, config)
        backend = max(backend, float(np.max(np.abs(numeric.evaluate(off_nodes)[0] - analytic))))
    out.append(("backend agreement", backend, BACKEND_TOL))
    return out


def check_properties() -> CriterionOutput:
    deviations = _property_deviations()
    failed = [f"{name} {value:.2e} > {limit:.0e}" for name, value, limit in deviations if not value <= limit]
    detail = "; ".join(failed) if failed else "; ".join(f"{name} {value:.1e}" for name, value, _ in deviations[:3])
    return CriterionOutput(criterion=8, name="property suites", passed=not failed, detail=detail)


def check_cli_determinism() -> CriterionOutput:
    from .cli import run_command

    flags = ["generate", "--kind", "scaled-first", "--eps1", "-1", "--nu1", "0.2", "--q1", "1.41421356"]
    with tempfile.TemporaryDirectory() as tmp:
        paths = [Path(tmp) / "first.csv", Path(tmp) / "second.csv"]
        with contextlib.redirect_stdout(io.StringIO()):
            codes = [run_command(flags + ["--out", str(path)]) for path in paths]
        identical = all(code == 0 for code in codes) and paths[0].read_bytes() == paths[1].read_bytes()
    return CriterionOutput(
        criterion=9,
        name="generate is deterministic",
        passed=identical,
        detail=f"exit codes {codes}; byte-identical={identical}",
    )


CRITERIA: List[Callable[[], CriterionOutput]] = [
    check_oscillator_baseline,
    check_created_ground_state,
    check_erf_reduction,
    check_moving_first_excited,
    check_fixed_ground,
    check_fixed_first_excited,
    check_fixed_two_lowest,
    check_properties,
    check_cli_determinism,
]


def run_acceptance(checks: Optional[Sequence[Callable[[], CriterionOutput]]] = None) -> VerifyOutput:
    results = []
    for number, check in enumerate(checks or CRITERIA, start=1):
        try:
            result = check()
        except SpectraForgeError as e:
            result = CriterionOutput(criterion=number, name=check.__name__, passed=False, detail=e.reason)
        logger.info("criterion %d (%s): %s", result.criterion, result.name, "pass" if result.passed else "FAIL")
        results.append(result)
    return VerifyOutput(criteria=results, passed=all(r.passed for r in results))
