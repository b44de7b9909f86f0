"""Solutions alpha(x, eps) of the Riccati equation alpha' + alpha^2 = 2 (V0 - eps).

Two backends produce them:

* the analytic oscillator seed, alpha = x + u'/u with u built from two Kummer
  functions and the mixing constant nu;
* a numeric integrator of H0 psi = eps psi for any sampled potential, with
  alpha = psi'/psi.

The module also certifies that the seed function has no zeros, which is what
keeps the constructed potentials free of new singularities.
"""

from __future__ import annotations

import logging
import math
from typing import Callable, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.interpolate import CubicHermiteSpline

from .eigensolver import Grid
from .errors import OutOfDomainError, SingularityError, SpecialFunctionDomainError
from .specfun import gamma_ratio, kummer_1f1, kummer_1f1_dz

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

# Ground-state energy of the oscillator base V0 = x^2 / 2
OSCILLATOR_E0 = 0.5
ZERO_THRESHOLD = 1e-13
# half-width (relative to max(1, |x|)) of the bracket that confirms a sign change
ZERO_CONFIRM_STEP = 1e-6
BISECTION_TOL = 1e-10
# psi is rescaled once it grows past this
RENORMALIZE_ABOVE = 1e100
MAX_INTEGRATION_STEP = 1e-3
CERTIFICATION_HALF_WIDTH = 12.0
CERTIFICATION_POINTS = 2401


class FactorizationConfig(BaseModel):
    """A factorization energy eps with the mixing constant nu of the oscillator seed."""

    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    eps: float = Field(description="Factorization energy")
    nu: float = Field(default=0.0, description="Ratio of the two independent seed solutions")


class NodelessCertificate(BaseModel):
    model_config = ConfigDict(frozen=True)

    scanned_interval: Tuple[float, float]
    grid_points: int
    outcome: Literal["nodeless", "zero_found"]
    location: Optional[float] = None

    @property
    def nodeless(self) -> bool:
        return self.outcome == "nodeless"


class RiccatiSolution(BaseModel):
    """An evaluatable alpha(x, eps) together with the potential it solves against.

    ``evaluator`` maps x (scalar or array) to the pair (alpha, alpha').
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    config: FactorizationConfig
    backend: Literal["analytic-oscillator", "numeric"]
    evaluator: Callable[[ArrayLike], Tuple[ArrayLike, ArrayLike]]
    base_potential: Callable[[ArrayLike], ArrayLike]
    domain: Tuple[float, float]
    psi0_slope: Optional[float] = None
    # chained solutions: the potential the chain started from and the (eps, nu) of every link applied to it
    root_potential: Optional[Callable[[ArrayLike], ArrayLike]] = None
    lineage: Tuple[Tuple[float, float], ...] = ()

    def evaluate(self, x: ArrayLike) -> Tuple[ArrayLike, ArrayLike]:
        x_arr = np.asarray(x, dtype=float)
        lo, hi = self.domain
        if np.any(x_arr < lo) or np.any(x_arr > hi):
            raise OutOfDomainError(f"x outside the certified domain [{lo}, {hi}]")
        return self.evaluator(x)

    def shares_base(self, other: "RiccatiSolution") -> bool:
        """True when both solve against the same potential (same root and same chain of links)."""
        if self.lineage != other.lineage:
            return False
        if self.lineage:
            return self.root_potential is other.root_potential
        return self.base_potential is other.base_potential


def confirmed_zero(fn: Callable[[ArrayLike], ArrayLike], x: ArrayLike, values: ArrayLike) -> Optional[float]:
    """First x with |value| < ZERO_THRESHOLD where ``fn`` also changes sign across a small bracket.

    A tiny value alone (a decaying seed far out, say) is not reported.
    """
    x_flat = np.asarray(x, dtype=float).reshape(-1)
    v_flat = np.asarray(values, dtype=float).reshape(-1)
    for i in np.nonzero(np.abs(v_flat) < ZERO_THRESHOLD)[0]:
        xi = float(x_flat[i])
        if v_flat[i] == 0.0:
            return xi
        step = ZERO_CONFIRM_STEP * max(1.0, abs(xi))
        left, right = np.asarray(fn(np.array([xi - step, xi + step])), dtype=float)
        if left * right <= 0.0:
            return xi
    return None


def oscillator_potential(x: ArrayLike) -> ArrayLike:
    return 0.5 * np.asarray(x, dtype=float) ** 2 if np.ndim(x) else 0.5 * float(x) ** 2


def oscillator_potential_dx(x: ArrayLike) -> ArrayLike:
    return np.asarray(x, dtype=float) if np.ndim(x) else float(x)


def _check_oscillator_eps(config: FactorizationConfig) -> None:
    if not config.eps < OSCILLATOR_E0:
        raise SpecialFunctionDomainError(
            f"oscillator seed requires eps < {OSCILLATOR_E0}, got {config.eps}"
        )


def oscillator_seed(x: ArrayLike, config: FactorizationConfig) -> Tuple[ArrayLike, ArrayLike, ArrayLike]:
    """Seed u(x) = 1F1((1+2e)/4, 1/2; -x^2) + 2 nu G x 1F1((3+2e)/4, 3/2; -x^2) and u', u''.

    Derivatives are taken term by term through z = -x^2; the second derivative
    uses the 1F1 derivative rule twice.
    """
    _check_oscillator_eps(config)
    x_arr = np.asarray(x, dtype=float)
    z = -x_arr * x_arr
    eps = config.eps

    a1, b1 = (1.0 + 2.0 * eps) / 4.0, 0.5
    m1 = kummer_1f1(a1, b1, z)
    m1_z = kummer_1f1_dz(a1, b1, z)
    m1_zz = (a1 / b1) * kummer_1f1_dz(a1 + 1.0, b1 + 1.0, z) if a1 != 0 else np.zeros_like(z)
    u = m1
    du = -2.0 * x_arr * m1_z
    d2u = -2.0 * m1_z + 4.0 * x_arr**2 * m1_zz

    if config.nu != 0.0:
        c = 2.0 * config.nu * gamma_ratio(eps)
        a2, b2 = (3.0 + 2.0 * eps) / 4.0, 1.5
        m2 = kummer_1f1(a2, b2, z)
        m2_z = kummer_1f1_dz(a2, b2, z)
        m2_zz = (a2 / b2) * kummer_1f1_dz(a2 + 1.0, b2 + 1.0, z) if a2 != 0 else np.zeros_like(z)
        u = u + c * x_arr * m2
        du = du + c * (m2 - 2.0 * x_arr**2 * m2_z)
        d2u = d2u + c * (-6.0 * x_arr * m2_z + 4.0 * x_arr**3 * m2_zz)

    if np.ndim(x) == 0:
        return float(u), float(du), float(d2u)
    return u, du, d2u


def alpha_oscillator(x: ArrayLike, config: FactorizationConfig) -> Tuple[ArrayLike, ArrayLike]:
    """alpha = x + u'/u and alpha' = 1 + u''/u - (u'/u)^2 for the oscillator seed."""
    u, du, d2u = oscillator_seed(x, config)
    where = confirmed_zero(lambda p: oscillator_seed(p, config)[0], x, u)
    if where is not None:
        raise SingularityError(f"seed vanishes for eps={config.eps}, nu={config.nu}", location=where)
    ratio = du / u
    alpha = x + ratio
    alpha_prime = 1.0 + d2u / u - ratio * ratio
    return alpha, alpha_prime


def alpha_oscillator_solution(
    config: FactorizationConfig, half_width: float = CERTIFICATION_HALF_WIDTH
) -> RiccatiSolution:
    _check_oscillator_eps(config)
    return RiccatiSolution(
        config=config,
        backend="analytic-oscillator",
        evaluator=lambda x: alpha_oscillator(x, config),
        base_potential=oscillator_potential,
        domain=(-half_width, half_width),
    )


def _first_sign_change(xs: np.ndarray, values: np.ndarray) -> Optional[int]:
    signs = np.sign(values)
    hits = np.nonzero((signs[:-1] * signs[1:] <= 0))[0]
    return int(hits[0]) if hits.size else None


def sign_scan(fn: Callable[[ArrayLike], ArrayLike], x_lo: float, x_hi: float, n: int) -> NodelessCertificate:
    """Look for a zero of ``fn`` on [x_lo, x_hi].

    The uniform grid is refined with midpoints on both sides of every local
    minimum of |fn|; the first sign change is bisected down to 1e-10.
    """
    if n < 101:
        raise ValueError(f"scan needs at least 101 points, got {n}")
    if not x_lo < x_hi:
        raise ValueError(f"invalid scan interval [{x_lo}, {x_hi}]")

    xs = np.linspace(x_lo, x_hi, n)
    values = np.asarray(fn(xs), dtype=float)
    mag = np.abs(values)
    minima = np.nonzero((mag[1:-1] <= mag[:-2]) & (mag[1:-1] <= mag[2:]))[0] + 1
    if minima.size:
        extra = np.concatenate([(xs[minima - 1] + xs[minima]) / 2.0, (xs[minima] + xs[minima + 1]) / 2.0])
        extra_values = np.asarray(fn(extra), dtype=float)
        xs = np.concatenate([xs, extra])
        values = np.concatenate([values, extra_values])
        order = np.argsort(xs, kind="stable")
        xs, values = xs[order], values[order]

    idx = _first_sign_change(xs, values)
    if idx is None:
        return NodelessCertificate(scanned_interval=(x_lo, x_hi), grid_points=int(xs.size), outcome="nodeless")

    lo, hi = float(xs[idx]), float(xs[idx + 1])
    f_lo = float(values[idx])
    if f_lo == 0.0:
        hi = lo
    elif float(values[idx + 1]) == 0.0:
        lo = hi
    while hi - lo > BISECTION_TOL:
        mid = 0.5 * (lo + hi)
        f_mid = float(fn(mid))
        if f_mid == 0.0:
            lo = hi = mid
            break
        if math.copysign(1.0, f_mid) == math.copysign(1.0, f_lo):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    location = 0.5 * (lo + hi)
    logger.info("sign change located at x=%.10f", location)
    return NodelessCertificate(
        scanned_interval=(x_lo, x_hi), grid_points=int(xs.size), outcome="zero_found", location=location
    )


def nodeless_scan(config: FactorizationConfig, x_lo: float, x_hi: float, n: int = CERTIFICATION_POINTS) -> NodelessCertificate:
    """Certify that the oscillator seed u(x) keeps one sign on [x_lo, x_hi]."""
    return sign_scan(lambda x: oscillator_seed(x, config)[0], x_lo, x_hi, n)


def _integrate_half_line(
    potential: Callable[[ArrayLike], ArrayLike], eps: float, slope: float, x_end: float, n_out: int, substeps: int
) -> np.ndarray:
    """RK4 for (psi, psi') from x = 0 to x_end; returns alpha at n_out equally spaced points."""
    n_steps = (n_out - 1) * substeps
    h = x_end / n_steps
    g = 2.0 * (np.asarray(potential(np.linspace(0.0, x_end, 2 * n_steps + 1)), dtype=float) - eps)
    if not np.all(np.isfinite(g)):
        raise SingularityError("potential is not finite on the integration grid")
    g = g.tolist()

    psi, dpsi = 1.0, slope
    alpha = np.empty(n_out)
    alpha[0] = dpsi / psi
    half = 0.5 * h
    for step in range(n_steps):
        g0, gm, g1 = g[2 * step], g[2 * step + 1], g[2 * step + 2]
        k1p, k1d = dpsi, g0 * psi
        k2p, k2d = dpsi + half * k1d, gm * (psi + half * k1p)
        k3p, k3d = dpsi + half * k2d, gm * (psi + half * k2p)
        k4p, k4d = dpsi + h * k3d, g1 * (psi + h * k3p)
        new_psi = psi + h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
        dpsi = dpsi + h / 6.0 * (k1d + 2.0 * k2d + 2.0 * k3d + k4d)
        if new_psi == 0.0 or (new_psi > 0.0) != (psi > 0.0):
            raise SingularityError(
                f"psi changes sign for eps={eps}; alpha would have a pole", location=(step + 0.5) * h
            )
        psi = new_psi
        if abs(psi) > RENORMALIZE_ABOVE:
            scale = abs(psi)
            psi /= scale
            dpsi /= scale
        if (step + 1) % substeps == 0:
            alpha[(step + 1) // substeps] = dpsi / psi
    return alpha


def alpha_numeric(
    potential: Callable[[ArrayLike], ArrayLike], eps: float, psi0_slope: float, grid: Grid
) -> RiccatiSolution:
    """Integrate H0 psi = eps psi outward from x = 0 with psi(0) = 1, psi'(0) = psi0_slope.

    For the oscillator, psi0_slope = 2 nu gamma_ratio(eps) reproduces the
    analytic seed with mixing constant nu. The returned evaluator interpolates
    alpha with a cubic Hermite spline whose node derivatives come from the
    Riccati equation itself.
    """
    xs = grid.points()
    if not math.isclose(grid.x_min, -grid.x_max, abs_tol=1e-12) or grid.n_points % 2 == 0:
        raise ValueError("alpha_numeric needs a grid symmetric about 0 with an odd number of points")
    half = (grid.n_points - 1) // 2
    substeps = max(1, math.ceil(grid.spacing / MAX_INTEGRATION_STEP - 1e-9))

    right = _integrate_half_line(potential, eps, psi0_slope, grid.x_max, half + 1, substeps)
    left = _integrate_half_line(potential, eps, psi0_slope, grid.x_min, half + 1, substeps)
    alpha = np.concatenate([left[:0:-1], right])
    alpha_prime = 2.0 * (np.asarray(potential(xs), dtype=float) - eps) - alpha * alpha
    spline = CubicHermiteSpline(xs, alpha, alpha_prime)
    spline_dx = spline.derivative()
    logger.debug("numeric Riccati solution for eps=%s on %d points (%d substeps)", eps, xs.size, substeps)

    def evaluator(x: ArrayLike) -> Tuple[ArrayLike, ArrayLike]:
        if np.ndim(x) == 0:
            return float(spline(x)), float(spline_dx(x))
        return spline(x), spline_dx(x)

    nu = psi0_slope / (2.0 * gamma_ratio(eps)) if eps < OSCILLATOR_E0 else 0.0
    return RiccatiSolution(
        config=FactorizationConfig(eps=eps, nu=nu),
        backend="numeric",
        evaluator=evaluator,
        base_potential=potential,
        domain=(grid.x_min, grid.x_max),
        psi0_slope=psi0_slope,
    )


def riccati_residual(sol: RiccatiSolution, x: ArrayLike) -> ArrayLike:
    """alpha' + alpha^2 - 2 (V0 - eps); zero for an exact solution."""
    alpha, alpha_prime = sol.evaluate(x)
    return alpha_prime + alpha * alpha - 2.0 * (sol.base_potential(x) - sol.config.eps)


def scaled_alpha(sol: RiccatiSolution, q: float, x: ArrayLike) -> Tuple[ArrayLike, ArrayLike]:
    """alpha_1(x) = alpha(x/q) / q and its derivative alpha(x/q)' / q^2."""
    x_arr = np.asarray(x, dtype=float) if np.ndim(x) else float(x)
    alpha, alpha_prime = sol.evaluate(x_arr / q)
    return alpha / q, alpha_prime / (q * q)


__all__ = [
    "FactorizationConfig",
    "NodelessCertificate",
    "RiccatiSolution",
    "oscillator_potential",
    "oscillator_potential_dx",
    "oscillator_seed",
    "alpha_oscillator",
    "alpha_oscillator_solution",
    "confirmed_zero",
    "sign_scan",
    "nodeless_scan",
    "alpha_numeric",
    "riccati_residual",
    "scaled_alpha",
]
