"""Potentials with prescribed spectra built from the oscillator by intertwining.

Four constructions are supported: first order (one new level), second order
through the finite-difference chaining formula (two new levels), and the
scaled variants of both, where the intertwiner is composed with the dilation
x -> x/q. The dilation is never built as an operator; every scaled object is
the unscaled one evaluated at y = x/s and multiplied by the energy factor s^-2,
with s = q1 (one step) or q1 q2 (two steps).

Longer chains of k unscaled steps go through the Wronskian of the k seeds
(``higher_order_potential``); ``chain_alpha`` can also be applied repeatedly.
"""

from __future__ import annotations

import logging
import math
from typing import Callable, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, computed_field, model_validator
from scipy.integrate import cumulative_trapezoid, trapezoid

from .eigensolver import Grid
from .errors import (
    DegenerateEnergiesError,
    DenominatorZeroError,
    OrderingViolationError,
    OutOfDomainError,
    SingularPotentialError,
)
from .riccati import (
    CERTIFICATION_HALF_WIDTH,
    CERTIFICATION_POINTS,
    OSCILLATOR_E0,
    FactorizationConfig,
    NodelessCertificate,
    RiccatiSolution,
    alpha_oscillator,
    confirmed_zero,
    nodeless_scan,
    oscillator_potential,
    oscillator_potential_dx,
    oscillator_seed,
    sign_scan,
)

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]
TestFunction = Callable[[np.ndarray], Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]]
Kind = Literal["first_order", "second_order", "scaled_first", "scaled_second"]

DEGENERACY_GUARD = 1e-9
# largest |y| at which the seed is evaluated; keeps the Kummer series under its term cap
MAX_SEED_ABSCISSA = 17.0
_SQRT2 = math.sqrt(2.0)


class ScalingParam(BaseModel):
    """Dilation factor q > 0; lambda = -ln q so that q^2 = exp(-2 lambda)."""

    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    q: float = Field(gt=0.0)

    @computed_field(alias="lambda")
    @property
    def lam(self) -> float:
        return -math.log(self.q)

    @classmethod
    def from_lambda(cls, lam: float) -> "ScalingParam":
        return cls(q=math.exp(-lam))


class TransformSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Kind
    f1: FactorizationConfig
    f2: Optional[FactorizationConfig] = None
    s1: Optional[ScalingParam] = None
    s2: Optional[ScalingParam] = None

    @model_validator(mode="after")
    def _required_parts(self) -> "TransformSpec":
        if self.two_step and self.f2 is None:
            raise ValueError(f"{self.kind} needs a second factorization (f2)")
        if self.kind in ("scaled_first", "scaled_second") and self.s1 is None:
            raise ValueError(f"{self.kind} needs the scaling parameter s1")
        if self.kind == "scaled_second" and self.s2 is None:
            raise ValueError("scaled_second needs the scaling parameter s2")
        self.check_ordering()
        return self

    @property
    def two_step(self) -> bool:
        return self.kind in ("second_order", "scaled_second")

    @property
    def scale(self) -> float:
        """Total dilation s: 1, q1 or q1 q2."""
        if self.kind == "scaled_first":
            return self.s1.q
        if self.kind == "scaled_second":
            return self.s1.q * self.s2.q
        return 1.0

    @property
    def energy_scale(self) -> float:
        return self.scale ** -2

    def check_ordering(self) -> None:
        """eps1 < 1/2, and eps2 < eps1 with a nonvanishing gap for the two-step kinds."""
        if not self.two_step:
            if not self.f1.eps < OSCILLATOR_E0:
                raise OrderingViolationError(
                    f"eps1 must lie below the oscillator ground level {OSCILLATOR_E0}, got {self.f1.eps}"
                )
            return
        eps1, eps2 = self.f1.eps, self.f2.eps
        if abs(eps1 - eps2) <= DEGENERACY_GUARD:
            raise DegenerateEnergiesError(f"eps1 and eps2 coincide ({eps1} vs {eps2})")
        if not eps2 < eps1 < OSCILLATOR_E0:
            raise OrderingViolationError(f"need eps2 < eps1 < {OSCILLATOR_E0}, got eps1={eps1}, eps2={eps2}")

    def precheck_mixing(self) -> None:
        """Fast |nu1| < 1, |nu2| > 1 gate for two-step kinds; the Wronskian scan decides."""
        if not self.two_step:
            return
        if not abs(self.f1.nu) < 1.0:
            raise SingularPotentialError(f"precheck failed: two-step constructions need |nu1| < 1, got {self.f1.nu}")
        if not abs(self.f2.nu) > 1.0:
            raise SingularPotentialError(f"precheck failed: two-step constructions need |nu2| > 1, got {self.f2.nu}")


class GeneratedPotential(BaseModel):
    """A constructed potential, callable on its certified domain."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    spec: Optional[TransformSpec] = None
    evaluator: Callable[[ArrayLike], ArrayLike]
    certified_domain: Tuple[float, float]
    certificates: List[NodelessCertificate] = Field(default_factory=list)

    def __call__(self, x: ArrayLike) -> ArrayLike:
        lo, hi = self.certified_domain
        x_arr = np.asarray(x, dtype=float)
        if np.any(x_arr < lo - 1e-12) or np.any(x_arr > hi + 1e-12):
            raise OutOfDomainError(f"potential evaluated outside its certified domain [{lo:.6g}, {hi:.6g}]")
        return self.evaluator(x)


class SpectrumLevel(BaseModel):
    model_config = ConfigDict(frozen=True)

    value: float
    label: str
    scale: float


class SpectrumPrediction(BaseModel):
    model_config = ConfigDict(frozen=True)

    levels: List[SpectrumLevel]

    @model_validator(mode="after")
    def _increasing(self) -> "SpectrumPrediction":
        values = [level.value for level in self.levels]
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ValueError(f"predicted levels must be strictly increasing: {values}")
        return self

    @property
    def values(self) -> List[float]:
        return [level.value for level in self.levels]


class GroundStateFunction(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    x: np.ndarray
    samples: np.ndarray
    energy: float


def _certified_half_width(scale: float) -> float:
    return min(CERTIFICATION_HALF_WIDTH, MAX_SEED_ABSCISSA * scale)


def oscillator_wronskian(y: ArrayLike, f1: FactorizationConfig, f2: FactorizationConfig) -> ArrayLike:
    """W = u1' u2 - u1 u2'; alpha(y, eps1) - alpha(y, eps2) = W / (u1 u2)."""
    u1, du1, _ = oscillator_seed(y, f1)
    u2, du2, _ = oscillator_seed(y, f2)
    return du1 * u2 - u1 * du2


def first_order_oscillator_v(y: ArrayLike, f1: FactorizationConfig) -> ArrayLike:
    """V1 = y^2/2 - alpha'(y, eps1)."""
    _, alpha_prime = alpha_oscillator(y, f1)
    return oscillator_potential(y) - alpha_prime


def second_order_oscillator_v(y: ArrayLike, f1: FactorizationConfig, f2: FactorizationConfig) -> ArrayLike:
    """V2 = y^2/2 + d/dy [2 (eps1 - eps2) / (alpha(y, eps1) - alpha(y, eps2))].

    Written through the seeds: the bracket is 2 (eps1 - eps2) u1 u2 / W, so
    zeros of u2 (allowed when |nu2| > 1) are regular points.
    """
    u1, du1, d2u1 = oscillator_seed(y, f1)
    u2, du2, d2u2 = oscillator_seed(y, f2)
    w = du1 * u2 - u1 * du2
    dw = d2u1 * u2 - u1 * d2u2
    product = u1 * u2
    d_product = du1 * u2 + u1 * du2
    gap = 2.0 * (f1.eps - f2.eps)
    return oscillator_potential(y) + gap * (d_product * w - product * dw) / (w * w)


def _scaled(unscaled: Callable[[ArrayLike], ArrayLike], scale: float) -> Callable[[ArrayLike], ArrayLike]:
    """x -> s^-2 V(x / s)."""
    if scale == 1.0:
        return unscaled
    factor = scale ** -2

    def evaluator(x: ArrayLike) -> ArrayLike:
        return factor * unscaled(np.asarray(x, dtype=float) / scale if np.ndim(x) else float(x) / scale)

    return evaluator


def build_potential(spec: TransformSpec) -> GeneratedPotential:
    """Construct the potential described by ``spec`` after its nodeless gate passes."""
    spec.check_ordering()
    spec.precheck_mixing()
    s = spec.scale
    half = _certified_half_width(s)
    y_half = half / s

    if spec.two_step:
        f1, f2 = spec.f1, spec.f2
        certificate = sign_scan(lambda y: oscillator_wronskian(y, f1, f2), -y_half, y_half, CERTIFICATION_POINTS)
        if not certificate.nodeless:
            raise SingularPotentialError(
                f"alpha(eps1) - alpha(eps2) vanishes for eps1={f1.eps}, nu1={f1.nu}, eps2={f2.eps}, nu2={f2.nu}",
                location=certificate.location * s,
            )
        unscaled = lambda y: second_order_oscillator_v(y, f1, f2)
    else:
        f1 = spec.f1
        certificate = nodeless_scan(f1, -y_half, y_half, CERTIFICATION_POINTS)
        if not certificate.nodeless:
            raise SingularPotentialError(
                f"seed has a zero for eps1={f1.eps}, nu1={f1.nu}", location=certificate.location * s
            )
        unscaled = lambda y: first_order_oscillator_v(y, f1)

    logger.info("built %s potential (scale %.6g) on [-%.6g, %.6g]", spec.kind, s, half, half)
    return GeneratedPotential(
        spec=spec, evaluator=_scaled(unscaled, s), certified_domain=(-half, half), certificates=[certificate]
    )


def first_order_potential(f1: FactorizationConfig) -> GeneratedPotential:
    return build_potential(TransformSpec(kind="first_order", f1=f1))


def second_order_potential(f1: FactorizationConfig, f2: FactorizationConfig) -> GeneratedPotential:
    return build_potential(TransformSpec(kind="second_order", f1=f1, f2=f2))


def scaled_first_potential(f1: FactorizationConfig, s1: ScalingParam) -> GeneratedPotential:
    return build_potential(TransformSpec(kind="scaled_first", f1=f1, s1=s1))


def scaled_second_potential(
    f1: FactorizationConfig, s1: ScalingParam, f2: FactorizationConfig, s2: ScalingParam
) -> GeneratedPotential:
    return build_potential(TransformSpec(kind="scaled_second", f1=f1, f2=f2, s1=s1, s2=s2))


def first_order_from_solution(sol: RiccatiSolution) -> GeneratedPotential:
    """V1 = V0 - alpha' for any Riccati solution, including numeric ones."""

    def evaluator(x: ArrayLike) -> ArrayLike:
        _, alpha_prime = sol.evaluate(x)
        return sol.base_potential(x) - alpha_prime

    return GeneratedPotential(evaluator=evaluator, certified_domain=sol.domain)


def _check_gap(eps1: float, eps2: float) -> None:
    if abs(eps1 - eps2) <= DEGENERACY_GUARD:
        raise DegenerateEnergiesError(f"chaining needs distinct energies, got {eps1} and {eps2}")


def chain_alpha(alpha_at_e1: RiccatiSolution, alpha_at_e2: RiccatiSolution) -> RiccatiSolution:
    """Next-link solution alpha_2(x, eps2) = -alpha(x, eps1) - 2 (eps1 - eps2) / (alpha(x, eps1) - alpha(x, eps2)).

    The result solves the Riccati equation at eps2 against V1 = V0 - alpha'(x, eps1).
    Points where the denominator vanishes raise DenominatorZeroError; use
    ``certify_denominator`` to gate a whole interval. Results chained off the
    same link share their base and can be chained again.
    """
    if not alpha_at_e1.shares_base(alpha_at_e2):
        raise ValueError("both solutions must solve the same base potential")
    eps1, eps2 = alpha_at_e1.config.eps, alpha_at_e2.config.eps
    _check_gap(eps1, eps2)
    gap = 2.0 * (eps1 - eps2)

    def difference(x: ArrayLike) -> ArrayLike:
        return alpha_at_e1.evaluator(x)[0] - alpha_at_e2.evaluator(x)[0]

    def evaluator(x: ArrayLike) -> Tuple[ArrayLike, ArrayLike]:
        a1, a1_prime = alpha_at_e1.evaluate(x)
        a2, a2_prime = alpha_at_e2.evaluate(x)
        denominator = a1 - a2
        where = confirmed_zero(difference, x, denominator)
        if where is not None:
            raise DenominatorZeroError("alpha(eps1) - alpha(eps2) vanishes", location=where)
        alpha = -a1 - gap / denominator
        alpha_prime = -a1_prime + gap * (a1_prime - a2_prime) / (denominator * denominator)
        return alpha, alpha_prime

    def base_potential(x: ArrayLike) -> ArrayLike:
        return alpha_at_e1.base_potential(x) - alpha_at_e1.evaluate(x)[1]

    lo = max(alpha_at_e1.domain[0], alpha_at_e2.domain[0])
    hi = min(alpha_at_e1.domain[1], alpha_at_e2.domain[1])
    analytic = alpha_at_e1.backend == alpha_at_e2.backend == "analytic-oscillator"
    root = alpha_at_e1.root_potential if alpha_at_e1.lineage else alpha_at_e1.base_potential
    return RiccatiSolution(
        config=alpha_at_e2.config,
        backend="analytic-oscillator" if analytic else "numeric",
        evaluator=evaluator,
        base_potential=base_potential,
        domain=(lo, hi),
        root_potential=root,
        lineage=alpha_at_e1.lineage + ((eps1, alpha_at_e1.config.nu),),
    )


def _oscillator_seeded(sol: RiccatiSolution) -> bool:
    return sol.backend == "analytic-oscillator" and sol.base_potential is oscillator_potential


def certify_denominator(
    alpha_at_e1: RiccatiSolution, alpha_at_e2: RiccatiSolution, n: int = CERTIFICATION_POINTS
) -> NodelessCertificate:
    """Scan the chaining denominator over the common domain.

    Analytic oscillator pairs are scanned through their Wronskian, which has
    the same zeros but no poles.
    """
    lo = max(alpha_at_e1.domain[0], alpha_at_e2.domain[0])
    hi = min(alpha_at_e1.domain[1], alpha_at_e2.domain[1])
    if _oscillator_seeded(alpha_at_e1) and _oscillator_seeded(alpha_at_e2):
        f1, f2 = alpha_at_e1.config, alpha_at_e2.config
        return sign_scan(lambda x: oscillator_wronskian(x, f1, f2), lo, hi, n)
    return sign_scan(lambda x: alpha_at_e1.evaluate(x)[0] - alpha_at_e2.evaluate(x)[0], lo, hi, n)


def second_order_from_solutions(alpha_at_e1: RiccatiSolution, alpha_at_e2: RiccatiSolution) -> GeneratedPotential:
    """V2 = V0 + d/dx [2 (eps1 - eps2) / (alpha(x, eps1) - alpha(x, eps2))] for any base potential."""
    if not alpha_at_e1.shares_base(alpha_at_e2):
        raise ValueError("both solutions must solve the same base potential")
    eps1, eps2 = alpha_at_e1.config.eps, alpha_at_e2.config.eps
    _check_gap(eps1, eps2)
    certificate = certify_denominator(alpha_at_e1, alpha_at_e2)
    if not certificate.nodeless:
        raise SingularPotentialError("alpha(eps1) - alpha(eps2) vanishes", location=certificate.location)
    gap = 2.0 * (eps1 - eps2)

    def evaluator(x: ArrayLike) -> ArrayLike:
        a1, a1_prime = alpha_at_e1.evaluate(x)
        a2, a2_prime = alpha_at_e2.evaluate(x)
        denominator = a1 - a2
        return alpha_at_e1.base_potential(x) - gap * (a1_prime - a2_prime) / (denominator * denominator)

    return GeneratedPotential(
        evaluator=evaluator, certified_domain=certificate.scanned_interval, certificates=[certificate]
    )


class ChainSpec(BaseModel):
    """k factorizations applied in turn: eps_k < ... < eps_2 < eps_1 < 1/2."""

    model_config = ConfigDict(frozen=True)

    factors: List[FactorizationConfig] = Field(min_length=1)

    @model_validator(mode="after")
    def _ordered(self) -> "ChainSpec":
        energies = [f.eps for f in self.factors]
        if not energies[0] < OSCILLATOR_E0:
            raise OrderingViolationError(
                f"eps1 must lie below the oscillator ground level {OSCILLATOR_E0}, got {energies[0]}"
            )
        for j, (upper, lower) in enumerate(zip(energies, energies[1:]), start=2):
            if abs(upper - lower) <= DEGENERACY_GUARD:
                raise DegenerateEnergiesError(f"eps{j - 1} and eps{j} coincide ({upper} vs {lower})")
            if not lower < upper:
                raise OrderingViolationError(f"need eps{j} < eps{j - 1}, got {lower} and {upper}")
        return self

    @property
    def order(self) -> int:
        return len(self.factors)


def seed_derivatives(y: ArrayLike, config: FactorizationConfig, order: int) -> np.ndarray:
    """Rows u, u', ..., u^(order) of the oscillator seed.

    Beyond the second, derivatives follow from differentiating
    u'' + 2y u' + (1 + 2 eps) u = 0, i.e.
    u^(m+2) = -2y u^(m+1) - (2m + 1 + 2 eps) u^(m).
    """
    y_arr = np.atleast_1d(np.asarray(y, dtype=float))
    u, du, d2u = oscillator_seed(y_arr, config)
    rows = [np.asarray(u, dtype=float), np.asarray(du, dtype=float), np.asarray(d2u, dtype=float)]
    shift = 1.0 + 2.0 * config.eps
    for m in range(1, order - 1):
        rows.append(-2.0 * y_arr * rows[m + 1] - (2.0 * m + shift) * rows[m])
    return np.stack(rows[: order + 1])


def seed_wronskian(y: ArrayLike, factors: Sequence[FactorizationConfig]) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(W, W', W'') of the seeds u_1 ... u_k, each column rescaled per point by a positive factor.

    The rescaling leaves the sign of W and the ratios W'/W, W''/W unchanged.
    W' replaces the last row of the Wronskian matrix by the k-th derivatives;
    W'' adds the (k+1)-th row term and, for k >= 2, the term with rows k-1 and k.
    """
    k = len(factors)
    derivs = np.stack([seed_derivatives(y, f, k + 1) for f in factors])  # (k, k+2, n)
    derivs = derivs / np.max(np.abs(derivs), axis=1, keepdims=True)
    mats = np.moveaxis(derivs, 2, 0).transpose(0, 2, 1)  # (n, k+2, k): row i holds the i-th derivatives

    def det(rows: List[int]) -> np.ndarray:
        return np.linalg.det(mats[:, rows, :])

    lower = list(range(k - 1))
    w = det(lower + [k - 1])
    dw = det(lower + [k])
    d2w = det(lower + [k + 1])
    if k >= 2:
        d2w = d2w + det(list(range(k - 2)) + [k - 1, k])
    return w, dw, d2w


def higher_order_oscillator_v(y: ArrayLike, factors: Sequence[FactorizationConfig]) -> ArrayLike:
    """V_k = y^2/2 - k - (ln W)'' with W the Wronskian of the k seeds."""
    w, dw, d2w = seed_wronskian(y, factors)
    ratio = dw / w
    values = oscillator_potential(np.asarray(y, dtype=float)) - len(factors) - (d2w / w - ratio * ratio)
    return values if np.ndim(y) else float(values[0])


def _wronskian_value(y: ArrayLike, factors: Sequence[FactorizationConfig]) -> ArrayLike:
    w = seed_wronskian(y, factors)[0]
    return w if np.ndim(y) else float(w[0])


def higher_order_potential(chain: ChainSpec) -> GeneratedPotential:
    """k-th order potential; every partial Wronskian W_1 ... W_k must be nodeless on the certified domain."""
    half = float(CERTIFICATION_HALF_WIDTH)
    factors = list(chain.factors)
    certificates = []
    for j in range(1, chain.order + 1):
        head = factors[:j]
        certificate = sign_scan(lambda y: _wronskian_value(y, head), -half, half, CERTIFICATION_POINTS)
        if not certificate.nodeless:
            raise SingularPotentialError(
                f"Wronskian of the first {j} seeds vanishes for {[(f.eps, f.nu) for f in head]}",
                location=certificate.location,
            )
        certificates.append(certificate)

    logger.info("built order-%d potential on [-%.6g, %.6g]", chain.order, half, half)
    return GeneratedPotential(
        evaluator=lambda y: higher_order_oscillator_v(y, factors),
        certified_domain=(-half, half),
        certificates=certificates,
    )


def predict_chain_spectrum(chain: ChainSpec, n_max: int) -> SpectrumPrediction:
    levels = [
        SpectrumLevel(value=f.eps, label=f"created(eps{j})", scale=1.0) for j, f in enumerate(chain.factors, start=1)
    ]
    levels.extend(SpectrumLevel(value=n + OSCILLATOR_E0, label=f"inherited({n})", scale=1.0) for n in range(n_max))
    levels.sort(key=lambda level: level.value)
    return SpectrumPrediction(levels=levels)


def predict_spectrum(spec: TransformSpec, n_max: int) -> SpectrumPrediction:
    """Created level(s) plus the first n_max oscillator levels, all times the energy scale."""
    factor = spec.energy_scale
    levels = [SpectrumLevel(value=factor * spec.f1.eps, label="created(eps1)", scale=factor)]
    if spec.two_step:
        levels.append(SpectrumLevel(value=factor * spec.f2.eps, label="created(eps2)", scale=factor))
    levels.extend(
        SpectrumLevel(value=factor * (n + OSCILLATOR_E0), label=f"inherited({n})", scale=factor) for n in range(n_max)
    )
    levels.sort(key=lambda level: level.value)
    return SpectrumPrediction(levels=levels)


def created_level_count(spec: TransformSpec) -> int:
    return 2 if spec.two_step else 1


def _seed_alpha(x: np.ndarray, config: FactorizationConfig, scale: float) -> Tuple[np.ndarray, np.ndarray]:
    """beta(x) = alpha(x/s) / s and beta'(x) = alpha'(x/s) / s^2."""
    alpha, alpha_prime = alpha_oscillator(x / scale, config)
    return alpha / scale, alpha_prime / (scale * scale)


def ground_state_fn(spec: TransformSpec, grid: Grid) -> GroundStateFunction:
    """psi(x) proportional to exp(-int_0^x alpha_1), normalized under the trapezoidal rule."""
    if spec.two_step:
        raise ValueError("ground states are only constructed for one-step transforms")
    s = spec.scale
    half = _certified_half_width(s)
    if grid.x_min < -half or grid.x_max > half:
        raise OutOfDomainError(f"grid [{grid.x_min}, {grid.x_max}] leaves the certified domain [-{half}, {half}]")
    xs = grid.points()
    alpha, _ = _seed_alpha(xs, spec.f1, s)
    integral = cumulative_trapezoid(alpha, xs, initial=0.0)
    integral -= np.interp(0.0, xs, integral)
    log_psi = -integral
    psi = np.exp(log_psi - np.max(log_psi))
    psi /= math.sqrt(trapezoid(psi * psi, xs))
    return GroundStateFunction(x=xs, samples=psi, energy=spec.energy_scale * spec.f1.eps)


def f_diagnostic(x: ArrayLike, f1: FactorizationConfig, s1: ScalingParam) -> ArrayLike:
    """f(x) = q^2 alpha_1'(x) + q^2 V0(x) - V0(x/q), with alpha_1(x) = alpha(x/q) / q."""
    q = s1.q
    x_arr = np.asarray(x, dtype=float) if np.ndim(x) else float(x)
    _, alpha_prime = alpha_oscillator(x_arr / q, f1)
    return alpha_prime + q * q * oscillator_potential(x_arr) - oscillator_potential(x_arr / q)


class _Chain:
    """Scaled-base quantities shared by the operator residual checks.

    With W0(x) = s^-2 V0(x/s), beta_i(x) = alpha(x/s, eps_i) / s solves the
    Riccati equation of W0 at s^-2 eps_i.
    """

    def __init__(self, spec: TransformSpec, x: np.ndarray) -> None:
        s = spec.scale
        y = x / s
        self.scale = s
        self.w0 = oscillator_potential(y) / (s * s)
        self.w0_prime = oscillator_potential_dx(y) / (s * s * s)
        self.beta1, self.beta1_prime = _seed_alpha(x, spec.f1, s)
        self.beta1_second = 2.0 * self.w0_prime - 2.0 * self.beta1 * self.beta1_prime
        self.eps1 = spec.f1.eps / (s * s)
        if spec.two_step:
            eps2 = spec.f2.eps / (s * s)
            b2, b2_prime = _seed_alpha(x, spec.f2, s)
            denominator = self.beta1 - b2
            gap = 2.0 * (self.eps1 - eps2)
            self.w1 = self.w0 - self.beta1_prime
            self.w1_prime = self.w0_prime - self.beta1_second
            self.beta2 = -self.beta1 - gap / denominator
            self.beta2_prime = -self.beta1_prime + gap * (self.beta1_prime - b2_prime) / denominator**2
            self.beta2_second = 2.0 * self.w1_prime - 2.0 * self.beta2 * self.beta2_prime


def _apply_intertwiner(beta, beta_prime, beta_second, f0, f1, f2, f3):
    """(g, g'') for g = (-f' + beta f) / sqrt(2)."""
    g = (-f1 + beta * f0) / _SQRT2
    g_second = (-f3 + beta_second * f0 + 2.0 * beta_prime * f1 + beta * f2) / _SQRT2
    return g, g_second


def _step_residual(target, source, source_prime, beta, beta_prime, beta_second, f0, f1, f2, f3):
    """(H_target B - B H_source) applied to f, with B = (-d/dx + beta) / sqrt(2)."""
    g, g_second = _apply_intertwiner(beta, beta_prime, beta_second, f0, f1, f2, f3)
    lhs = -0.5 * g_second + target * g
    h = -0.5 * f2 + source * f0
    h_prime = -0.5 * f3 + source_prime * f0 + source * f1
    rhs = (-h_prime + beta * h) / _SQRT2
    return lhs - rhs


def _dilated_test_values(test_fn: TestFunction, x: np.ndarray, s: float):
    """(S phi)(x) = phi(x/s) and its first three x-derivatives."""
    phi, d1, d2, d3 = (np.asarray(v, dtype=float) for v in test_fn(x / s))
    return phi, d1 / s, d2 / s**2, d3 / s**3


def intertwining_residual(spec: TransformSpec, test_fn: TestFunction, points: Sequence[float]) -> float:
    """max |(H~ A+ - c A+ H0) phi| over points, with A+ = (-d/dx + alpha_1) composed with x -> x/s.

    Two-step kinds are checked factor by factor; their composition is the
    two-step relation.
    """
    x = np.asarray(points, dtype=float)
    potential = build_potential(spec)
    chain = _Chain(spec, x)
    s = chain.scale
    f0, f1, f2, f3 = _dilated_test_values(test_fn, x, s)

    if not spec.two_step:
        # H~ B S phi, and c B S (H0 phi) with c = s^-2
        g, g_second = _apply_intertwiner(chain.beta1, chain.beta1_prime, chain.beta1_second, f0, f1, f2, f3)
        lhs = -0.5 * g_second + potential(x) * g
        phi, d1, d2, d3 = (np.asarray(v, dtype=float) for v in test_fn(x / s))
        y = x / s
        h0 = -0.5 * d2 + oscillator_potential(y) * phi
        h0_prime = -0.5 * d3 + oscillator_potential_dx(y) * phi + oscillator_potential(y) * d1
        rhs = (-(h0_prime / s) + chain.beta1 * h0) / (_SQRT2 * s * s)
        return float(np.max(np.abs(lhs - rhs))) if x.size else 0.0

    first = _step_residual(
        chain.w1, chain.w0, chain.w0_prime, chain.beta1, chain.beta1_prime, chain.beta1_second, f0, f1, f2, f3
    )
    second = _step_residual(
        potential(x), chain.w1, chain.w1_prime, chain.beta2, chain.beta2_prime, chain.beta2_second, f0, f1, f2, f3
    )
    return float(max(np.max(np.abs(first)), np.max(np.abs(second)))) if x.size else 0.0


def factorization_residual(spec: TransformSpec, test_fn: TestFunction, points: Sequence[float]) -> float:
    """max of |H0' - (B- B+ + e)| and |H~ - (B+ B- + e)| applied to the dilated test function.

    H0' = -1/2 d^2 + s^-2 V0(x/s) is the dilated base, e = s^-2 eps1. At s = 1
    these are H0 = A A+ + eps and H1 = A+ A + eps.
    """
    if spec.two_step:
        raise ValueError("factorization residuals are defined for one-step transforms")
    x = np.asarray(points, dtype=float)
    if not x.size:
        return 0.0
    potential = build_potential(spec)
    chain = _Chain(spec, x)
    f0, _, f2, _ = _dilated_test_values(test_fn, x, chain.scale)
    beta, beta_prime = chain.beta1, chain.beta1_prime
    base = -0.5 * f2 + chain.w0 * f0 - 0.5 * (-f2 + (beta_prime + beta * beta) * f0) - chain.eps1 * f0
    partner = -0.5 * f2 + potential(x) * f0 - 0.5 * (-f2 + (beta * beta - beta_prime) * f0) - chain.eps1 * f0
    return float(max(np.max(np.abs(base)), np.max(np.abs(partner))))


def local_minima(potential: Callable[[ArrayLike], ArrayLike], x_lo: float, x_hi: float, n: int = 2001) -> List[float]:
    """Interior local minima of a sampled potential (well count)."""
    xs = np.linspace(x_lo, x_hi, n)
    v = np.asarray(potential(xs), dtype=float)
    idx = np.nonzero((v[1:-1] < v[:-2]) & (v[1:-1] <= v[2:]))[0] + 1
    return xs[idx].tolist()


__all__ = [
    "ScalingParam",
    "TransformSpec",
    "GeneratedPotential",
    "SpectrumLevel",
    "SpectrumPrediction",
    "GroundStateFunction",
    "oscillator_wronskian",
    "first_order_oscillator_v",
    "second_order_oscillator_v",
    "build_potential",
    "first_order_potential",
    "second_order_potential",
    "scaled_first_potential",
    "scaled_second_potential",
    "first_order_from_solution",
    "chain_alpha",
    "certify_denominator",
    "second_order_from_solutions",
    "ChainSpec",
    "seed_derivatives",
    "seed_wronskian",
    "higher_order_oscillator_v",
    "higher_order_potential",
    "predict_chain_spectrum",
    "predict_spectrum",
    "created_level_count",
    "ground_state_fn",
    "f_diagnostic",
    "intertwining_residual",
    "factorization_residual",
    "local_minima",
]
