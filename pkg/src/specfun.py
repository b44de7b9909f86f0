"""Special functions for the oscillator seed: Kummer 1F1, log-gamma and the gamma ratio.

All functions are pure. ``kummer_1f1`` and ``kummer_1f1_dz`` accept scalars or
numpy arrays for ``z`` (``a`` and ``b`` are scalars) and return the same shape.
"""

from __future__ import annotations

import math
from typing import Union

import numpy as np

from .errors import SeriesConvergenceError, SeriesOverflowError, SpecialFunctionDomainError

ArrayLike = Union[float, np.ndarray]

SERIES_RTOL = 1e-16
SERIES_MAX_TERMS = 500

# ln_gamma shifts its argument above this before applying Stirling's series
_STIRLING_MIN = 15.0
# B_{2k} / (2k (2k - 1)) for k = 1..8
_STIRLING_COEFFS = (
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
    -3617.0 / 122400.0,
)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


def _is_nonpositive_integer(value: float) -> bool:
    return value <= 0 and float(value).is_integer()


def _series(a: float, b: float, w: np.ndarray) -> np.ndarray:
    """Sum the Kummer series term by term.

    Callers guarantee nonnegative terms: either w >= 0 with a >= 0, or a
    terminating polynomial.
    """
    term = np.ones_like(w)
    total = np.ones_like(w)
    for k in range(SERIES_MAX_TERMS):
        term = term * ((a + k) / (b + k)) * w / (k + 1)
        total = total + term
        if not np.all(np.isfinite(total)):
            raise SeriesOverflowError(f"1F1({a}, {b}; z) series overflowed at term {k + 1}")
        if np.all(np.abs(term) <= SERIES_RTOL * np.abs(total)):
            return total
    raise SeriesConvergenceError(
        f"1F1({a}, {b}; z) did not converge in {SERIES_MAX_TERMS} terms (max |z| = {np.max(np.abs(w)):.3g})"
    )


def kummer_1f1(a: float, b: float, z: ArrayLike) -> ArrayLike:
    """Confluent hypergeometric function 1F1(a, b; z) for real arguments.

    Negative z always goes through Kummer's transformation
    1F1(a, b; z) = e^z 1F1(b - a, b; -z) so the summed series has nonnegative
    terms; a non-positive integer ``a`` gives a terminating polynomial whose
    terms are nonnegative for z <= 0 and is summed directly.
    """
    if _is_nonpositive_integer(b):
        raise SpecialFunctionDomainError(f"1F1 is undefined for b = {b} (non-positive integer)")

    scalar = np.ndim(z) == 0
    z_arr = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(z_arr)):
        raise SpecialFunctionDomainError("1F1 argument z must be finite")

    if a == 0:
        result = np.ones_like(z_arr)
    elif _is_nonpositive_integer(a):
        result = _series(a, b, z_arr)
    else:
        result = np.empty_like(z_arr)
        neg = z_arr < 0
        if np.any(~neg):
            result[~neg] = _series(a, b, z_arr[~neg])
        if np.any(neg):
            w = -z_arr[neg]
            result[neg] = np.exp(-w) * _series(b - a, b, w)
        if not np.all(np.isfinite(result)):
            raise SeriesOverflowError(f"1F1({a}, {b}; z) is not representable")

    return float(result) if scalar else result


def kummer_1f1_dz(a: float, b: float, z: ArrayLike) -> ArrayLike:
    """d/dz 1F1(a, b; z) = (a / b) 1F1(a + 1, b + 1; z)."""
    if _is_nonpositive_integer(b):
        raise SpecialFunctionDomainError(f"1F1 is undefined for b = {b} (non-positive integer)")
    if a == 0:
        zero = np.zeros_like(np.asarray(z, dtype=float))
        return float(zero) if np.ndim(z) == 0 else zero
    return (a / b) * kummer_1f1(a + 1.0, b + 1.0, z)


def ln_gamma(x: float) -> float:
    """Natural log of the gamma function for x > 0.

    Uses the recurrence to shift x above 15, then Stirling's series with
    eight Bernoulli corrections.
    """
    if not math.isfinite(x) or x <= 0:
        raise SpecialFunctionDomainError(f"ln_gamma requires x > 0, got {x}")
    shift = 0.0
    while x < _STIRLING_MIN:
        shift += math.log(x)
        x += 1.0
    inv = 1.0 / x
    inv2 = inv * inv
    correction = 0.0
    power = inv
    for coeff in _STIRLING_COEFFS:
        correction += coeff * power
        power *= inv2
    return (x - 0.5) * math.log(x) - x + _HALF_LOG_2PI + correction - shift


def gamma_ratio(eps: float) -> float:
    """Gamma((3 - 2 eps) / 4) / Gamma((1 - 2 eps) / 4), defined for eps < 1/2."""
    if not eps < 0.5:
        raise SpecialFunctionDomainError(f"gamma_ratio requires eps < 1/2, got {eps}")
    return math.exp(ln_gamma((3.0 - 2.0 * eps) / 4.0) - ln_gamma((1.0 - 2.0 * eps) / 4.0))


__all__ = ["kummer_1f1", "kummer_1f1_dz", "ln_gamma", "gamma_ratio"]
