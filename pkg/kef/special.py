"""Special functions behind the closed-form reference laws."""

import cmath
import logging
import math

import numpy as np
from scipy import special

from kef.constants import (
    HYP2F1_MAX_TERMS,
    HYP2F1_SERIES_RADIUS,
    ML_DENSITY_MAX_TERM,
    ML_MAX_TERMS,
    ML_SERIES_LIMIT,
    ML_SERIES_MAX_TERM,
)
from kef.errors import DomainError, NumericFailure
from kef.quadrature import quad_interval, scalarize

logger = logging.getLogger(__name__)

gamma_fn = special.gamma
erfc = special.erfc
exp_integral = special.exp1

_HYP2F1_CHUNK = 2048


def _check_alpha(alpha: float, allow_one: bool = True) -> None:
    upper_ok = alpha <= 1.0 if allow_one else alpha < 1.0
    if not (alpha > 0.0 and upper_ok):
        raise DomainError(f"Mittag-Leffler parameter must lie in (0, 1], got {alpha}")


def _ml_log_terms(alpha: float, t: float) -> np.ndarray:
    k = np.arange(ML_MAX_TERMS)
    return k * math.log(t) - special.gammaln(1.0 + alpha * k)


def _ml_series(alpha: float, x: float) -> float:
    if x == 0.0:
        return 1.0
    log_terms = _ml_log_terms(alpha, abs(x))
    signs = np.where(np.arange(log_terms.size) % 2 == 1, -1.0, 1.0) if x < 0 else 1.0
    return math.fsum(signs * np.exp(log_terms))


def _ml_integral(alpha: float, t: float) -> float:
    """E_α(−t) = (t sin απ / απ) ∫₀^∞ e^{−r^{1/α}} / (r² + 2tr cos απ + t²) dr."""
    angle = alpha * math.pi
    scale = t * math.sin(angle) / angle

    def integrand(r):
        return math.exp(-(r ** (1.0 / alpha))) / (r * r + 2.0 * t * r * math.cos(angle) + t * t)

    return scale * quad_interval(integrand, 0.0, math.inf, points=(t,))


def _mittag_leffler_scalar(alpha: float, x: float) -> float:
    if x > 0:
        raise DomainError(f"Mittag-Leffler function is evaluated on x <= 0, got {x}")
    if alpha == 1.0:
        return math.exp(x)
    if x == 0.0:
        return 1.0
    if x >= ML_SERIES_LIMIT and np.exp(_ml_log_terms(alpha, -x)).max() <= ML_SERIES_MAX_TERM:
        return _ml_series(alpha, x)
    return _ml_integral(alpha, -x)


def mittag_leffler(alpha: float, x):
    """E_α(x) for x ≤ 0, vectorized in x.

    Taylor series while its largest term stays small enough to sum without
    cancellation, otherwise the real-line integral representation.
    """
    _check_alpha(alpha)
    return scalarize(lambda value: _mittag_leffler_scalar(alpha, value))(x)


def _ml_integral_triple(alpha: float, t: float) -> tuple[float, float, float]:
    angle = alpha * math.pi
    scale = math.sin(angle) / angle
    c = math.cos(angle)

    def piece(order):
        def integrand(r):
            d = r * r + 2.0 * t * r * c + t * t
            weight = math.exp(-(r ** (1.0 / alpha)))
            if order == 0:
                return weight * t / d
            if order == 1:
                return weight * (r * r - t * t) / d**2
            return weight * (-2.0 * t * d - 2.0 * (r * r - t * t) * (2.0 * r * c + 2.0 * t)) / d**3

        return scale * quad_interval(integrand, 0.0, math.inf, points=(t,))

    return piece(0), piece(1), piece(2)


def mittag_leffler_triple(alpha: float, t: float) -> tuple[float, float, float]:
    """(L, L′, L″) for L(t) = E_α(−t), t ≥ 0."""
    _check_alpha(alpha)
    if t < 0:
        raise DomainError(f"Mittag-Leffler Laplace transform needs t >= 0, got {t}")
    if alpha == 1.0:
        value = math.exp(-t)
        return value, -value, value
    if t == 0.0 or (-t >= ML_SERIES_LIMIT and np.exp(_ml_log_terms(alpha, t)).max() <= ML_SERIES_MAX_TERM):
        k = np.arange(ML_MAX_TERMS, dtype=float)
        log_gamma = special.gammaln(1.0 + alpha * k)
        signs = np.where(k % 2 == 1, -1.0, 1.0)

        def series(shift):
            # Σ_k k!/(k-shift)! (−t)^{k−shift} / Γ(1+αk)
            j = k[shift:]
            falling = np.prod([j - m for m in range(shift)], axis=0) if shift else np.ones_like(j)
            power = j - shift
            if t == 0.0:
                magnitude = np.where(power == 0, np.exp(-log_gamma[shift:]), 0.0)
            else:
                magnitude = np.exp(power * math.log(t) - log_gamma[shift:])
            return math.fsum(signs[: j.size] * falling * magnitude)

        return series(0), -series(1), series(2)
    return _ml_integral_triple(alpha, t)


def _ml_density_log_terms(alpha: float, s: float) -> np.ndarray:
    k = np.arange(1, ML_MAX_TERMS)
    return special.gammaln(alpha * k + 1.0) - special.gammaln(k + 1.0) + (k - 1) * math.log(s)


def ml_density_limit(alpha: float) -> float:
    """Largest s on a 0.05 grid where the density series stays below the term cap."""
    _check_alpha(alpha, allow_one=False)
    s = 0.05
    while s < 200.0:
        if np.exp(_ml_density_log_terms(alpha, s + 0.05)).max() > ML_DENSITY_MAX_TERM:
            return s
        s += 0.05
    return s


def _ml_density_scalar(alpha: float, s: float, limit: float) -> float:
    if s <= 0.0:
        return 0.0
    if s > limit:
        raise DomainError(f"density series for alpha={alpha} is not reliable beyond s={limit:.3g}")
    k = np.arange(1, ML_MAX_TERMS)
    terms = np.exp(_ml_density_log_terms(alpha, s)) * np.sin(math.pi * alpha * k)
    terms *= np.where(k % 2 == 1, 1.0, -1.0)
    return math.fsum(terms) / (math.pi * alpha)


def ml_density(alpha: float, s):
    """f_ML(s) = (1/πα) Σ_k (−1)^{k+1} Γ(αk+1) s^{k−1} sin(παk) / k!, s > 0.

    Raises:
        DomainError: For s beyond ml_density_limit(alpha).
    """
    limit = ml_density_limit(alpha)
    return scalarize(lambda value: _ml_density_scalar(alpha, value, limit))(s)


def _hyp2f1_series(a: complex, b: complex, c: complex, z: complex) -> complex:
    total = 0j
    term = 1 + 0j
    start = 0
    while start < HYP2F1_MAX_TERMS:
        k = np.arange(start, start + _HYP2F1_CHUNK)
        ratios = (a + k) * (b + k) / ((c + k) * (k + 1.0)) * z
        terms = term * np.concatenate(([1.0], np.cumprod(ratios[:-1])))
        total += terms.sum()
        term = terms[-1] * ratios[-1]
        start += _HYP2F1_CHUNK
        # algebraic tails need the k-weighted term below tolerance
        if abs(term) * start <= 1e-15 * max(abs(total), 1e-300) or term == 0:
            return complex(total)
    raise NumericFailure(f"2F1({a}, {b}; {c}; {z}) series did not converge", achieved=abs(term) * start)


def gauss_2f1(a: float, b: float, c: float, z: complex) -> complex:
    """Gauss hypergeometric ₂F₁(a, b; c; z).

    Direct series for |z| < 0.9. Elsewhere the Pfaff transformation to
    w = z/(z − 1), choosing the form whose terms decay fastest; principal
    branch for the power of (1 − z).
    """
    if c <= 0 and float(c).is_integer():
        raise DomainError(f"2F1 is undefined for c = {c}")
    z = complex(z)
    if b == 0 or a == 0 or z == 0:
        return 1 + 0j
    if abs(z) < HYP2F1_SERIES_RADIUS:
        return _hyp2f1_series(a, b, c, z)
    if z == 1:
        raise DomainError("2F1 at z = 1 is not supported")
    w = z / (z - 1.0)
    if abs(w) >= 1.0:
        raise DomainError(f"2F1 argument {z} lies outside the supported range")
    # tail exponents of the two Pfaff forms: a - b - 1 versus b - a - 1
    if (b - a) <= (a - b):
        return cmath.exp(-b * cmath.log(1.0 - z)) * _hyp2f1_series(c - a, b, c, w)
    return cmath.exp(-a * cmath.log(1.0 - z)) * _hyp2f1_series(a, c - b, c, w)


def bessel_k_half(n: int, z):
    """K_{n+1/2}(z) for n ≥ 0 by upward recursion from K_{±1/2} = √(π/2z)e^{−z}."""
    if n < 0:
        raise DomainError(f"order index must be nonnegative, got {n}")
    z = np.asarray(z, dtype=float)
    if np.any(z <= 0):
        raise DomainError("modified Bessel function needs z > 0")
    previous = current = np.sqrt(math.pi / (2.0 * z)) * np.exp(-z)
    for k in range(n):
        nu = k + 0.5
        previous, current = current, previous + 2.0 * nu / z * current
    return current.item() if current.ndim == 0 else current
