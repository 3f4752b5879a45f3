"""Registry of laws of V known in closed form, each with the (ξ, η, q) it belongs to."""

import cmath
import logging
import math
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np
from scipy import special, stats

from kef.errors import ConfigError, DomainError
from kef.estimators import ClosedFormLaw
from kef.levy import (
    CompoundPoissonExponential,
    LevyTriplet,
    MLSubordinator,
    TwoSidedExponential,
    Zero,
)
from kef.quadrature import quad_interval
from kef.special import bessel_k_half, gauss_2f1, mittag_leffler_triple

logger = logging.getLogger(__name__)

SQRT_PI = math.sqrt(math.pi)
# killed horizons for q = 0 laws are this many mean lifetimes of e^{-ξ}
HORIZON_LIFETIMES = 40.0
SERIES_SWITCH = 1.0
SERIES_TERMS = 40


@dataclass(frozen=True)
class ReferenceLaw:
    """A closed-form law together with the processes whose V it is."""

    name: str
    params: dict
    law: ClosedFormLaw
    xi: LevyTriplet
    eta: LevyTriplet
    q: float
    horizon_T: float | None = None
    notes: tuple[str, ...] = field(default_factory=tuple)


def _drift(rate: float) -> LevyTriplet:
    return LevyTriplet(0.0, Zero(), rate)


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ConfigError(message)


def _hermitian(triple: Callable[[float], tuple], at_zero: tuple) -> Callable[[float], tuple]:
    """Extends (φ, φ′, φ″) given for u > 0 to all u through φ(−u) = conj φ(u)."""

    def wrapped(u):
        u = float(u)
        if u == 0.0:
            return tuple(complex(v) for v in at_zero)
        if u > 0.0:
            return tuple(complex(v) for v in triple(u))
        phi, dphi, d2phi = (complex(v) for v in triple(-u))
        return phi.conjugate(), -dphi.conjugate(), d2phi.conjugate()

    return wrapped


def _power_series_triple(coeffs: np.ndarray, x: float) -> tuple[float, float, float]:
    """(g, g′, g″) at x for g(x) = Σ c_j x^j."""
    j = np.arange(coeffs.size, dtype=float)
    value = math.fsum(coeffs * x**j)
    first = math.fsum(coeffs[1:] * j[1:] * x ** (j[1:] - 1))
    second = math.fsum(coeffs[2:] * j[2:] * (j[2:] - 1) * x ** (j[2:] - 2))
    return value, first, second


def _even_cf(profile: Callable[[float], tuple], scale: float) -> Callable[[float], tuple]:
    """φ(u) = g(scale·u²) with its u-derivatives by the chain rule."""

    def triple(u):
        x = scale * u * u
        g, g1, g2 = profile(x)
        return g, g1 * 2.0 * scale * u, g2 * (2.0 * scale * u) ** 2 + g1 * 2.0 * scale

    return triple


# ------------------------------------------------------------------ densities with known formulas


def trivial_kef(gamma: float = 1.0, q: float = 1.0) -> ReferenceLaw:
    """V = (1 − e^{−γτ})/γ for ξ = γt, η = t: P(V ≤ v) = 1 − (1 − γv)^{q/γ}."""
    _require(q > 0, f"trivial_kef needs q > 0, got {q}")
    _require(gamma != 0, "trivial_kef needs gamma != 0")
    power = q / gamma
    upper = 1.0 / gamma if gamma > 0 else math.inf

    def density(v):
        v = np.asarray(v, dtype=float)
        inside = (v > 0) & (v < upper)
        base = np.where(inside, 1.0 - gamma * v, 1.0)
        out = np.where(inside, q * base ** (power - 1.0), 0.0)
        return out.item() if out.ndim == 0 else out

    def cdf(v):
        v = np.asarray(v, dtype=float)
        clipped = np.clip(v, 0.0, upper)
        out = np.where(v >= upper, 1.0, 1.0 - (1.0 - gamma * clipped) ** power)
        out = np.where(v <= 0, 0.0, out)
        return out.item() if out.ndim == 0 else out

    def sampler(rng, n):
        return -np.expm1(-gamma * rng.exponential(1.0 / q, size=n)) / gamma

    cf_derivatives = None
    if math.isclose(q, gamma):
        a = 1.0 / q

        # V is uniform on [0, a]; moments of v^k e^{iuv} in closed form
        def uniform_triple(u):
            w = 1j * u
            e = cmath.exp(w * a)
            m0 = (e - 1.0) / w
            m1 = e * (a / w - 1.0 / w**2) + 1.0 / w**2
            m2 = e * (a * a / w - 2.0 * a / w**2 + 2.0 / w**3) - 2.0 / w**3
            return m0 / a, 1j * m1 / a, -m2 / a

        cf_derivatives = _hermitian(uniform_triple, (1.0, 0.5j * a, -(a * a) / 3.0))

    law = ClosedFormLaw(
        name="trivial_kef",
        density=density,
        cdf=cdf,
        cf_derivatives=cf_derivatives,
        support=(0.0, upper),
        breakpoints=(upper,) if math.isfinite(upper) else (),
        sampler=sampler,
        second_moment_finite=gamma > 0 or 2.0 * gamma + q > 0,
        params={"gamma": gamma, "q": q},
    )
    return ReferenceLaw("trivial_kef", law.params, law, _drift(gamma), _drift(1.0), q)


def _uniform_over_2exp_density(z):
    z = np.asarray(z, dtype=float)
    safe = np.where(z > 0, z, 1.0)
    a = 0.5 / safe
    out = np.where(z > 0, -2.0 * np.expm1(-a) - 2.0 * a * np.exp(-a), 0.0)
    return out.item() if out.ndim == 0 else out


def _uniform_over_2exp_derivative(z):
    z = np.asarray(z, dtype=float)
    safe = np.where(z > 0, z, 1.0)
    a = 0.5 / safe
    out = np.where(z > 0, -4.0 * a**3 * np.exp(-a), 0.0)
    return out.item() if out.ndim == 0 else out


def _uniform_over_2exp_cdf(z):
    z = np.asarray(z, dtype=float)
    safe = np.where(z > 0, z, 1.0)
    out = np.where(z > 0, special.exprel(-0.5 / safe), 0.0)
    return out.item() if out.ndim == 0 else out


def uniform_over_2exp() -> ReferenceLaw:
    """V = U/(2E) for ξ = 2B, η = t, q = 2: f(z) = 2 − (1/z + 2)e^{−1/(2z)}."""
    law = ClosedFormLaw(
        name="uniform_over_2exp",
        density=_uniform_over_2exp_density,
        density_derivative=_uniform_over_2exp_derivative,
        cdf=_uniform_over_2exp_cdf,
        support=(0.0, math.inf),
        sampler=lambda rng, n: rng.random(n) / (2.0 * rng.exponential(size=n)),
        second_moment_finite=False,
    )
    return ReferenceLaw("uniform_over_2exp", {}, law, LevyTriplet(4.0, Zero(), 0.0), _drift(1.0), 2.0)


def yor(q: float = 2.0, b: float = 0.0) -> ReferenceLaw:
    """V = B_{1,β}/(2G_α) for ξ = 2B + 2bt, η = t, with γ = √(2q + b²), α = (γ+b)/2, β = (γ−b)/2."""
    _require(q > 0, f"yor needs q > 0, got {q}")
    root = math.sqrt(2.0 * q + b * b)
    alpha, beta = 0.5 * (root + b), 0.5 * (root - b)
    gamma_law = stats.gamma(alpha)

    # B = 1 − Y^{1/β} with Y uniform turns E over B into a smooth integral over Y
    def beta_draw(y):
        return -math.expm1(math.log(y) / beta) if y > 0 else 1.0

    def density_scalar(v):
        if v <= 0:
            return 0.0
        return quad_interval(
            lambda y: beta_draw(y) / (2.0 * v * v) * gamma_law.pdf(beta_draw(y) / (2.0 * v)),
            0.0,
            1.0,
        )

    def cdf_scalar(v):
        if v <= 0:
            return 0.0
        return quad_interval(lambda y: gamma_law.sf(beta_draw(y) / (2.0 * v)), 0.0, 1.0)

    def lift(fn):
        def wrapper(v):
            arr = np.asarray(v, dtype=float)
            out = np.array([fn(float(x)) for x in arr.ravel()]).reshape(arr.shape)
            return out.item() if out.ndim == 0 else out

        return wrapper

    def sampler(rng, n):
        return rng.beta(1.0, beta, size=n) / (2.0 * rng.gamma(alpha, size=n))

    params = {"q": q, "b": b, "alpha": alpha, "beta": beta}
    law = ClosedFormLaw(
        name="yor",
        density=lift(density_scalar),
        cdf=lift(cdf_scalar),
        support=(0.0, math.inf),
        sampler=sampler,
        second_moment_finite=alpha > 2.0,
        params=params,
    )
    xi = LevyTriplet(4.0, Zero(), 2.0 * b)
    return ReferenceLaw("yor", params, law, xi, _drift(1.0), q)


def _kanter_stable(rng: np.random.Generator, alpha: float, n: int) -> np.ndarray:
    """Positive α-stable S with E e^{−λS} = e^{−λ^α}."""
    u = rng.uniform(0.0, math.pi, size=n)
    e = rng.exponential(size=n)
    head = np.sin(alpha * u) / np.sin(u) ** (1.0 / alpha)
    return head * (np.sin((1.0 - alpha) * u) / e) ** ((1.0 - alpha) / alpha)


def mittag_leffler_law(alpha: float = 0.5) -> ReferenceLaw:
    """E e^{−uV} = E_α(−u) for ξ the drift-free ML subordinator, η = t, q = 1/Γ(1−α)."""
    _require(0.0 < alpha < 1.0, f"mittag_leffler_law needs alpha in (0, 1), got {alpha}")
    density = density_derivative = cdf = None
    if alpha == 0.5:

        def laplace(u):
            value = special.erfcx(u)
            first = 2.0 * u * value - 2.0 / SQRT_PI
            return value, first, 2.0 * value + 2.0 * u * first

        def density(s):
            s = np.asarray(s, dtype=float)
            out = np.where(s > 0, np.exp(-0.25 * s * s) / SQRT_PI, 0.0)
            return out.item() if out.ndim == 0 else out

        def density_derivative(s):
            s = np.asarray(s, dtype=float)
            out = np.where(s > 0, -0.5 * s * np.exp(-0.25 * s * s) / SQRT_PI, 0.0)
            return out.item() if out.ndim == 0 else out

        def cdf(s):
            s = np.asarray(s, dtype=float)
            out = np.where(s > 0, special.erf(0.5 * np.maximum(s, 0.0)), 0.0)
            return out.item() if out.ndim == 0 else out

    else:

        def laplace(u):
            return mittag_leffler_triple(alpha, float(u))

    law = ClosedFormLaw(
        name="mittag_leffler",
        density=density,
        density_derivative=density_derivative,
        cdf=cdf,
        laplace=laplace,
        support=(0.0, math.inf),
        sampler=lambda rng, n: _kanter_stable(rng, alpha, n) ** -alpha,
        params={"alpha": alpha},
    )
    xi = LevyTriplet.from_drift(0.0, MLSubordinator(alpha), 0.0)
    q = 1.0 / float(special.gamma(1.0 - alpha))
    return ReferenceLaw("mittag_leffler", law.params, law, xi, _drift(1.0), q)


def gamma_law(intensity: float = 1.0, drift: float = 1.0, a: float = 1.0) -> ReferenceLaw:
    """Gamma(λ/γ, a) for ξ = γt, η compound Poisson with rate λ and Exp(a) jumps, q = 0."""
    _require(intensity > 0 and drift > 0 and a > 0, "gamma_law needs positive intensity, drift and a")
    shape = intensity / drift
    dist = stats.gamma(shape, scale=1.0 / a)

    def cf_derivatives(u):
        base = 1.0 - 1j * u / a
        step = 1j / a
        return (
            base**-shape,
            shape * step * base ** (-shape - 1.0),
            shape * (shape + 1.0) * step**2 * base ** (-shape - 2.0),
        )

    def laplace(u):
        base = 1.0 + u / a
        return (
            base**-shape,
            -shape / a * base ** (-shape - 1.0),
            shape * (shape + 1.0) / a**2 * base ** (-shape - 2.0),
        )

    law = ClosedFormLaw(
        name="gamma",
        density=dist.pdf,
        cdf=dist.cdf,
        cf_derivatives=cf_derivatives,
        laplace=laplace,
        support=(0.0, math.inf),
        sampler=lambda rng, n: rng.gamma(shape, 1.0 / a, size=n),
        params={"intensity": intensity, "drift": drift, "a": a},
    )
    eta = LevyTriplet.from_drift(0.0, CompoundPoissonExponential(intensity, a), 0.0)
    return ReferenceLaw("gamma", law.params, law, _drift(drift), eta, 0.0, HORIZON_LIFETIMES / drift)


def _laplace_law(name: str, rate: float, params: dict) -> ClosedFormLaw:
    """Two-sided exponential law with density (c/2)e^{−c|z|}."""

    def density(z):
        z = np.asarray(z, dtype=float)
        out = 0.5 * rate * np.exp(-rate * np.abs(z))
        return out.item() if out.ndim == 0 else out

    def density_derivative(z):
        z = np.asarray(z, dtype=float)
        out = -rate * np.sign(z) * 0.5 * rate * np.exp(-rate * np.abs(z))
        return out.item() if out.ndim == 0 else out

    def cf_derivatives(u):
        c2 = rate * rate
        d = c2 + u * u
        return c2 / d, -2.0 * c2 * u / d**2, c2 * (6.0 * u * u - 2.0 * c2) / d**3

    return ClosedFormLaw(
        name=name,
        density=density,
        density_derivative=density_derivative,
        cdf=stats.laplace(scale=1.0 / rate).cdf,
        cf_derivatives=cf_derivatives,
        sampler=lambda rng, n: rng.laplace(0.0, 1.0 / rate, size=n),
        params=params,
    )


def laplace01() -> ReferenceLaw:
    """Laplace(0, 1) for ξ = t, ν_η(dx) = e^{−|x|}dx with no drift, q = 0."""
    law = _laplace_law("laplace01", 1.0, {})
    eta = LevyTriplet.from_drift(0.0, TwoSidedExponential(1.0, 1.0, 1.0), 0.0)
    return ReferenceLaw("laplace01", {}, law, _drift(1.0), eta, 0.0, HORIZON_LIFETIMES)


def potential_bm(q: float = 1.0, sigma: float = 1.0) -> ReferenceLaw:
    """σB stopped at τ: density (c/2)e^{−c|z|} with c = √(2q)/σ, for ξ ≡ 0."""
    _require(q > 0 and sigma > 0, "potential_bm needs q > 0 and sigma > 0")
    rate = math.sqrt(2.0 * q) / sigma
    params = {"q": q, "sigma": sigma}
    law = _laplace_law("potential_bm", rate, params)
    return ReferenceLaw("potential_bm", params, law, _drift(0.0), LevyTriplet(sigma * sigma, Zero(), 0.0), q)


def two_bm_q0(
    sigma_eta: float = 1.0,
    sigma_xi: float = 1.0,
    gamma_eta: float = 0.0,
    gamma_xi: float = 1.0,
) -> ReferenceLaw:
    """Brownian ξ and η, q = 0: f ∝ (σ_η² + σ²z²)^{−1+γ_Ũ/σ²} exp((2γ_η/σ_ησ) arctan(σz/σ_η)).

    Here γ_Ũ = −γ_ξ + σ²/2; the law is proper only for γ_ξ > 0.
    """
    _require(sigma_eta > 0 and sigma_xi > 0, "two_bm_q0 needs positive volatilities")
    if gamma_xi <= 0:
        raise DomainError(f"two_bm_q0 needs gamma_xi > 0 for V to exist, got {gamma_xi}")
    s2 = sigma_xi * sigma_xi
    gamma_u = -gamma_xi + 0.5 * s2
    power = -1.0 + gamma_u / s2
    twist = 2.0 * gamma_eta / (sigma_eta * sigma_xi)

    def unnormalized(z):
        return (sigma_eta**2 + s2 * z * z) ** power * math.exp(twist * math.atan(sigma_xi * z / sigma_eta))

    norm = quad_interval(unnormalized, -math.inf, math.inf)

    def density(z):
        z = np.asarray(z, dtype=float)
        out = (sigma_eta**2 + s2 * z * z) ** power * np.exp(twist * np.arctan(sigma_xi * z / sigma_eta)) / norm
        return out.item() if out.ndim == 0 else out

    def density_derivative(z):
        z = np.asarray(z, dtype=float)
        slope = (2.0 * gamma_eta + 2.0 * z * (gamma_u - s2)) / (sigma_eta**2 + s2 * z * z)
        out = np.asarray(density(z)) * slope
        return out.item() if out.ndim == 0 else out

    params = {"sigma_eta": sigma_eta, "sigma_xi": sigma_xi, "gamma_eta": gamma_eta, "gamma_xi": gamma_xi}
    law = ClosedFormLaw(
        name="two_bm_q0",
        density=density,
        density_derivative=density_derivative,
        # tails decay like |z|^{2·power}; the variance needs 2·power < −3
        second_moment_finite=2.0 * power < -3.0,
        params=params,
    )
    xi = LevyTriplet(s2, Zero(), gamma_xi)
    eta = LevyTriplet(sigma_eta**2, Zero(), gamma_eta)
    return ReferenceLaw("two_bm_q0", params, law, xi, eta, 0.0, HORIZON_LIFETIMES / gamma_xi)


# ------------------------------------------------------------------ characteristic functions


def _series_profile(coeffs: np.ndarray, closed: Callable[[float], tuple]) -> Callable[[float], tuple]:
    def profile(x):
        return _power_series_triple(coeffs, x) if abs(x) < SERIES_SWITCH else closed(x)

    return profile


def _expm1_ratio(x):
    """(1 − e^{−x})/x with two derivatives."""
    e = math.exp(-x)
    one_minus = -math.expm1(-x)
    return (
        one_minus / x,
        -one_minus / x**2 + e / x,
        2.0 * one_minus / x**3 - 2.0 * e / x**2 - e / x,
    )


def _second_order_ratio(x):
    """2(e^{−x} − 1 + x)/x² with two derivatives."""
    e = math.exp(-x)
    remainder = math.expm1(-x) + x
    one_minus = -math.expm1(-x)
    return (
        2.0 * remainder / x**2,
        2.0 * (one_minus / x**2 - 2.0 * remainder / x**3),
        2.0 * (e / x**2 - 4.0 * one_minus / x**3 + 6.0 * remainder / x**4),
    )


_J = np.arange(SERIES_TERMS, dtype=float)
_EXPM1_RATIO_COEFFS = (-1.0) ** _J / special.factorial(_J + 1)
_SECOND_ORDER_COEFFS = 2.0 * (-1.0) ** _J / special.factorial(_J + 2)


def cf_bm_eta(gamma_xi: float = 1.0, sigma_eta: float = 1.0, q: float = 2.0) -> ReferenceLaw:
    """CF of V for ξ = γt and η = σB when q = 2γ or q = 4γ."""
    _require(gamma_xi > 0 and sigma_eta > 0, "cf_bm_eta needs gamma_xi > 0 and sigma_eta > 0")
    s2 = sigma_eta * sigma_eta
    # φ(u) = g(σ²u²/(4γ)) for both admissible killing rates
    scale = s2 / (4.0 * gamma_xi)
    if math.isclose(q, 2.0 * gamma_xi):
        triple = _even_cf(_series_profile(_EXPM1_RATIO_COEFFS, _expm1_ratio), scale)
    elif math.isclose(q, 4.0 * gamma_xi):
        triple = _even_cf(_series_profile(_SECOND_ORDER_COEFFS, _second_order_ratio), scale)
    else:
        raise ConfigError(f"cf_bm_eta is known for q = 2γ or q = 4γ only, got q={q}, γ={gamma_xi}")

    # given τ, V is centred normal with variance σ²(1 − W^{2γ/q})/(2γ), W = e^{−qτ} uniform
    exponent = 2.0 * gamma_xi / q

    def std(w):
        spread = -math.expm1(exponent * math.log(w)) if w > 0 else 1.0
        return math.sqrt(s2 * spread / (2.0 * gamma_xi))

    def density_scalar(z):
        def integrand(w):
            sd = std(w)
            return stats.norm.pdf(z, scale=sd) if sd > 0 else 0.0

        return quad_interval(integrand, 0.0, 1.0)

    def density(z):
        arr = np.asarray(z, dtype=float)
        out = np.array([density_scalar(float(x)) for x in arr.ravel()]).reshape(arr.shape)
        return out.item() if out.ndim == 0 else out

    def sampler(rng, n):
        w = rng.random(n)
        variance = s2 * -np.expm1(exponent * np.log(w)) / (2.0 * gamma_xi)
        return rng.normal(size=n) * np.sqrt(variance)

    params = {"gamma_xi": gamma_xi, "sigma_eta": sigma_eta, "q": q}
    law = ClosedFormLaw(
        name="cf_bm_eta",
        density=density,
        cf_derivatives=triple,
        breakpoints=(0.0,),
        sampler=sampler,
        params=params,
    )
    return ReferenceLaw("cf_bm_eta", params, law, _drift(gamma_xi), LevyTriplet(s2, Zero(), 0.0), q)


def _bessel_coeffs() -> np.ndarray:
    # e^{−w}(3 + 3w + w²) = Σ c_n wⁿ; the profile is −2 Σ_{n≥2} c_n w^{n−2}
    n = np.arange(SERIES_TERMS + 2, dtype=float)
    signs = (-1.0) ** n
    c = 3.0 * signs / special.factorial(n)
    c[1:] += -3.0 * signs[1:] / special.factorial(n[1:] - 1)
    c[2:] += signs[2:] / special.factorial(n[2:] - 2)
    return -2.0 * c[2:]


_BESSEL_COEFFS = _bessel_coeffs()


def _bessel_closed(w):
    e = math.exp(-w)
    # e^{−w}(1 + 3/w + 3/w²) = √(2w/π) K_{5/2}(w)
    ep = math.sqrt(2.0 * w / math.pi) * bessel_k_half(2, w)
    p1 = -3.0 / w**2 - 6.0 / w**3
    p2 = 6.0 / w**3 + 18.0 / w**4
    return (
        6.0 / w**2 - 2.0 * ep,
        -12.0 / w**3 + 2.0 * ep - 2.0 * e * p1,
        36.0 / w**4 - 2.0 * ep + 4.0 * e * p1 - 2.0 * e * p2,
    )


def cf_bessel(sigma_xi: float = 1.0, sigma_eta: float = 1.0) -> ReferenceLaw:
    """CF of V for ξ = σ_ξB + (σ_ξ²/2)t, η = σ_ηB, q = 3σ_ξ².

    φ(u) = 6/w² − 2e^{−w}(1 + 3/w + 3/w²) with w = σ_η|u|/σ_ξ.
    """
    _require(sigma_xi > 0 and sigma_eta > 0, "cf_bessel needs positive volatilities")
    ratio = sigma_eta / sigma_xi
    profile = _series_profile(_BESSEL_COEFFS, _bessel_closed)

    def triple(u):
        g, g1, g2 = profile(ratio * abs(u))
        return g, ratio * math.copysign(1.0, u) * g1 if u != 0 else 0.0, ratio * ratio * g2

    s2 = sigma_xi * sigma_xi

    # V = σ_η N √A with A = U/(2σ_ξ² G), G ~ Gamma(3/2)
    def sampler(rng, n):
        area = rng.random(n) / (2.0 * s2 * rng.gamma(1.5, size=n))
        return sigma_eta * rng.normal(size=n) * np.sqrt(area)

    params = {"sigma_xi": sigma_xi, "sigma_eta": sigma_eta}
    law = ClosedFormLaw(name="cf_bessel", cf_derivatives=triple, sampler=sampler, params=params)
    xi = LevyTriplet(s2, Zero(), 0.5 * s2)
    eta = LevyTriplet(sigma_eta**2, Zero(), 0.0)
    return ReferenceLaw("cf_bessel", params, law, xi, eta, 3.0 * s2)


def cf_hypergeom(intensity: float = 1.0, drift: float = 1.0, a: float = 1.0, q: float = 1.0) -> ReferenceLaw:
    """CF of V for ξ = γt, η compound Poisson (rate λ, Exp(a) jumps), killing q.

    φ(u) = (1 − iu/a)^{−λ/γ} ₂F₁(q/γ, −λ/γ; 1 + q/γ; iu/a).
    """
    _require(intensity > 0 and drift > 0 and a > 0, "cf_hypergeom needs positive intensity, drift and a")
    _require(q >= 0, f"cf_hypergeom needs q >= 0, got {q}")
    k, p = intensity / drift, q / drift
    top, bottom, c = p, -k, 1.0 + p

    def triple(u):
        z = 1j * u / a
        step = 1j / a
        base = 1.0 - z
        power = [base**-k, k * step * base ** (-k - 1.0), k * (k + 1.0) * step**2 * base ** (-k - 2.0)]
        f0 = gauss_2f1(top, bottom, c, z)
        f1 = step * top * bottom / c * gauss_2f1(top + 1, bottom + 1, c + 1, z)
        f2 = (
            step**2
            * top
            * bottom
            / c
            * (top + 1)
            * (bottom + 1)
            / (c + 1)
            * gauss_2f1(top + 2, bottom + 2, c + 2, z)
        )
        return (
            power[0] * f0,
            power[1] * f0 + power[0] * f1,
            power[2] * f0 + 2.0 * power[1] * f1 + power[0] * f2,
        )

    # V = 0 exactly when τ comes before the first jump of η
    atom = q / (q + intensity)
    params = {"intensity": intensity, "drift": drift, "a": a, "q": q}
    law = ClosedFormLaw(name="cf_hypergeom", cf_derivatives=triple, atom0=atom, params=params)
    eta = LevyTriplet.from_drift(0.0, CompoundPoissonExponential(intensity, a), 0.0)
    horizon = HORIZON_LIFETIMES / drift if q == 0 else None
    return ReferenceLaw("cf_hypergeom", params, law, _drift(drift), eta, q, horizon)


REFERENCES: dict[str, Callable[..., ReferenceLaw]] = {
    "trivial_kef": trivial_kef,
    "uniform_over_2exp": uniform_over_2exp,
    "yor": yor,
    "mittag_leffler": mittag_leffler_law,
    "gamma": gamma_law,
    "laplace01": laplace01,
    "potential_bm": potential_bm,
    "two_bm_q0": two_bm_q0,
    "cf_bm_eta": cf_bm_eta,
    "cf_bessel": cf_bessel,
    "cf_hypergeom": cf_hypergeom,
}


def reference(name: str, params: dict | None = None) -> ReferenceLaw:
    """Looks up a reference law by name and builds it from keyword parameters.

    Raises:
        ConfigError: For an unknown name or parameters the family does not take.
    """
    factory = REFERENCES.get(name)
    if factory is None:
        raise ConfigError(f"unknown reference law {name!r}; known: {', '.join(sorted(REFERENCES))}")
    try:
        built = factory(**(params or {}))
    except TypeError as exc:
        raise ConfigError(f"bad parameters for {name!r}: {exc}") from exc
    logger.debug("built reference law %s with %s", name, built.params)
    return built
