"""Residual operators: how far a law is from solving each distributional equation of V."""

import json
import logging
import math
from collections.abc import Callable, Iterable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate as sp_integrate

from kef.auxiliary import AuxFunctions, build_aux
from kef.constants import DEFAULT_TOLERANCES, MC_SE_MULTIPLIER, SMALL_JUMP_TAYLOR_CUTOFF
from kef.errors import DomainError, PreconditionError
from kef.estimators import ClosedFormLaw, EmpiricalLaw, LawRep, integrate_with_error
from kef.levy import (
    TRUNCATION_POINTS,
    LevyTriplet,
    char_exponent,
    first_moment,
    kill,
    second_moment_condition,
    xi_to_U,
)
from kef.quadrature import REAL_LINE, Interval, quad_interval

logger = logging.getLogger(__name__)

POSITIVE = Interval(0.0, math.inf, lo_closed=False)
NEGATIVE = Interval(-math.inf, 0.0, hi_closed=False)


@dataclass
class ResidualReport:
    """Residuals of one equation on a grid with the verdict.

    Passes iff the sup norm is at most tolerance + budget; the budget is the
    Monte Carlo and KDE error allowance and is zero for closed-form laws.
    """

    equation: str
    grid: np.ndarray
    residuals: np.ndarray
    tolerance: float
    budget: float = 0.0
    K: float | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def magnitudes(self) -> np.ndarray:
        return np.abs(np.asarray(self.residuals))

    @property
    def norm_sup(self) -> float:
        return float(self.magnitudes.max()) if self.magnitudes.size else 0.0

    @property
    def norm_l1(self) -> float:
        if self.magnitudes.size < 2:
            return self.norm_sup
        return float(sp_integrate.trapezoid(self.magnitudes, np.asarray(self.grid, dtype=float)))

    @property
    def passed(self) -> bool:
        return self.norm_sup <= self.tolerance + self.budget

    def to_dict(self) -> dict:
        return {
            "equation": self.equation,
            "grid": [float(x) for x in self.grid],
            "residual": [float(r) for r in self.magnitudes],
            "K": self.K,
            "norm_sup": self.norm_sup,
            "norm_l1": self.norm_l1,
            "tolerance": self.tolerance,
            "budget": self.budget,
            "pass": self.passed,
            "notes": list(self.notes),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def default_grid(lo: float = 0.05, hi: float = 5.0, n: int = 24, symmetric: bool = True) -> np.ndarray:
    """Geometric grid on [lo, hi], mirrored to the negative side when symmetric.

    Points that land on the kinks 0 and ±1 are moved off by half a step.
    """
    if not 0 < lo < hi:
        raise DomainError(f"grid needs 0 < lo < hi, got [{lo}, {hi}]")
    points = np.geomspace(lo, hi, n)
    ratio = (hi / lo) ** (0.5 / max(n - 1, 1))
    points = np.where(np.isclose(points, 1.0, rtol=1e-9, atol=0.0), points * ratio, points)
    return np.concatenate((-points[::-1], points)) if symmetric else points


def _tolerance(equation: str, tol: float | None) -> float:
    return DEFAULT_TOLERANCES[equation] if tol is None else tol


def _map_grid(fn: Callable[[float], tuple], grid: Iterable[float], workers: int) -> list[tuple]:
    points = [float(x) for x in grid]
    if workers <= 1:
        return [fn(x) for x in points]
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(fn, points))


def _util(xi: LevyTriplet, q: float) -> LevyTriplet:
    return kill(xi_to_U(xi), q)


def _need_density(law: LawRep) -> None:
    if not law.has_density:
        raise DomainError(f"law {law.name!r} has no density; this equation needs f")


def _density(law: LawRep, z: float) -> tuple[float, float]:
    """f(z) and its standard error."""
    value = float(law.pdf(z))
    if isinstance(law, EmpiricalLaw):
        return value, float(law.pdf_error(z))
    return value, 0.0


def _density_derivative(law: LawRep, z: float, order: int = 1) -> tuple[float, float]:
    if isinstance(law, EmpiricalLaw):
        return float(law.pdf_derivative(z, order)), float(law.pdf_error(z, order))
    if order == 1:
        return float(law.pdf_derivative(z)), 0.0
    step = 1e-3 * max(1.0, abs(z))
    left, _ = _density_derivative(law, z - step, order - 1)
    right, _ = _density_derivative(law, z + step, order - 1)
    return (right - left) / (2.0 * step), 0.0


def mc_budget(law: LawRep, errors: Iterable[float]) -> float:
    if isinstance(law, ClosedFormLaw):
        return 0.0
    return MC_SE_MULTIPLIER * float(sum(abs(e) for e in errors))


def _side_region(z: float) -> Interval:
    return POSITIVE if z > 0 else NEGATIVE


def _between(z: float) -> Interval:
    """Points strictly between 0 and z, z itself included."""
    return Interval(0.0, z, lo_closed=False) if z > 0 else Interval(z, 0.0, hi_closed=False)


def _ratio_points(z: float, nu_util) -> tuple[float, ...]:
    """x where z/x crosses the kinks of the Ũ-functions."""
    marks = [1.0, 2.0, *(1.0 + p for p, _ in nu_util.atoms)]
    return tuple(z / m for m in marks if m > 0)


def _same_side(z: float, fn: Callable) -> Callable:
    """x ↦ fn(z/x, |x|) where x and z share a sign, 0 elsewhere."""

    def wrapped(x):
        x = np.asarray(x, dtype=float)
        ok = (x * z > 0) & np.isfinite(x)
        safe = np.where(ok, x, z)
        out = np.where(ok, fn(z / safe, np.abs(safe)), 0.0)
        return out.item() if out.ndim == 0 else out

    return wrapped


# ------------------------------------------------------------------ characteristic functions


def _cf_middle(u: float, law: LawRep, eta: LevyTriplet, util: LevyTriplet) -> complex:
    """ψ_η φ + γ_Ũ uφ′ + (σ²/2)u²φ″ + ∫(φ(u + uy) − φ − uyφ′1_{|y|≤1}) ν_Ũ(dy)."""
    phi, dphi, d2phi = law.cf_triple(u)

    def jump(y):
        compensator = u * y * dphi if abs(y) <= 1.0 else 0.0
        return law.cf_triple(u * (1.0 + y))[0] - phi - compensator

    jumps = util.nu.integrate(jump, points=TRUNCATION_POINTS, complex_valued=True)
    psi_eta = complex(char_exponent(eta, u))
    return psi_eta * phi + util.gamma * u * dphi + 0.5 * util.sigma2 * u * u * d2phi + jumps


def _cf_xi_form(u: float, law: LawRep, xi: LevyTriplet, eta: LevyTriplet, q: float) -> complex:
    """ψ_η φ minus the ξ-characteristics side of the same equation."""
    phi, dphi, d2phi = law.cf_triple(u)

    def jump(y):
        compensator = u * y * dphi if abs(y) <= 1.0 else 0.0
        return law.cf_triple(u * math.exp(-y))[0] - phi + compensator

    jumps = xi.nu.integrate(jump, points=TRUNCATION_POINTS, complex_valued=True)
    rhs = (
        q * (phi - 1.0)
        + xi.gamma * u * dphi
        - 0.5 * xi.sigma2 * (u * u * d2phi + u * dphi)
        - jumps
    )
    return complex(char_exponent(eta, u)) * phi - rhs


def residual_cf(
    grid: Sequence[float],
    xi: LevyTriplet,
    eta: LevyTriplet,
    q: float,
    law: LawRep,
    tol: float | None = None,
    workers: int = 1,
) -> ResidualReport:
    """ψ_η(u)φ(u) + E[e^{iuV} ψ_Ũ(uV)] on a u-grid.

    Closed-form laws with CF derivatives use the ν_Ũ-integral form and are
    cross-checked against the ξ form; other laws use the expectation form.

    Raises:
        PreconditionError: If E V² may be infinite and the law does not assert otherwise.
    """
    closed = isinstance(law, ClosedFormLaw)
    if not second_moment_condition(xi, eta, q) and not (closed and law.second_moment_finite):
        raise PreconditionError("CF equation needs E V² < ∞: 2E U₁ + Var U₁ < q fails")
    util = _util(xi, q)
    derivative_form = closed and law.cf_derivatives is not None

    def at(u):
        if derivative_form:
            middle = _cf_middle(u, law, eta, util)
            return middle, 0.0, abs(middle - _cf_xi_form(u, law, xi, eta, q))
        psi_eta = complex(char_exponent(eta, u))

        def term(x):
            x = np.asarray(x, dtype=float)
            return np.exp(1j * u * x) * (psi_eta + np.asarray(char_exponent(util, u * x)))

        value, se = integrate_with_error(law, term, complex_valued=True)
        return value, se, 0.0

    rows = _map_grid(at, grid, workers)
    report = ResidualReport(
        "cf",
        np.asarray(grid, dtype=float),
        np.array([r[0] for r in rows], dtype=complex),
        _tolerance("cf", tol),
        mc_budget(law, [max(r[1] for r in rows)]),
    )
    if derivative_form:
        mismatch = max(r[2] for r in rows)
        report.notes.append(f"xi-form cross-check max difference {mismatch:.3g}")
        if mismatch > report.tolerance:
            logger.warning("CF forms disagree by %.3g on %s", mismatch, law.name)
    return report


# ------------------------------------------------------------------ Laplace transforms


def _require_subordinator(eta: LevyTriplet) -> None:
    if not eta.is_subordinator:
        raise DomainError("η must be a subordinator: no Gaussian part, no negative jumps, drift ≥ 0")


def _log_laplace_eta(eta: LevyTriplet, u: float) -> float:
    """ln E e^{−uη₁} = −γ⁰u − ∫(1 − e^{−uy}) ν_η(dy)."""
    jumps = eta.nu.integrate(lambda y: math.expm1(-u * y), POSITIVE, points=(1.0,))
    return -eta.gamma0 * u + float(jumps)


def _laplace_jumps(u: float, law: LawRep, nu, triple) -> float:
    """∫ (L(ue^{−y})/u − L/u + yL′1_{|y|≤1}) ν_ξ(dy), Taylor-expanded near zero."""
    value, first, second = triple

    def jump(y):
        compensator = y * first if abs(y) <= 1.0 else 0.0
        return (law.laplace_triple(u * math.exp(-y))[0] - value) / u + compensator

    if not nu.infinite_activity:
        return float(nu.integrate(jump, points=TRUNCATION_POINTS))
    cut = SMALL_JUMP_TAYLOR_CUTOFF
    outer = nu.integrate(jump, Interval(cut, math.inf, lo_closed=False), points=(1.0,))
    outer += nu.integrate(jump, Interval(-math.inf, -cut, hi_closed=False), points=(-1.0,))
    small = nu.moment(-cut, cut, 2, lo_closed=True, hi_closed=True)
    return float(outer) + 0.5 * (first + u * second) * float(small)


def residual_laplace(
    grid: Sequence[float],
    xi: LevyTriplet,
    eta: LevyTriplet,
    q: float,
    law: LawRep,
    tol: float | None = None,
    workers: int = 1,
) -> ResidualReport:
    """(ln L_η(u)/u)L − q(L − 1)/u − (γ_ξ − σ²/2)L′ + (σ²/2)uL″ + ∫(…)ν_ξ on u > 0.

    Raises:
        DomainError: If η is not a subordinator, V is not nonnegative, or u ≤ 0.
    """
    _require_subordinator(eta)
    if law.support[0] < 0:
        raise DomainError(f"law {law.name!r} charges negative values")
    half_var = 0.5 * xi.sigma2

    def at(u):
        if u <= 0:
            raise DomainError(f"Laplace grid points must be positive, got {u}")
        triple = law.laplace_triple(u)
        value, first, second = triple
        log_eta = _log_laplace_eta(eta, u)
        coeffs = (log_eta / u - q / u, -(xi.gamma - half_var), half_var * u)
        residual = (
            coeffs[0] * value
            + q / u
            + coeffs[1] * first
            + coeffs[2] * second
            + _laplace_jumps(u, law, xi.nu, triple)
        )
        error = 0.0
        if isinstance(law, EmpiricalLaw):
            n = law.values.size
            weights = np.exp(-u * law.values)
            spreads = [
                weights.std(ddof=1),
                (law.values * weights).std(ddof=1),
                (law.values**2 * weights).std(ddof=1),
            ]
            error = sum(abs(c) * s for c, s in zip(coeffs, spreads)) / math.sqrt(n)
        return residual, error

    rows = _map_grid(at, grid, workers)
    report = ResidualReport(
        "laplace",
        np.asarray(grid, dtype=float),
        np.array([r[0] for r in rows]),
        _tolerance("laplace", tol),
        mc_budget(law, [max(r[1] for r in rows)]),
    )
    if isinstance(law, EmpiricalLaw):
        report.notes.append("budget omits the ν_ξ integral's sampling error")
    return report


def residual_density_laplace(
    grid: Sequence[float],
    xi: LevyTriplet,
    eta: LevyTriplet,
    q: float,
    law: LawRep,
    tol: float | None = None,
    workers: int = 1,
) -> ResidualReport:
    """Density form of the Laplace equation for z > 0.

    γ_η⁰f − (γ_ξ⁰ + σ²/2)zf − (σ²/2)z²f′ − q∫_z^∞f
      − ∫_z^∞ ν_ξ((ln(s/z), ∞))f(s)ds + ∫_0^z [ν_ξ((−∞, ln(s/z))) + ν_η((z − s, ∞))]f(s)ds.

    Raises:
        DomainError: If ξ has infinite-variation jumps, η is not a subordinator or f is missing.
    """
    if xi.gamma0 is None:
        raise DomainError("density Laplace equation needs ξ jumps of finite variation")
    _require_subordinator(eta)
    _need_density(law)
    half_var = 0.5 * xi.sigma2
    nu_xi, nu_eta = xi.nu, eta.nu
    has_jumps = nu_xi.total_mass() > 0 or nu_eta.total_mass() > 0
    notes = []
    if xi.sigma2 > 0:
        notes.append("assumes z ↦ z²f(z) is absolutely continuous")

    def at(z):
        if z <= 0:
            raise DomainError(f"density Laplace grid points must be positive, got {z}")
        f, f_se = _density(law, z)
        df, df_se = _density_derivative(law, z)
        tail, tail_se = integrate_with_error(law, lambda s: 1.0 + 0.0 * np.asarray(s), Interval(z, math.inf, lo_closed=False))
        residual = eta.gamma0 * f - (xi.gamma0 + half_var) * z * f - half_var * z * z * df - q * tail
        errors = [
            (abs(eta.gamma0) + abs(xi.gamma0 + half_var) * z) * f_se,
            half_var * z * z * df_se,
            q * tail_se,
        ]
        if has_jumps:

            def above(s):
                s = np.asarray(s, dtype=float)
                return np.asarray(nu_xi.tail_plus(np.log(np.maximum(s, z) / z)))

            def below(s):
                s = np.asarray(s, dtype=float)
                safe = np.clip(s, 1e-300, z)
                return np.asarray(nu_xi.tail_minus(-np.log(safe / z))) + np.asarray(nu_eta.tail_plus(z - safe))

            upper, upper_se = integrate_with_error(law, above, Interval(z, math.inf, lo_closed=False))
            lower, lower_se = integrate_with_error(law, below, Interval(0.0, z, lo_closed=False))
            residual += lower - upper
            errors += [upper_se, lower_se]
        return residual, sum(errors)

    rows = _map_grid(at, grid, workers)
    return ResidualReport(
        "density-laplace",
        np.asarray(grid, dtype=float),
        np.array([r[0] for r in rows]),
        _tolerance("density-laplace", tol),
        mc_budget(law, [max(r[1] for r in rows)]),
        notes=notes,
    )


# ------------------------------------------------------------------ equations for μ itself


@dataclass(frozen=True)
class _Setting:
    eta: LevyTriplet
    util: LevyTriplet
    aux: AuxFunctions


def _setting(xi: LevyTriplet, eta: LevyTriplet, q: float) -> _Setting:
    util = _util(xi, q)
    return _Setting(eta, util, build_aux(eta, util))


def _gaussian_term(law: LawRep, s: _Setting, z: float) -> tuple[float, float]:
    """(½σ_η² + ½z²σ²)f(z)."""
    weight = 0.5 * s.eta.sigma2 + 0.5 * z * z * s.util.sigma2
    if weight == 0.0:
        return 0.0, 0.0
    _need_density(law)
    f, se = _density(law, z)
    return weight * f, weight * se


def _convolve(law: LawRep, fn: Callable, z: float, points: Iterable[float] = ()) -> tuple[float, float]:
    """∫ fn(z − y) μ(dy), atom at zero included."""

    def shifted(y):
        return fn(z - np.asarray(y, dtype=float))

    return integrate_with_error(law, shifted, REAL_LINE, (z, z - 1.0, z + 1.0, *points))


def _drift_integral(law: LawRep, z: float, gamma_eta: float, gamma_util: float) -> tuple[float, float]:
    """∫_{0+}^z (γ_η + xγ_Ũ) μ(dx), the atom at 0 counted for z < 0."""

    def drift(x):
        return gamma_eta + gamma_util * np.asarray(x, dtype=float)

    if z > 0:
        return integrate_with_error(law, drift, Interval(0.0, z, lo_closed=False))
    value, se = integrate_with_error(law, drift, Interval(z, 0.0, lo_closed=False))
    return -value, se


def _ratio_integral(law: LawRep, s: _Setting, z: float, fn: Callable, region: Interval) -> tuple[float, float]:
    return integrate_with_error(law, _same_side(z, fn), region, _ratio_points(z, s.util.nu))


def _mu_profile(z: float, law: LawRep, s: _Setting) -> tuple[float, float]:
    """G(z): the general μ equation rearranged so that G ≡ K for the law of V.

    G = (½σ_η² + ½z²σ²)f + S_η∗μ + ρ − ∫_{0+}^z(γ_η + xγ_Ũ)μ − ∫_{0+}^z B_η∗μ − ∫_{0+}^z∫_{0+}^t B_Ũ(t/x)μ(dx)dt.
    """
    aux = s.aux
    gauss, gauss_se = _gaussian_term(law, s, z)
    conv_s, conv_s_se = _convolve(law, aux.s_eta, z)
    rho, rho_se = _ratio_integral(law, s, z, lambda w, ax: ax * np.asarray(aux.s_util(w)), _side_region(z))
    drift, drift_se = _drift_integral(law, z, s.eta.gamma, s.util.gamma)

    def integrated_b(y):
        y = np.asarray(y, dtype=float)
        return np.asarray(aux.ib_eta(z - y)) - np.asarray(aux.ib_eta(-y))

    conv_b, conv_b_se = integrate_with_error(law, integrated_b, REAL_LINE, (z, z - 1.0, z + 1.0, -1.0, 1.0))
    triple, triple_se = _ratio_integral(
        law, s, z, lambda w, ax: ax * np.asarray(s.aux.ib_util(np.maximum(w, 1.0))), _between(z)
    )
    value = gauss + conv_s + rho - drift - conv_b - triple
    return value, gauss_se + conv_s_se + rho_se + drift_se + conv_b_se + triple_se


def _check_nonzero(z: float) -> None:
    if z == 0:
        raise DomainError("μ equations are evaluated off z = 0")


def mu_profile(grid: Sequence[float], xi: LevyTriplet, eta: LevyTriplet, q: float, law: LawRep) -> np.ndarray:
    """G on a grid; constant exactly when the law solves the general μ equation."""
    s = _setting(xi, eta, q)
    values = []
    for z in grid:
        _check_nonzero(float(z))
        values.append(_mu_profile(float(z), law, s)[0])
    return np.array(values)


def residual_mu(
    grid: Sequence[float],
    xi: LevyTriplet,
    eta: LevyTriplet,
    q: float,
    law: LawRep,
    tol: float | None = None,
    workers: int = 1,
) -> ResidualReport:
    """G(z) − K̂ with K̂ the median of G over the grid."""
    s = _setting(xi, eta, q)
    if (eta.sigma2 > 0 or s.util.sigma2 > 0) and not law.has_density:
        raise DomainError(f"law {law.name!r} has no density for the Gaussian terms")
    if isinstance(law, ClosedFormLaw):
        _need_density(law)

    def at(z):
        _check_nonzero(z)
        return _mu_profile(z, law, s)

    rows = _map_grid(at, grid, workers)
    profile = np.array([r[0] for r in rows])
    k_hat = float(np.median(profile))
    return ResidualReport(
        "mu",
        np.asarray(grid, dtype=float),
        profile - k_hat,
        _tolerance("mu", tol),
        mc_budget(law, [2.0 * max(r[1] for r in rows)]),
        K=k_hat,
    )


def _fm_profile(z: float, law: LawRep, s: _Setting, gamma_eta: float, gamma_util: float) -> tuple[float, float]:
    s_eta_fm, s_util_fm = s.aux.require_fm()
    gauss, gauss_se = _gaussian_term(law, s, z)
    conv_s, conv_s_se = _convolve(law, s_eta_fm, z)
    rho, rho_se = _ratio_integral(law, s, z, lambda w, ax: ax * np.asarray(s_util_fm(w)), _side_region(z))
    drift, drift_se = _drift_integral(law, z, gamma_eta, gamma_util)
    return gauss + conv_s + rho - drift, gauss_se + conv_s_se + rho_se + drift_se


def explicit_k(law: LawRep, gamma_eta: float, gamma_util: float) -> tuple[float, float, float]:
    """(−∫_{0+}^∞ g dμ, ∫_{−∞}^0 g dμ, combined se) for g(x) = γ_η¹ + xγ_Ũ¹."""

    def drift(x):
        return gamma_eta + gamma_util * np.asarray(x, dtype=float)

    positive, pos_se = integrate_with_error(law, drift, POSITIVE)
    negative, neg_se = integrate_with_error(law, drift, Interval(-math.inf, 0.0))
    return -positive, negative, pos_se + neg_se


def residual_mu_fm(
    grid: Sequence[float],
    xi: LevyTriplet,
    eta: LevyTriplet,
    q: float,
    law: LawRep,
    tol: float | None = None,
    use_explicit_k: bool | None = None,
    workers: int = 1,
) -> ResidualReport:
    """First-moment form of the μ equation.

    With γ_Ũ¹ < 0 the constant is K = −∫_{0+}^∞(γ_η¹ + xγ_Ũ¹)μ(dx), else the
    median of the profile. use_explicit_k=True demands the closed form.

    Raises:
        DomainError: If a first moment is infinite, or the closed-form K is
            demanded with γ_Ũ¹ ≥ 0.
    """
    s = _setting(xi, eta, q)
    s.aux.require_fm()
    gamma_eta, gamma_util = first_moment(eta), first_moment(s.util)
    if gamma_eta is None or gamma_util is None:
        raise DomainError("first-moment equation needs E|η₁| and E|Ũ₁| finite")
    if use_explicit_k and gamma_util >= 0:
        raise DomainError(f"closed-form K needs E Ũ₁ < 0, got {gamma_util:.6g}")
    if isinstance(law, ClosedFormLaw):
        _need_density(law)

    def at(z):
        _check_nonzero(z)
        return _fm_profile(z, law, s, gamma_eta, gamma_util)

    rows = _map_grid(at, grid, workers)
    profile = np.array([r[0] for r in rows])
    k_median = float(np.median(profile))
    notes = [f"median K {k_median:.10g}"]
    budget_terms = [max(r[1] for r in rows)]
    if use_explicit_k is not False and gamma_util < 0:
        k_value, k_other, k_se = explicit_k(law, gamma_eta, gamma_util)
        notes.append(f"closed-form K {k_value:.10g}, mirror expression {k_other:.10g}")
        if abs(k_value - k_other) > _tolerance("mu-fm", tol) + mc_budget(law, [k_se]):
            logger.warning("K expressions disagree: %.10g versus %.10g", k_value, k_other)
        budget_terms.append(k_se)
    else:
        k_value = k_median
    return ResidualReport(
        "mu-fm",
        np.asarray(grid, dtype=float),
        profile - k_value,
        _tolerance("mu-fm", tol),
        mc_budget(law, budget_terms),
        K=k_value,
        notes=notes,
    )


def _fv_jump_terms(law: LawRep, s: _Setting, z: float) -> tuple[float, float]:
    """(B_η^FV ∗ μ)(z) ± ∫ B_Ũ^FV(z/x) μ(dx) over the side of z."""
    b_eta_fv, b_util_fv = s.aux.require_fv()
    conv, conv_se = _convolve(law, b_eta_fv, z)
    side, side_se = _ratio_integral(law, s, z, lambda w, ax: np.asarray(b_util_fv(w)), _side_region(z))
    return conv + math.copysign(1.0, z) * side, conv_se + side_se


def _require_fv_drifts(eta: LevyTriplet, util: LevyTriplet) -> tuple[float, float]:
    if eta.gamma0 is None or util.gamma0 is None:
        raise DomainError("finite-variation equations need η and Ũ jumps of finite variation")
    return eta.gamma0, util.gamma0


def residual_mu_fv(
    grid: Sequence[float],
    xi: LevyTriplet,
    eta: LevyTriplet,
    q: float,
    law: LawRep,
    tol: float | None = None,
    workers: int = 1,
) -> ResidualReport:
    """(γ_η⁰ + zγ_Ũ⁰)f + B_η^FV∗μ + 1_{z>0}∫_0^∞B_Ũ^FV(z/x)μ − 1_{z<0}∫_{−∞}^0B_Ũ^FV(z/x)μ.

    Raises:
        DomainError: With a Gaussian part in η or Ũ, or jumps of infinite variation.
    """
    s = _setting(xi, eta, q)
    if eta.sigma2 > 0 or s.util.sigma2 > 0:
        raise DomainError("finite-variation μ equation needs σ_η² = σ_Ũ² = 0")
    gamma_eta, gamma_util = _require_fv_drifts(eta, s.util)
    s.aux.require_fv()
    _need_density(law)

    def at(z):
        _check_nonzero(z)
        f, f_se = _density(law, z)
        jumps, jumps_se = _fv_jump_terms(law, s, z)
        weight = gamma_eta + z * gamma_util
        return weight * f + jumps, abs(weight) * f_se + jumps_se

    rows = _map_grid(at, grid, workers)
    return ResidualReport(
        "mu-fv",
        np.asarray(grid, dtype=float),
        np.array([r[0] for r in rows]),
        _tolerance("mu-fv", tol),
        mc_budget(law, [max(r[1] for r in rows)]),
    )


def residual_density_diff(
    grid: Sequence[float],
    xi: LevyTriplet,
    eta: LevyTriplet,
    q: float,
    law: LawRep,
    tol: float | None = None,
    workers: int = 1,
) -> ResidualReport:
    """(½σ_η² + ½z²σ²)f′ + zσ²f − (γ_η⁰ + zγ_Ũ⁰)f − B_η^FV∗μ ∓ ∫B_Ũ^FV(z/x)f(x)dx, z ≠ 0.

    The convolution with μ carries the B_η^FV(z)μ({0}) term.

    Raises:
        DomainError: Without a Gaussian part, with infinite-variation jumps or without f, f′.
    """
    s = _setting(xi, eta, q)
    if eta.sigma2 + s.util.sigma2 <= 0:
        raise DomainError("differentiated density equation needs σ_η² + σ_Ũ² > 0")
    gamma_eta, gamma_util = _require_fv_drifts(eta, s.util)
    s.aux.require_fv()
    _need_density(law)
    sigma2 = s.util.sigma2

    def at(z):
        _check_nonzero(z)
        f, f_se = _density(law, z)
        df, df_se = _density_derivative(law, z)
        jumps, jumps_se = _fv_jump_terms(law, s, z)
        weight = 0.5 * eta.sigma2 + 0.5 * z * z * sigma2
        linear = z * sigma2 - gamma_eta - z * gamma_util
        residual = weight * df + linear * f - jumps
        return residual, weight * df_se + abs(linear) * f_se + jumps_se

    rows = _map_grid(at, grid, workers)
    return ResidualReport(
        "density-diff",
        np.asarray(grid, dtype=float),
        np.array([r[0] for r in rows]),
        _tolerance("density-diff", tol),
        mc_budget(law, [max(r[1] for r in rows)]),
    )


# ------------------------------------------------------------------ consequences and counterexamples


def moment_identity(law: LawRep, xi: LevyTriplet, eta: LevyTriplet, q: float) -> tuple[float, float]:
    """E(V)E(Ũ₁) + E(η₁) and its standard error; zero for the law of V.

    Raises:
        DomainError: If a first moment is infinite.
    """
    mean_util, mean_eta = first_moment(_util(xi, q)), first_moment(eta)
    if mean_util is None or mean_eta is None:
        raise DomainError("moment identity needs E|Ũ₁| and E|η₁| finite")
    mean_v, se = integrate_with_error(law, lambda x: np.asarray(x, dtype=float))
    return mean_v * mean_util + mean_eta, abs(mean_util) * se


def integrated_equation_gap(v: float, xi: LevyTriplet, eta: LevyTriplet, law: LawRep) -> float:
    """Value at v > 0 of the integrated equation proposed for ξ_t = t, q = 0.

    −μ((v, ∞)) + (1/v)∫₀^∞ S(v − x)μ(dx) − ∫_v^∞ w^{−2} ∫₀^∞ S(w − x)μ(dx) dw,
    S the first-moment S-function of η. The law of V does not make it vanish.

    Raises:
        DomainError: Unless ξ is the unit drift and v > 0.
    """
    if not (xi.sigma2 == 0 and xi.gamma == 1.0 and xi.nu.total_mass() == 0):
        raise DomainError("the discrepancy is defined for ξ_t = t only")
    if v <= 0:
        raise DomainError(f"v must be positive, got {v}")
    s_fm = build_aux(eta, _util(xi, 0.0)).require_fm()[0]

    def inner(w):
        return integrate_with_error(
            law, lambda x: np.asarray(s_fm(w - np.asarray(x, dtype=float))), Interval(0.0, math.inf), (w, w - 1.0, w + 1.0)
        )[0]

    tail = integrate_with_error(law, lambda x: 1.0 + 0.0 * np.asarray(x), Interval(v, math.inf, lo_closed=False))[0]
    outer = quad_interval(lambda w: inner(w) / (w * w), v, math.inf)
    return -tail + inner(v) / v - outer


def ode_residual_delay(
    grid: Sequence[float],
    law: LawRep,
    q: float,
    c: float,
    sigma_eta: float,
    tol: float = 1e-2,
) -> ResidualReport:
    """(σ_η²/2)f″(z) − qf(z) − c(f(z) − f(ez)) for Poisson(c) ξ with unit jumps and η = σ_ηB."""

    def at(z):
        f, f_se = _density(law, z)
        far, far_se = _density(law, math.e * z)
        d2f, d2f_se = _density_derivative(law, z, order=2)
        half = 0.5 * sigma_eta**2
        residual = half * d2f - q * f - c * (f - far)
        return residual, half * d2f_se + (q + c) * f_se + c * far_se

    rows = [at(float(z)) for z in grid]
    return ResidualReport(
        "delay-ode",
        np.asarray(grid, dtype=float),
        np.array([r[0] for r in rows]),
        tol,
        mc_budget(law, [max(r[1] for r in rows)]),
    )


def ode_residual_exp_jumps(
    grid: Sequence[float],
    law: LawRep,
    q: float,
    sigma_eta: float,
    gamma_eta: float,
    tol: float = 1e-2,
) -> ResidualReport:
    """½σ_η²f‴ − γ_ηf″ − (1 + q)f′ − f/z for ν_ξ(dx) = e^{−x}1_{x>0}dx and η = σ_ηB + γ_ηt."""

    def at(z):
        if z == 0:
            raise DomainError("third-order equation is evaluated off z = 0")
        f, f_se = _density(law, z)
        df, df_se = _density_derivative(law, z, order=1)
        d2f, d2f_se = _density_derivative(law, z, order=2)
        d3f, d3f_se = _density_derivative(law, z, order=3)
        half = 0.5 * sigma_eta**2
        residual = half * d3f - gamma_eta * d2f - (1.0 + q) * df - f / z
        error = half * d3f_se + abs(gamma_eta) * d2f_se + (1.0 + q) * df_se + f_se / abs(z)
        return residual, error

    rows = [at(float(z)) for z in grid]
    return ResidualReport(
        "third-order-ode",
        np.asarray(grid, dtype=float),
        np.array([r[0] for r in rows]),
        tol,
        mc_budget(law, [max(r[1] for r in rows)]),
    )


RESIDUALS: dict[str, Callable[..., ResidualReport]] = {
    "cf": residual_cf,
    "laplace": residual_laplace,
    "density-laplace": residual_density_laplace,
    "mu": residual_mu,
    "mu-fm": residual_mu_fm,
    "mu-fv": residual_mu_fv,
    "density-diff": residual_density_diff,
}
