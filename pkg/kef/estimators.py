"""Law representations and the statistical primitives every residual check uses."""

import logging
import math
from collections.abc import Callable, Iterable
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import hermite_e
from scipy import stats

from kef.constants import BATCH_MEANS_GROUPS
from kef.errors import DomainError
from kef.quadrature import REAL_LINE, Interval, quad_interval
from kef.simulation import SampleBatch

logger = logging.getLogger(__name__)

SQRT_2PI = math.sqrt(2.0 * math.pi)
# relative step for finite-difference fallbacks
FD_STEP = 1e-5


def _values(batch) -> np.ndarray:
    values = batch.values if isinstance(batch, SampleBatch) else np.asarray(batch, dtype=float)
    if values.size == 0:
        raise DomainError("empty sample batch")
    return values


def _apply(fn: Callable, x: np.ndarray) -> np.ndarray:
    """Calls fn on an array, falling back to element-wise calls for scalar-only fn."""
    try:
        out = np.asarray(fn(x))
        if out.shape == x.shape:
            return out
    except (TypeError, ValueError):
        logger.debug("integrand is not vectorized, evaluating point by point", exc_info=True)
    return np.array([fn(float(v)) for v in x])


@dataclass(frozen=True)
class ClosedFormLaw:
    """A law given by formulas: any of density, CDF, CF (with derivatives) or Laplace transform.

    Missing derivatives fall back to quadrature against the density, or to
    central finite differences when only the function itself is known.
    """

    name: str
    density: Callable | None = None
    cdf: Callable | None = None
    cf: Callable | None = None
    cf_derivatives: Callable | None = None
    laplace: Callable | None = None
    density_derivative: Callable | None = None
    atom0: float = 0.0
    support: tuple[float, float] = (-math.inf, math.inf)
    breakpoints: tuple[float, ...] = ()
    sampler: Callable | None = None
    second_moment_finite: bool = True
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 <= self.atom0 <= 1.0:
            raise DomainError(f"atom at zero must be a probability, got {self.atom0}")
        if self.density is None and self.cf is None and self.cf_derivatives is None and self.laplace is None:
            raise DomainError(f"law {self.name!r} needs a density, a CF or a Laplace transform")

    @property
    def has_density(self) -> bool:
        return self.density is not None

    def _points(self) -> tuple[float, ...]:
        return (*self.breakpoints, 0.0)

    def pdf(self, z):
        if self.density is None:
            raise DomainError(f"law {self.name!r} has no density")
        return self.density(z)

    def pdf_derivative(self, z):
        if self.density_derivative is not None:
            return self.density_derivative(z)
        z = np.asarray(z, dtype=float)
        step = FD_STEP * np.maximum(1.0, np.abs(z))
        return (self.pdf(z + step) - self.pdf(z - step)) / (2.0 * step)

    def cdf_at(self, z):
        """F(z) from the closed form, else by integrating the density."""
        if self.cdf is not None:
            return self.cdf(z)
        lo = self.support[0]

        def single(x):
            mass = quad_interval(self.pdf, lo, min(x, self.support[1]), self._points())
            return mass + (self.atom0 if x >= 0 else 0.0)

        z_arr = np.asarray(z, dtype=float)
        out = np.array([single(float(x)) for x in z_arr.ravel()]).reshape(z_arr.shape)
        return out.item() if out.ndim == 0 else out

    def cf_triple(self, u: float) -> tuple[complex, complex, complex]:
        """(φ(u), φ′(u), φ″(u))."""
        if self.cf_derivatives is not None:
            return tuple(complex(v) for v in self.cf_derivatives(u))
        if self.density is not None:
            lo, hi = self.support
            moments = []
            for power in range(3):
                value = quad_interval(
                    lambda x, k=power: (1j * x) ** k * np.exp(1j * u * x) * self.pdf(x),
                    lo,
                    hi,
                    self._points(),
                    complex_valued=True,
                )
                moments.append(value + (self.atom0 if power == 0 else 0.0))
            return tuple(moments)
        step = FD_STEP * max(1.0, abs(u))
        left, mid, right = (complex(self.cf(u + d)) for d in (-step, 0.0, step))
        return mid, (right - left) / (2 * step), (right - 2 * mid + left) / step**2

    def laplace_triple(self, u: float) -> tuple[float, float, float]:
        """(L(u), L′(u), L″(u)) with L(u) = E e^{-uV} for V ≥ 0."""
        if self.laplace is not None:
            return tuple(float(v) for v in self.laplace(u))
        if self.density is None:
            raise DomainError(f"law {self.name!r} has neither a Laplace transform nor a density")
        hi = self.support[1]
        values = []
        for power in range(3):
            value = quad_interval(
                lambda x, k=power: (-x) ** k * math.exp(-u * x) * float(self.pdf(x)),
                max(self.support[0], 0.0),
                hi,
                self._points(),
            )
            values.append(value + (self.atom0 if power == 0 else 0.0))
        return tuple(values)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.sampler is None:
            raise DomainError(f"law {self.name!r} has no sampler")
        return np.asarray(self.sampler(rng, n), dtype=float)

    def validate(self, grid: Iterable[float] | None = None, tol: float = 1e-6) -> None:
        """Checks normalization, monotone CDF on a grid and φ(0) = 1.

        Raises:
            DomainError: If an invariant fails.
        """
        if self.density is not None:
            total = quad_interval(self.pdf, *self.support, self._points()) + self.atom0
            if abs(total - 1.0) > tol:
                raise DomainError(f"law {self.name!r} has total mass {total:.10g}")
        if self.cdf is not None:
            lo = self.support[0] if math.isfinite(self.support[0]) else -50.0
            hi = self.support[1] if math.isfinite(self.support[1]) else 50.0
            points = np.linspace(lo, hi, 201) if grid is None else np.asarray(list(grid), dtype=float)
            values = np.asarray(self.cdf_at(points), dtype=float)
            if np.any(np.diff(values) < -tol) or values.min() < -tol or values.max() > 1 + tol:
                raise DomainError(f"law {self.name!r} has a non-monotone CDF")
        # a density-only law is already covered by the normalization check
        if self.cf is not None or self.cf_derivatives is not None:
            phi0 = self.cf(0.0) if self.cf is not None else self.cf_derivatives(0.0)[0]
            if abs(complex(phi0) - 1.0) > tol:
                raise DomainError(f"law {self.name!r} has φ(0) = {phi0}")


@dataclass(frozen=True)
class EmpiricalLaw:
    """A sample batch read as a law; densities come from a Gaussian KDE of the nonzero draws."""

    batch: SampleBatch
    bandwidth: float | None = None

    @property
    def name(self) -> str:
        return f"empirical[{self.batch.sampler}, n={self.batch.n}]"

    @property
    def values(self) -> np.ndarray:
        return self.batch.values

    @property
    def atom0(self) -> float:
        return self.batch.atom0

    @property
    def has_density(self) -> bool:
        return True

    @property
    def second_moment_finite(self) -> bool:
        return True

    @property
    def support(self) -> tuple[float, float]:
        return float(self.values.min()), float(self.values.max())

    def _continuous(self) -> np.ndarray:
        return self.values[self.values != 0.0] if self.atom0 > 0 else self.values

    def pdf(self, z):
        part = self._continuous()
        if part.size == 0:
            return 0.0 * np.asarray(z, dtype=float)
        return (1.0 - self.atom0) * kde(part, z, self.bandwidth)

    def pdf_derivative(self, z, order: int = 1):
        part = self._continuous()
        if part.size == 0:
            return 0.0 * np.asarray(z, dtype=float)
        return (1.0 - self.atom0) * kde_deriv(part, z, self.bandwidth, order)

    def pdf_error(self, z, order: int = 0):
        """Batch-means standard error of pdf (order 0) or its derivatives."""
        part = self._continuous()
        if part.size < 2 * BATCH_MEANS_GROUPS:
            return 0.0 * np.asarray(z, dtype=float)
        return (1.0 - self.atom0) * kde_error(part, z, self.bandwidth, order)

    def cdf_at(self, z):
        return ecdf(self.values, z)

    def cf_triple(self, u: float) -> tuple[complex, complex, complex]:
        estimate = emp_cf(self.values, u)
        return estimate.phi, estimate.dphi, estimate.d2phi

    def laplace_triple(self, u: float) -> tuple[float, float, float]:
        weights = np.exp(-u * self.values)
        return (
            float(weights.mean()),
            float((-self.values * weights).mean()),
            float((self.values**2 * weights).mean()),
        )


LawRep = ClosedFormLaw | EmpiricalLaw


def ecdf(batch, x):
    """Fraction of draws ≤ x, vectorized in x."""
    values = np.sort(_values(batch))
    out = np.searchsorted(values, np.asarray(x, dtype=float), side="right") / values.size
    return out.item() if np.ndim(out) == 0 else out


def ks(batch, cdf: Callable) -> float:
    """sup_x |F̂(x) − F(x)| by one pass over the sorted draws."""
    values = np.sort(_values(batch))
    n = values.size
    reference = np.asarray(cdf(values), dtype=float)
    upper = np.arange(1, n + 1) / n - reference
    lower = reference - np.arange(n) / n
    return float(max(upper.max(), lower.max()))


def ks_two_sample(first, second) -> float:
    return float(stats.ks_2samp(_values(first), _values(second)).statistic)


@dataclass(frozen=True)
class CfEstimate:
    """Empirical φ, φ′, φ″ at one u with their Monte Carlo standard errors."""

    u: float
    phi: complex
    dphi: complex
    d2phi: complex
    se: tuple[float, float, float]


def _complex_se(terms: np.ndarray) -> float:
    n = terms.size
    if n < 2:
        return 0.0
    return math.sqrt((terms.real.var(ddof=1) + terms.imag.var(ddof=1)) / n)


def emp_cf(batch, u: float) -> CfEstimate:
    values = _values(batch)
    wave = np.exp(1j * u * values)
    terms = (wave, 1j * values * wave, -(values**2) * wave)
    return CfEstimate(
        float(u),
        complex(terms[0].mean()),
        complex(terms[1].mean()),
        complex(terms[2].mean()),
        tuple(_complex_se(t) for t in terms),
    )


def emp_laplace(batch, u: float) -> tuple[float, float]:
    """(mean e^{-uV}, standard error)."""
    weights = np.exp(-u * _values(batch))
    se = weights.std(ddof=1) / math.sqrt(weights.size) if weights.size > 1 else 0.0
    return float(weights.mean()), float(se)


def silverman_bandwidth(batch) -> float:
    values = _values(batch)
    spread = values.std(ddof=1) if values.size > 1 else 0.0
    if spread == 0.0:
        return 1.0
    return 1.06 * spread * values.size ** (-0.2)


def kde_deriv(batch, z, bandwidth: float | None = None, order: int = 1):
    """order-th derivative of the Gaussian KDE: (−1)^k He_k(x)φ(x)/h^{k+1}, x = (z − V)/h."""
    values = _values(batch)
    if order < 0:
        raise DomainError(f"derivative order must be nonnegative, got {order}")
    h = silverman_bandwidth(values) if bandwidth is None else bandwidth
    if not h > 0:
        raise DomainError(f"bandwidth must be positive, got {h}")
    coefficients = np.zeros(order + 1)
    coefficients[-1] = 1.0
    z_arr = np.asarray(z, dtype=float)
    out = np.empty(z_arr.size)
    for i, point in enumerate(z_arr.ravel()):
        x = (point - values) / h
        kernel = np.exp(-0.5 * x**2) / SQRT_2PI
        out[i] = np.mean(hermite_e.hermeval(x, coefficients) * kernel)
    out *= (-1) ** order / h ** (order + 1)
    out = out.reshape(z_arr.shape)
    return out.item() if out.ndim == 0 else out


def kde(batch, z, bandwidth: float | None = None):
    """Gaussian KDE; Silverman's rule when bandwidth is None."""
    return kde_deriv(batch, z, bandwidth, order=0)


def kde_error(batch, z, bandwidth: float | None = None, order: int = 0):
    """Batch-means standard error of a KDE (derivative) at fixed bandwidth.

    Only the variance is covered; smoothing bias is not.
    """
    values = _values(batch)
    h = silverman_bandwidth(values) if bandwidth is None else bandwidth
    groups = np.array_split(values, BATCH_MEANS_GROUPS)
    estimates = np.array([np.atleast_1d(kde_deriv(g, z, h, order)) for g in groups])
    se = estimates.std(axis=0, ddof=1) / math.sqrt(len(groups))
    return se.item() if np.ndim(z) == 0 else se


def integrate_with_error(
    law: LawRep,
    g: Callable,
    region: Interval = REAL_LINE,
    points: Iterable[float] = (),
    complex_valued: bool = False,
) -> tuple[float | complex, float]:
    """∫_region g dμ and its error: Monte Carlo standard error for empirical laws, 0 otherwise.

    Raises:
        NumericFailure: If quadrature misses its tolerance.
    """
    cast = complex if complex_valued else float
    if isinstance(law, EmpiricalLaw):
        values = law.values
        terms = np.where(region.contains(values), _apply(g, values), 0.0)
        if complex_valued:
            return complex(terms.mean()), _complex_se(terms)
        se = terms.std(ddof=1) / math.sqrt(terms.size) if terms.size > 1 else 0.0
        return float(terms.mean()), float(se)
    lo, hi = max(region.lo, law.support[0]), min(region.hi, law.support[1])
    value = 0j if complex_valued else 0.0
    if lo < hi:
        value = quad_interval(
            lambda x: g(x) * law.pdf(x),
            lo,
            hi,
            (*law.breakpoints, *points, 0.0),
            complex_valued=complex_valued,
        )
    if law.atom0 > 0 and bool(region.contains(0.0)):
        value += law.atom0 * cast(g(0.0))
    return cast(value), 0.0


def integrate(law: LawRep, g: Callable, region: Interval = REAL_LINE, points: Iterable[float] = ()) -> float:
    """∫_region g dμ: quadrature against f plus μ({0})g(0), or a sample average."""
    return integrate_with_error(law, g, region, points)[0]


def mass(law: LawRep, region: Interval) -> float:
    """μ(region) from the CDF when one is available."""
    if isinstance(law, ClosedFormLaw) and law.cdf is not None and law.atom0 == 0.0:
        upper = float(law.cdf_at(region.hi)) if math.isfinite(region.hi) else 1.0
        lower = float(law.cdf_at(region.lo)) if math.isfinite(region.lo) else 0.0
        return upper - lower
    return integrate(law, lambda x: 1.0 + 0.0 * np.asarray(x), region)
