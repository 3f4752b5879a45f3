"""Lévy measures, characteristic triplets and the ξ ↔ U ↔ Ũ transformation algebra."""

import logging
import math
from abc import ABC, abstractmethod
from collections.abc import Callable, Iterable
from dataclasses import dataclass, field
from enum import StrEnum

import numpy as np
from scipy import special

from kef.errors import DomainError
from kef.quadrature import REAL_LINE, Interval, quad_interval, scalarize

logger = logging.getLogger(__name__)

LOG2 = math.log(2.0)
# the truncation indicator 1_{|x|<=1} and zero are kinks of every Lévy–Khintchine integrand
TRUNCATION_POINTS = (-1.0, 0.0, 1.0)


def _result(values):
    """Returns a float for 0-d results and the array otherwise."""
    values = np.asarray(values)
    return values.item() if values.ndim == 0 else values


def h_map(x):
    """Jump map ξ → U, x ↦ e^{-x} - 1."""
    return np.expm1(-np.asarray(x, dtype=float))


def g_map(y):
    """Jump map U → ξ, y ↦ -ln(1 + y); +inf for y ≤ -1."""
    y = np.asarray(y, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(y > -1.0, -np.log1p(np.maximum(y, -1.0)), np.inf)
    return _result(out)


def _levy_khintchine_integrand(z: float) -> Callable:
    """e^{izx} - 1 - izx 1_{|x|<=1}, written to stay accurate for tiny zx."""

    def integrand(x):
        zx = z * x
        real = -2.0 * math.sin(0.5 * zx) ** 2
        imag = math.sin(zx) - (zx if abs(x) <= 1.0 else 0.0)
        return complex(real, imag)

    return integrand


class LevyMeasure(ABC):
    """A Lévy measure ν on ℝ∖{0}.

    Every family answers truncated moments over intervals (vectorized in the
    endpoints), integrates scalar functions, evaluates the Lévy–Khintchine
    integral and draws jumps above a cutoff.
    """

    infinite_activity: bool = False
    finite_variation: bool = True

    @abstractmethod
    def moment(self, lo, hi, power: int = 0, lo_closed: bool = False, hi_closed: bool = False):
        """Returns ∫_{lo..hi} y^power ν(dy), broadcasting over lo and hi."""

    @abstractmethod
    def integrate(
        self,
        fn: Callable,
        region: Interval = REAL_LINE,
        points: Iterable[float] = (),
        complex_valued: bool = False,
    ):
        """Returns ∫_region fn(y) ν(dy) for a scalar function fn."""

    @abstractmethod
    def sample(self, rng: np.random.Generator, n: int, eps: float) -> np.ndarray:
        """Draws n jumps from ν restricted to {|y| ≥ eps}, normalized."""

    @abstractmethod
    def image(self) -> "LevyMeasure":
        """Image measure under h(x) = e^{-x} - 1."""

    @abstractmethod
    def preimage(self) -> "LevyMeasure":
        """Image measure under g(y) = -ln(1 + y), the inverse of h."""

    @abstractmethod
    def tail_moment_finite(self, power: float) -> bool:
        """Whether ∫_{|y|>1} |y|^power ν(dy) is finite."""

    def left_exponential_moment_finite(self, power: float) -> bool:
        """Whether ∫_{y<-ln 2} e^{-power·y} ν(dy) is finite."""
        return True

    @property
    def atoms(self) -> tuple[tuple[float, float], ...]:
        """(position, mass) pairs of the atomic part."""
        return ()

    def density(self, y):
        """Lebesgue density of the absolutely continuous part."""
        return _result(np.zeros_like(np.asarray(y, dtype=float)))

    def tail_plus(self, x):
        """ν((x, ∞))."""
        return self.moment(x, np.inf, 0, lo_closed=False)

    def tail_minus(self, x):
        """ν((−∞, −x))."""
        return self.moment(-np.inf, -np.asarray(x, dtype=float), 0, hi_closed=False)

    def total_mass(self) -> float:
        """ν(ℝ), possibly infinite."""
        return float(self.moment(-np.inf, np.inf, 0))

    def activity(self, eps: float) -> float:
        """ν({|y| ≥ eps})."""
        return float(
            self.moment(eps, np.inf, 0, lo_closed=True)
            + self.moment(-np.inf, -eps, 0, hi_closed=True)
        )

    def truncated_mean(self) -> float:
        """∫_{|y|≤1} y ν(dy)."""
        return float(self.moment(-1.0, 1.0, 1, lo_closed=True, hi_closed=True))

    def small_jump_moment(self, eps: float, power: int) -> float:
        """∫_{|y|<eps} |y|^power ν(dy)."""
        if eps <= 0:
            return 0.0
        positive = self.moment(0.0, eps, power)
        negative = self.moment(-eps, 0.0, power)
        return float(positive + (-1) ** power * negative)

    def char_integral(self, z):
        """∫ (e^{izy} - 1 - izy 1_{|y|≤1}) ν(dy), vectorized in z."""
        z_arr = np.asarray(z, dtype=float)
        flat = [
            complex(
                self.integrate(
                    _levy_khintchine_integrand(float(value)),
                    points=TRUNCATION_POINTS,
                    complex_valued=True,
                )
            )
            for value in z_arr.ravel()
        ]
        return _result(np.array(flat, dtype=complex).reshape(z_arr.shape))

    def levy_integral_finite(self) -> bool:
        """Checks ∫ min(1, y²) ν(dy) < ∞ numerically."""
        inner = self.moment(-1.0, 1.0, 2, lo_closed=True, hi_closed=True)
        outer = self.moment(1.0, np.inf, 0) + self.moment(-np.inf, -1.0, 0)
        return bool(np.isfinite(inner) and np.isfinite(outer))


@dataclass(frozen=True)
class Zero(LevyMeasure):
    """The null measure."""

    def moment(self, lo, hi, power=0, lo_closed=False, hi_closed=False):
        return _result(np.zeros(np.broadcast(np.asarray(lo), np.asarray(hi)).shape))

    def integrate(self, fn, region=REAL_LINE, points=(), complex_valued=False):
        return 0j if complex_valued else 0.0

    def sample(self, rng, n, eps):
        return np.zeros(0)

    def image(self):
        return self

    def preimage(self):
        return self

    def tail_moment_finite(self, power):
        return True

    def char_integral(self, z):
        return _result(np.zeros_like(np.asarray(z, dtype=float), dtype=complex))


@dataclass(frozen=True)
class Atoms(LevyMeasure):
    """A finite sum of point masses away from zero."""

    positions: tuple[float, ...]
    masses: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "positions", tuple(float(p) for p in self.positions))
        object.__setattr__(self, "masses", tuple(float(m) for m in self.masses))
        if len(self.positions) != len(self.masses):
            raise DomainError("atom positions and masses differ in length")
        if any(p == 0.0 or not math.isfinite(p) for p in self.positions):
            raise DomainError("atoms must sit at finite nonzero positions")
        if any(m <= 0.0 for m in self.masses):
            raise DomainError("atom masses must be strictly positive")

    @property
    def atoms(self):
        return tuple(zip(self.positions, self.masses))

    def moment(self, lo, hi, power=0, lo_closed=False, hi_closed=False):
        lo = np.asarray(lo, dtype=float)[..., None]
        hi = np.asarray(hi, dtype=float)[..., None]
        pos = np.asarray(self.positions)
        above = pos >= lo if lo_closed else pos > lo
        below = pos <= hi if hi_closed else pos < hi
        weights = np.asarray(self.masses) * pos**power
        return _result(np.sum(np.where(above & below, weights, 0.0), axis=-1))

    def integrate(self, fn, region=REAL_LINE, points=(), complex_valued=False):
        total = 0j if complex_valued else 0.0
        for pos, mass in self.atoms:
            if region.contains(pos):
                total += mass * fn(pos)
        return total

    def sample(self, rng, n, eps):
        pos = np.asarray(self.positions)
        weights = np.where(np.abs(pos) >= eps, np.asarray(self.masses), 0.0)
        if weights.sum() == 0.0:
            return np.zeros(0)
        return rng.choice(pos, size=n, p=weights / weights.sum())

    def image(self):
        return Atoms(tuple(float(h_map(p)) for p in self.positions), self.masses)

    def preimage(self):
        if any(p <= -1.0 for p in self.positions):
            raise DomainError("atoms at or below -1 have no preimage under h")
        return Atoms(tuple(float(g_map(p)) for p in self.positions), self.masses)

    def tail_moment_finite(self, power):
        return True

    def char_integral(self, z):
        z = np.asarray(z, dtype=float)[..., None]
        pos = np.asarray(self.positions)
        comp = np.where(np.abs(pos) <= 1.0, pos, 0.0)
        terms = np.asarray(self.masses) * (np.exp(1j * z * pos) - 1.0 - 1j * z * comp)
        return _result(np.sum(terms, axis=-1))


class _DensityMeasure(LevyMeasure):
    """Absolutely continuous measures integrated by quadrature."""

    support: tuple[float, float] = (-math.inf, math.inf)
    kinks: tuple[float, ...] = (0.0,)

    def integrate(self, fn, region=REAL_LINE, points=(), complex_valued=False):
        clipped = region.clip(*self.support)
        if clipped is None:
            return 0j if complex_valued else 0.0
        return quad_interval(
            lambda y: fn(y) * self.density(y),
            clipped.lo,
            clipped.hi,
            points=(*points, *self.kinks),
            complex_valued=complex_valued,
        )

    def _quad_moment(self, lo, hi, power):
        def single(a, b):
            return self.integrate(lambda y: y**power, Interval(a, b) if a <= b else Interval(b, b))

        return scalarize(single)(lo, hi)

    def image(self):
        return ImageMeasure(self, "h")

    def preimage(self):
        if self.moment(-np.inf, -1.0, 0, hi_closed=True) > 0.0:
            raise DomainError("measure charges (-inf, -1]; no preimage under h")
        return ImageMeasure(self, "g")


def _exp_antiderivative(y, a: float, power: int):
    """Antiderivative of y^power e^{-ay}, equal to zero at +inf."""
    y = np.asarray(y, dtype=float)
    finite = np.isfinite(y)
    safe = np.where(finite, y, 0.0)
    if power == 0:
        poly = np.full_like(safe, 1.0 / a)
    elif power == 1:
        poly = safe / a + 1.0 / a**2
    elif power == 2:
        poly = safe**2 / a + 2.0 * safe / a**2 + 2.0 / a**3
    else:
        raise DomainError(f"closed-form exponential moments stop at power 2, got {power}")
    return np.where(finite, -np.exp(-a * safe) * poly, 0.0)


def _positive_side(scale: float, a: float, lo, hi, power: int):
    """∫ over [lo, hi] ∩ (0, ∞) of y^power · scale·e^{-ay} dy."""
    if scale == 0.0:
        return np.zeros(np.broadcast(np.asarray(lo), np.asarray(hi)).shape)
    lower = np.maximum(np.asarray(lo, dtype=float), 0.0)
    upper = np.maximum(np.asarray(hi, dtype=float), lower)
    return scale * (_exp_antiderivative(upper, a, power) - _exp_antiderivative(lower, a, power))


class _ExponentialFamily(_DensityMeasure):
    """Shared closed forms for c₊e^{-ax}1_{x>0} + c₋e^{-a|x|}1_{x<0}."""

    @property
    @abstractmethod
    def rate(self) -> float: ...

    @property
    @abstractmethod
    def right_scale(self) -> float: ...

    @property
    @abstractmethod
    def left_scale(self) -> float: ...

    @property
    def support(self):
        lo = -math.inf if self.left_scale > 0 else 0.0
        hi = math.inf if self.right_scale > 0 else 0.0
        return (lo, hi)

    def density(self, y):
        y = np.asarray(y, dtype=float)
        a = self.rate
        out = np.where(
            y > 0,
            self.right_scale * np.exp(-a * np.abs(y)),
            np.where(y < 0, self.left_scale * np.exp(-a * np.abs(y)), 0.0),
        )
        return _result(out)

    def moment(self, lo, hi, power=0, lo_closed=False, hi_closed=False):
        if power > 2:
            return self._quad_moment(lo, hi, power)
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        right = _positive_side(self.right_scale, self.rate, lo, hi, power)
        left = _positive_side(self.left_scale, self.rate, -hi, -lo, power)
        return _result(right + (-1) ** power * left)

    def sample(self, rng, n, eps):
        a = self.rate
        right = self.right_scale * math.exp(-a * eps) / a
        left = self.left_scale * math.exp(-a * eps) / a
        if not right + left > 0.0:
            raise DomainError("exponential jump measure has zero mass")
        signs = np.where(rng.random(n) < right / (right + left), 1.0, -1.0)
        return signs * (eps + rng.exponential(1.0 / a, size=n))

    def tail_moment_finite(self, power):
        return True

    def left_exponential_moment_finite(self, power):
        return self.left_scale == 0.0 or self.rate > power

    def char_integral(self, z):
        z = np.asarray(z, dtype=float)
        a = self.rate
        inner_mean = (1.0 - math.exp(-a) * (1.0 + a)) / a**2
        right = self.right_scale * (1.0 / (a - 1j * z) - 1.0 / a - 1j * z * inner_mean)
        left = self.left_scale * (1.0 / (a + 1j * z) - 1.0 / a + 1j * z * inner_mean)
        return _result(right + left)


@dataclass(frozen=True)
class TwoSidedExponential(_ExponentialFamily):
    """Density c₊e^{-ax} on x > 0 and c₋e^{-a|x|} on x < 0."""

    a: float
    left: float = 0.0
    right: float = 0.0

    def __post_init__(self):
        if self.a <= 0:
            raise DomainError(f"exponential rate must be positive, got {self.a}")
        if self.left < 0 or self.right < 0:
            raise DomainError("exponential scales must be nonnegative")

    @property
    def rate(self):
        return self.a

    @property
    def right_scale(self):
        return self.right

    @property
    def left_scale(self):
        return self.left


@dataclass(frozen=True)
class CompoundPoissonExponential(_ExponentialFamily):
    """Jumps arriving at rate λ with Exp(a) sizes: ν(dx) = λa e^{-ax} dx on x > 0."""

    intensity: float
    a: float

    def __post_init__(self):
        if self.intensity <= 0 or self.a <= 0:
            raise DomainError("compound Poisson intensity and jump rate must be positive")

    @property
    def rate(self):
        return self.a

    @property
    def right_scale(self):
        return self.intensity * self.a

    @property
    def left_scale(self):
        return 0.0


@dataclass(frozen=True)
class MLSubordinator(_DensityMeasure):
    """Lévy measure of the drift-free subordinator behind the Mittag-Leffler law.

    Density (1/Γ(1-α)) e^{-x/α} / (1 - e^{-x/α})^{α+1} on x > 0, with tail
    ν((x, ∞)) = ((1 - e^{-x/α})^{-α} - 1) / Γ(1-α).
    """

    alpha: float
    infinite_activity = True
    support = (0.0, math.inf)
    kinks = (0.0, 1.0)

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise DomainError(f"Mittag-Leffler index must lie in (0, 1), got {self.alpha}")

    @property
    def _norm(self) -> float:
        return float(special.gamma(1.0 - self.alpha))

    def density(self, y):
        y = np.asarray(y, dtype=float)
        alpha = self.alpha
        safe = np.where(y > 0, y, 1.0)
        values = np.exp(-safe / alpha) / (-np.expm1(-safe / alpha)) ** (alpha + 1.0)
        return _result(np.where(y > 0, values / self._norm, 0.0))

    def _tail(self, x):
        x = np.asarray(x, dtype=float)
        alpha = self.alpha
        with np.errstate(divide="ignore"):
            inner = -np.expm1(-np.maximum(x, 0.0) / alpha)
            values = (inner**-alpha - 1.0) / self._norm
        return np.where(x <= 0, np.inf, np.where(np.isinf(x), 0.0, values))

    def inverse_tail(self, t):
        """Solves ν((x, ∞)) = t for x."""
        t = np.asarray(t, dtype=float)
        alpha = self.alpha
        return -alpha * np.log(-np.expm1(-np.log1p(self._norm * t) / alpha))

    def moment(self, lo, hi, power=0, lo_closed=False, hi_closed=False):
        if power != 0:
            return self._quad_moment(lo, hi, power)
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        upper = np.maximum(hi, lo)
        with np.errstate(invalid="ignore"):
            values = self._tail(lo) - self._tail(upper)
        return _result(np.where(upper <= 0, 0.0, values))

    def sample(self, rng, n, eps):
        if eps <= 0:
            raise DomainError("infinite-activity jumps need a positive cutoff")
        levels = (1.0 - rng.random(n)) * float(self._tail(eps))
        return self.inverse_tail(levels)

    def tail_moment_finite(self, power):
        return True


@dataclass(frozen=True)
class ImageMeasure(_DensityMeasure):
    """Image of a density measure under h (ξ → U) or g (U → ξ)."""

    base: LevyMeasure
    kind: str = "h"

    def __post_init__(self):
        if self.kind not in ("h", "g"):
            raise DomainError(f"unknown jump map {self.kind!r}")

    @property
    def infinite_activity(self):
        return self.base.infinite_activity

    @property
    def finite_variation(self):
        return self.base.finite_variation

    def _forward(self, x):
        return h_map(x) if self.kind == "h" else g_map(x)

    def _backward(self, y):
        return g_map(y) if self.kind == "h" else h_map(y)

    def _pull_back(self, region: Interval) -> Interval:
        # both maps are decreasing, so the ends swap
        lo = float(self._backward(region.hi))
        hi = float(self._backward(region.lo))
        return Interval(min(lo, hi), hi, region.hi_closed, region.lo_closed)

    def density(self, y):
        y = np.asarray(y, dtype=float)
        x = np.asarray(self._backward(y), dtype=float)
        finite = np.isfinite(x)
        safe = np.where(finite, x, 0.0)
        if self.kind == "h":
            jacobian = 1.0 / np.where(y > -1.0, 1.0 + y, 1.0)
        else:
            jacobian = np.exp(-y)
        return _result(np.where(finite, np.asarray(self.base.density(safe)) * jacobian, 0.0))

    def moment(self, lo, hi, power=0, lo_closed=False, hi_closed=False):
        if power == 0:
            return self.base.moment(
                self._backward(hi),
                self._backward(lo),
                0,
                lo_closed=hi_closed,
                hi_closed=lo_closed,
            )

        def single(a, b):
            if a > b:
                return 0.0
            return self.integrate(lambda y: y**power, Interval(a, b, lo_closed, hi_closed))

        return scalarize(single)(lo, hi)

    def integrate(self, fn, region=REAL_LINE, points=(), complex_valued=False):
        pulled = self._pull_back(region)
        mapped = [float(self._backward(p)) for p in points]
        zero = 0j if complex_valued else 0.0

        def pushed(x):
            with np.errstate(over="ignore"):
                y = float(self._forward(x))
            # h overflows far in the left tail, where the base density has underflowed
            return fn(y) if math.isfinite(y) else zero

        return self.base.integrate(
            pushed,
            pulled,
            points=[p for p in mapped if math.isfinite(p)],
            complex_valued=complex_valued,
        )

    def sample(self, rng, n, eps):
        if not self.activity(eps) > 0.0:
            raise DomainError(f"image measure has no jumps of size at least {eps}")
        candidates = [abs(float(self._backward(eps))), abs(float(self._backward(-eps)))]
        base_eps = min(c for c in candidates if math.isfinite(c)) if eps > 0 else 0.0
        accepted: list[np.ndarray] = []
        count = 0
        while count < n:
            draws = self._forward(self.base.sample(rng, max(n - count, 16), base_eps))
            keep = draws[np.abs(draws) >= eps]
            accepted.append(keep)
            count += keep.size
        return np.concatenate(accepted)[:n]

    def image(self):
        return self.base if self.kind == "g" else ImageMeasure(self, "h")

    def preimage(self):
        if self.kind == "h":
            return self.base
        return super().preimage()

    def tail_moment_finite(self, power):
        if self.kind == "h":
            return self.base.left_exponential_moment_finite(power)
        return True


@dataclass(frozen=True)
class Sum(LevyMeasure):
    """Finite sum of Lévy measures."""

    parts: tuple[LevyMeasure, ...] = field(default_factory=tuple)

    @property
    def infinite_activity(self):
        return any(p.infinite_activity for p in self.parts)

    @property
    def finite_variation(self):
        return all(p.finite_variation for p in self.parts)

    @property
    def atoms(self):
        return tuple(a for p in self.parts for a in p.atoms)

    def density(self, y):
        return _result(sum(np.asarray(p.density(y), dtype=float) for p in self.parts))

    def moment(self, lo, hi, power=0, lo_closed=False, hi_closed=False):
        total = np.zeros(np.broadcast(np.asarray(lo), np.asarray(hi)).shape)
        for part in self.parts:
            total = total + np.asarray(part.moment(lo, hi, power, lo_closed, hi_closed))
        return _result(total)

    def integrate(self, fn, region=REAL_LINE, points=(), complex_valued=False):
        return sum(p.integrate(fn, region, points, complex_valued) for p in self.parts)

    def char_integral(self, z):
        return _result(sum(np.asarray(p.char_integral(z)) for p in self.parts))

    def sample(self, rng, n, eps):
        weights = np.array([p.activity(eps) for p in self.parts])
        counts = rng.multinomial(n, weights / weights.sum())
        draws = [p.sample(rng, int(k), eps) for p, k in zip(self.parts, counts) if k > 0]
        merged = np.concatenate(draws) if draws else np.zeros(0)
        return rng.permutation(merged)

    def image(self):
        return combine(*(p.image() for p in self.parts))

    def preimage(self):
        return combine(*(p.preimage() for p in self.parts))

    def tail_moment_finite(self, power):
        return all(p.tail_moment_finite(power) for p in self.parts)

    def left_exponential_moment_finite(self, power):
        return all(p.left_exponential_moment_finite(power) for p in self.parts)


def combine(*measures: LevyMeasure) -> LevyMeasure:
    """Adds measures, merging atoms and dropping null parts."""
    flat: list[LevyMeasure] = []
    for measure in measures:
        flat.extend(measure.parts if isinstance(measure, Sum) else [measure])
    atoms = [m for m in flat if isinstance(m, Atoms)]
    rest = [m for m in flat if not isinstance(m, (Atoms, Zero))]
    if atoms:
        merged: dict[float, float] = {}
        for measure in atoms:
            for pos, mass in measure.atoms:
                merged[pos] = merged.get(pos, 0.0) + mass
        rest.insert(0, Atoms(tuple(merged), tuple(merged.values())))
    if not rest:
        return Zero()
    if len(rest) == 1:
        return rest[0]
    return Sum(tuple(rest))


@dataclass(frozen=True)
class LevyTriplet:
    """Characteristic triplet (σ², ν, γ) with the drift γ⁰ when ν has finite variation."""

    sigma2: float
    nu: LevyMeasure = field(default_factory=Zero)
    gamma: float = 0.0
    gamma0: float | None = None

    def __post_init__(self):
        if self.sigma2 < 0:
            raise DomainError(f"Gaussian variance must be nonnegative, got {self.sigma2}")
        if not self.nu.finite_variation:
            object.__setattr__(self, "gamma0", None)
            return
        derived = self.gamma - self.nu.truncated_mean()
        if self.gamma0 is not None and abs(derived - self.gamma0) > 1e-8 * max(1.0, abs(derived)):
            raise DomainError(f"drift {self.gamma0} inconsistent with gamma {self.gamma}")
        object.__setattr__(self, "gamma0", derived)

    @classmethod
    def from_drift(cls, sigma2: float, nu: LevyMeasure, drift0: float) -> "LevyTriplet":
        """Builds a triplet from the finite-variation drift γ⁰."""
        return cls(sigma2, nu, drift0 + nu.truncated_mean())

    @property
    def is_subordinator(self) -> bool:
        """Nondecreasing paths: no Gaussian part, no negative jumps, drift ≥ 0."""
        if self.sigma2 != 0.0 or self.gamma0 is None:
            return False
        return float(self.nu.moment(-np.inf, 0.0, 0)) == 0.0 and self.gamma0 >= 0.0


class Role(StrEnum):
    XI = "xi"
    ETA = "eta"
    U = "U"
    UTILDE = "Utilde"


class Structure(StrEnum):
    DETERMINISTIC = "deterministic"
    BROWNIAN_DRIFT = "brownian_drift"
    COMPOUND_POISSON_DRIFT = "compound_poisson_drift"
    JUMP_DIFFUSION = "jump_diffusion"
    INFINITE_ACTIVITY = "infinite_activity"


def structure_of(triplet: LevyTriplet) -> Structure:
    """Classifies a triplet for exact simulation."""
    if triplet.nu.infinite_activity:
        return Structure.INFINITE_ACTIVITY
    has_jumps = triplet.nu.total_mass() > 0.0
    if has_jumps:
        return Structure.JUMP_DIFFUSION if triplet.sigma2 > 0 else Structure.COMPOUND_POISSON_DRIFT
    return Structure.BROWNIAN_DRIFT if triplet.sigma2 > 0 else Structure.DETERMINISTIC


@dataclass(frozen=True)
class ProcessSpec:
    """A triplet with its role and structural tag."""

    triplet: LevyTriplet
    role: Role = Role.XI
    tag: Structure | None = None

    def __post_init__(self):
        derived = structure_of(self.triplet)
        if self.tag is None:
            object.__setattr__(self, "tag", derived)
        elif self.tag != derived:
            raise DomainError(f"structural tag {self.tag} does not match triplet ({derived})")


def char_exponent(t: LevyTriplet, z):
    """ψ(z) = iγz - σ²z²/2 + ∫(e^{izx} - 1 - izx1_{|x|≤1}) ν(dx), vectorized in z."""
    z = np.asarray(z, dtype=float)
    return _result(1j * t.gamma * z - 0.5 * t.sigma2 * z**2 + np.asarray(t.nu.char_integral(z)))


def xi_to_U(xi: LevyTriplet) -> LevyTriplet:
    """Triplet of U with E(U) = e^{-ξ}.

    γ_U = -γ_ξ + σ²/2 + ∫[x1_{|x|≤1} + (e^{-x} - 1)1_{x≥-ln 2}] ν_ξ(dx).
    """

    def compensation(x):
        return (x if abs(x) <= 1.0 else 0.0) + (math.expm1(-x) if x >= -LOG2 else 0.0)

    jump_part = xi.nu.integrate(compensation, points=(-1.0, -LOG2, 0.0, 1.0))
    gamma = -xi.gamma + 0.5 * xi.sigma2 + float(jump_part)
    return LevyTriplet(xi.sigma2, xi.nu.image(), gamma)


def U_to_xi(u: LevyTriplet) -> LevyTriplet:
    """Inverse of xi_to_U.

    Raises:
        DomainError: If ν_U charges (-∞, -1].
    """
    if float(u.nu.moment(-np.inf, -1.0, 0, hi_closed=True)) > 0.0:
        raise DomainError("U has jumps of size ≤ -1, which no ξ produces")
    lower, upper = math.exp(-1.0) - 1.0, math.e - 1.0

    def compensation(y):
        return (y if abs(y) <= 1.0 else 0.0) - (math.log1p(y) if lower <= y <= upper else 0.0)

    jump_part = u.nu.integrate(compensation, points=(-1.0, lower, 0.0, 1.0, upper))
    gamma = -u.gamma + 0.5 * u.sigma2 + float(jump_part)
    return LevyTriplet(u.sigma2, u.nu.preimage(), gamma)


def kill(u: LevyTriplet, q: float) -> LevyTriplet:
    """Ũ = (σ_U², ν_U + qδ₋₁, γ_U - q)."""
    if q < 0:
        raise DomainError(f"killing rate must be nonnegative, got {q}")
    if q == 0:
        return u
    return LevyTriplet(u.sigma2, combine(u.nu, Atoms((-1.0,), (q,))), u.gamma - q)


def first_moment(t: LevyTriplet) -> float | None:
    """E L₁ = γ + ∫_{|x|>1} x ν(dx), or None when it diverges."""
    if not t.nu.tail_moment_finite(1):
        return None
    outer = t.nu.moment(1.0, np.inf, 1) + t.nu.moment(-np.inf, -1.0, 1)
    return t.gamma + float(outer)


def mean_var(t: LevyTriplet) -> tuple[float, float] | None:
    """(E L₁, Var L₁), or None when the second tail moment diverges."""
    if not t.nu.tail_moment_finite(2):
        return None
    mean = first_moment(t)
    variance = t.sigma2 + float(t.nu.moment(-np.inf, np.inf, 2))
    return mean, variance


def second_moment_condition(xi: LevyTriplet, eta: LevyTriplet, q: float) -> bool:
    """E U₁² < ∞, E η₁² < ∞ and 2E U₁ + Var U₁ < q."""
    u_moments = mean_var(xi_to_U(xi))
    if u_moments is None or mean_var(eta) is None:
        return False
    mean, variance = u_moments
    return 2.0 * mean + variance < q


def convergence_sufficient(xi: LevyTriplet, eta: LevyTriplet) -> bool:
    """Sufficient condition for V_{0,ξ,η} to exist: E ξ₁ > 0 and E|η₁| < ∞."""
    mean = first_moment(xi)
    if mean is None or mean <= 0.0:
        return False
    return eta.nu.tail_moment_finite(1)
