"""Generator of the killed process Ṽ and its pairing with a candidate invariant law."""

import logging
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from kef.constants import DEFAULT_TOLERANCES
from kef.errors import DomainError
from kef.estimators import LawRep, integrate_with_error
from kef.levy import TRUNCATION_POINTS, Atoms, LevyMeasure, LevyTriplet, Zero, kill, xi_to_U
from kef.quadrature import scalarize
from kef.residuals import ResidualReport, mc_budget

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BumpFunction:
    """f(x) = scale·(1 − ((x − c)/r)²)^p on |x − c| < r, zero elsewhere; C² for p ≥ 3."""

    center: float = 1.0
    radius: float = 1.0
    power: int = 4
    scale: float = 1.0

    def __post_init__(self):
        if self.radius <= 0:
            raise DomainError(f"bump radius must be positive, got {self.radius}")
        if self.power < 3:
            raise DomainError(f"bump power below 3 is not twice differentiable, got {self.power}")

    @property
    def support(self) -> tuple[float, float]:
        return self.center - self.radius, self.center + self.radius

    def _parts(self, x):
        s = (np.asarray(x, dtype=float) - self.center) / self.radius
        inside = np.abs(s) < 1.0
        g = np.where(inside, 1.0 - s * s, 0.0)
        return s, inside, g

    def __call__(self, x):
        s, inside, g = self._parts(x)
        out = np.where(inside, self.scale * g**self.power, 0.0)
        return out.item() if out.ndim == 0 else out

    def derivative(self, x):
        s, inside, g = self._parts(x)
        p, r = self.power, self.radius
        out = np.where(inside, self.scale * p * g ** (p - 1) * (-2.0 * s / r), 0.0)
        return out.item() if out.ndim == 0 else out

    def second_derivative(self, x):
        s, inside, g = self._parts(x)
        p, r = self.power, self.radius
        values = p * (p - 1) * g ** (p - 2) * (4.0 * s * s / r**2) - 2.0 * p * g ** (p - 1) / r**2
        out = np.where(inside, self.scale * values, 0.0)
        return out.item() if out.ndim == 0 else out


def _atomic(nu: LevyMeasure) -> bool:
    return isinstance(nu, (Atoms, Zero))


def _jump_part(nu: LevyMeasure, f: BumpFunction, x, multiplicative: bool):
    """∫ (f(x + j) − f(x) − j f′(x)1_{|y|≤1}) ν(dy) with j = xy (multiplicative) or j = y."""
    x = np.asarray(x, dtype=float)
    fx, dfx = np.asarray(f(x)), np.asarray(f.derivative(x))
    if _atomic(nu):
        total = np.zeros(x.shape)
        for y, mass in nu.atoms:
            step = x * y if multiplicative else np.full(x.shape, y)
            compensator = step * dfx if abs(y) <= 1.0 else 0.0
            total = total + mass * (np.asarray(f(x + step)) - fx - compensator)
        return total.item() if total.ndim == 0 else total

    lo, hi = f.support

    def single(point):
        value, slope = float(f(point)), float(f.derivative(point))

        def integrand(y):
            step = point * y if multiplicative else y
            compensator = step * slope if abs(y) <= 1.0 else 0.0
            return float(f(point + step)) - value - compensator

        if multiplicative and point != 0:
            edges = ((lo - point) / point, (hi - point) / point)
        else:
            edges = (lo - point, hi - point)
        return nu.integrate(integrand, points=(*TRUNCATION_POINTS, *edges))

    if multiplicative:
        # the Ũ-jump term vanishes at x = 0
        return scalarize(lambda p: 0.0 if p == 0 else single(p))(x)
    return scalarize(single)(x)


def generator_apply(f: BumpFunction, x, eta: LevyTriplet, util: LevyTriplet):
    """A^Ṽ f(x) = A^η f(x) + xf′γ_Ũ + ½x²f″σ² + ∫(f(x + xy) − f − xyf′1_{[−1,1]}(y)) ν_Ũ(dy)."""
    x = np.asarray(x, dtype=float)
    df, d2f = np.asarray(f.derivative(x)), np.asarray(f.second_derivative(x))
    out = (
        eta.gamma * df
        + 0.5 * eta.sigma2 * d2f
        + np.asarray(_jump_part(eta.nu, f, x, multiplicative=False))
        + x * df * util.gamma
        + 0.5 * x * x * d2f * util.sigma2
        + np.asarray(_jump_part(util.nu, f, x, multiplicative=True))
    )
    return out.item() if out.ndim == 0 else out


def generator_pairing_with_error(
    f: BumpFunction, xi: LevyTriplet, eta: LevyTriplet, q: float, law: LawRep
) -> tuple[float, float]:
    """(∫ A^Ṽ f dμ, standard error)."""
    util = kill(xi_to_U(xi), q)
    lo, hi = f.support
    points = (lo, hi, f.center)
    if not _atomic(util.nu) or not _atomic(eta.nu):
        logger.debug("generator pairing with quadrature inside quadrature for %s", law.name)
    return integrate_with_error(law, lambda x: generator_apply(f, x, eta, util), points=points)


def generator_pairing(f: BumpFunction, xi: LevyTriplet, eta: LevyTriplet, q: float, law: LawRep) -> float:
    """∫ A^Ṽ f dμ; zero for every test function when μ is the law of V."""
    return generator_pairing_with_error(f, xi, eta, q, law)[0]


def generator_report(
    bumps: Sequence[BumpFunction],
    xi: LevyTriplet,
    eta: LevyTriplet,
    q: float,
    law: LawRep,
    tol: float | None = None,
) -> ResidualReport:
    """Pairings of a family of bumps, indexed by bump center."""
    if not bumps:
        raise DomainError("generator check needs at least one test function")
    rows = [generator_pairing_with_error(f, xi, eta, q, law) for f in bumps]
    return ResidualReport(
        "generator",
        np.array([f.center for f in bumps]),
        np.array([r[0] for r in rows]),
        DEFAULT_TOLERANCES["generator"] if tol is None else tol,
        mc_budget(law, [max(r[1] for r in rows)]),
        notes=[f"bumps of radius {bumps[0].radius:g} and power {bumps[0].power}"],
    )


def bump_family(lo: float, hi: float, count: int = 5, power: int = 4) -> list[BumpFunction]:
    """Evenly spaced bumps covering [lo, hi], neighbours overlapping by half."""
    if not hi > lo or count < 1:
        raise DomainError(f"bump family needs hi > lo and count >= 1, got [{lo}, {hi}], {count}")
    radius = (hi - lo) / (count + 1)
    centers = np.linspace(lo + radius, hi - radius, count)
    return [BumpFunction(float(c), radius, power) for c in centers]
