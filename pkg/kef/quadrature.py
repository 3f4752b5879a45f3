"""Adaptive quadrature over intervals with breakpoints and explicit failure reporting."""

import logging
import math
from collections.abc import Callable, Iterable
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from kef.constants import QUAD_EPSABS, QUAD_EPSREL, QUAD_FAILURE_FACTOR, QUAD_LIMIT
from kef.errors import DomainError, NumericFailure

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Interval:
    """A possibly unbounded interval with open or closed ends."""

    lo: float = -math.inf
    hi: float = math.inf
    lo_closed: bool = True
    hi_closed: bool = True

    def __post_init__(self):
        if self.lo > self.hi:
            raise DomainError(f"empty interval [{self.lo}, {self.hi}]")

    def contains(self, x):
        """Returns a boolean (array) telling which points lie in the interval."""
        x = np.asarray(x, dtype=float)
        above = x >= self.lo if self.lo_closed else x > self.lo
        below = x <= self.hi if self.hi_closed else x < self.hi
        return above & below

    def clip(self, lo: float, hi: float) -> "Interval | None":
        """Intersects with [lo, hi]; returns None when the result is empty."""
        new_lo, new_hi = max(self.lo, lo), min(self.hi, hi)
        if new_lo > new_hi:
            return None
        return Interval(new_lo, new_hi, self.lo_closed, self.hi_closed)


REAL_LINE = Interval()


def _quad_piece(fn: Callable[[float], float], a: float, b: float) -> tuple[float, float]:
    result = integrate.quad(
        fn,
        a,
        b,
        epsabs=QUAD_EPSABS,
        epsrel=QUAD_EPSREL,
        limit=QUAD_LIMIT,
        full_output=1,
    )
    value, abserr = result[0], result[1]
    if len(result) > 3:
        allowed = QUAD_FAILURE_FACTOR * max(QUAD_EPSABS, QUAD_EPSREL * abs(value))
        if not math.isfinite(value) or abserr > allowed:
            raise NumericFailure(
                f"quadrature on [{a:.6g}, {b:.6g}] did not converge: {result[3]}",
                achieved=abserr,
            )
        logger.debug("quad on [%g, %g] flagged but within budget: %s", a, b, result[3])
    return value, abserr


def quad_interval(
    fn: Callable[[float], float | complex],
    lo: float,
    hi: float,
    points: Iterable[float] = (),
    complex_valued: bool = False,
) -> float | complex:
    """Integrates fn over (lo, hi), splitting at breakpoints.

    Infinite endpoints are handed to QUADPACK's own transformation; a doubly
    infinite range is always split at zero.

    Args:
        fn: Scalar integrand.
        lo: Lower limit, may be -inf.
        hi: Upper limit, may be +inf.
        points: Interior points where the integrand has kinks or jumps.
        complex_valued: Integrate real and imaginary parts separately.

    Returns:
        The integral value.

    Raises:
        NumericFailure: If any piece misses its tolerance by a wide margin.
    """
    if not lo < hi:
        return 0j if complex_valued else 0.0
    cuts = {float(p) for p in points if lo < p < hi and math.isfinite(p)}
    if math.isinf(lo) and math.isinf(hi):
        cuts.add(0.0)
    edges = [lo, *sorted(cuts), hi]

    if complex_valued:
        real = quad_interval(lambda x: complex(fn(x)).real, lo, hi, cuts)
        imag = quad_interval(lambda x: complex(fn(x)).imag, lo, hi, cuts)
        return complex(real, imag)

    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        value, _ = _quad_piece(lambda x: float(fn(x)), a, b)
        total += value
    return total


def quad_region(
    fn: Callable[[float], float | complex],
    region: Interval,
    points: Iterable[float] = (),
    complex_valued: bool = False,
) -> float | complex:
    """Integrates fn against Lebesgue measure on an interval (ends are null sets)."""
    return quad_interval(fn, region.lo, region.hi, points, complex_valued)


def scalarize(fn: Callable[..., float]) -> Callable:
    """Lifts a scalar-only function of one or more arguments to broadcast numpy arrays."""
    vectorized = np.vectorize(fn, otypes=[float])

    def wrapper(*args):
        out = vectorized(*args)
        return float(out) if np.ndim(out) == 0 else out

    return wrapper
