"""Auxiliary tail functions B and S built from the Lévy measures of η and Ũ.

All functions are vectorized in their argument. The Ũ-functions live on
[0, ∞) and are evaluated at ratios z/x with x in the support of V.
"""

import logging
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np

from kef.errors import DomainError
from kef.levy import LevyMeasure, LevyTriplet, _result

logger = logging.getLogger(__name__)


def _piecewise(z, negative: Callable | None, positive: Callable | None, at_zero: float = 0.0):
    """Evaluates each branch only on its own side of zero."""
    z = np.asarray(z, dtype=float)
    out = np.full(z.shape, at_zero)
    neg, pos = z < 0, z > 0
    if negative is not None and neg.any():
        out[neg] = negative(z[neg])
    if positive is not None and pos.any():
        out[pos] = positive(z[pos])
    return _result(out)


def _split_at_one(w, below: Callable, above: Callable):
    """Branches of a Ũ-function: below on [0, 1), zero at 1, above on (1, ∞)."""
    w = np.asarray(w, dtype=float)
    if np.any(w < 0):
        raise DomainError("Ũ auxiliary functions are defined on [0, ∞)")
    out = np.zeros(w.shape)
    low, high = w < 1.0, w > 1.0
    if low.any():
        out[low] = below(w[low])
    if high.any():
        out[high] = above(w[high])
    return _result(out)


def integrated_tail_plus(nu: LevyMeasure, m):
    """∫₀^m ν((max(s, 1), ∞)) ds for m ≥ 0."""
    m = np.asarray(m, dtype=float)
    flat = np.atleast_1d(m)
    out = np.minimum(flat, 1.0) * float(nu.tail_plus(1.0))
    far = flat > 1.0
    if far.any():
        mf = flat[far]
        inner = nu.moment(1.0, mf, 1, hi_closed=True) - nu.moment(1.0, mf, 0, hi_closed=True)
        out[far] += np.asarray(inner) + (mf - 1.0) * np.asarray(nu.tail_plus(mf))
    return _result(out.reshape(m.shape))


def integrated_tail_minus(nu: LevyMeasure, m):
    """∫₀^m ν((−∞, −max(s, 1))) ds for m ≥ 0."""
    m = np.asarray(m, dtype=float)
    flat = np.atleast_1d(m)
    out = np.minimum(flat, 1.0) * float(nu.tail_minus(1.0))
    far = flat > 1.0
    if far.any():
        mf = flat[far]
        inner = -nu.moment(-mf, -1.0, 1, lo_closed=True) - nu.moment(-mf, -1.0, 0, lo_closed=True)
        out[far] += np.asarray(inner) + (mf - 1.0) * np.asarray(nu.tail_minus(mf))
    return _result(out.reshape(m.shape))


@dataclass(frozen=True)
class AuxFunctions:
    """B, S and their integrated, finite-variation and first-moment variants.

    The fv and fm fields are None when the measures do not allow them.
    """

    b_eta: Callable
    s_eta: Callable
    b_util: Callable
    s_util: Callable
    ib_eta: Callable
    ib_util: Callable
    b_eta_fv: Callable | None = None
    b_util_fv: Callable | None = None
    s_eta_fm: Callable | None = None
    s_util_fm: Callable | None = None

    def require_fv(self) -> tuple[Callable, Callable]:
        """Raises:
        DomainError: If either jump measure has infinite variation.
        """
        if self.b_eta_fv is None or self.b_util_fv is None:
            raise DomainError("finite-variation auxiliary functions need ∫|x|ν(dx) < ∞ near zero")
        return self.b_eta_fv, self.b_util_fv

    def require_fm(self) -> tuple[Callable, Callable]:
        """Raises:
        DomainError: If either process lacks a finite first moment.
        """
        if self.s_eta_fm is None or self.s_util_fm is None:
            raise DomainError("first-moment auxiliary functions need E|η₁| and E|Ũ₁| finite")
        return self.s_eta_fm, self.s_util_fm


def _b_eta(nu):
    return lambda z: _piecewise(
        z,
        lambda x: -np.asarray(nu.tail_minus(np.maximum(-x, 1.0))),
        lambda x: np.asarray(nu.tail_plus(np.maximum(x, 1.0))),
    )


def _s_eta(nu):
    def negative(z):
        return z * np.asarray(nu.moment(-1.0, z, 0, lo_closed=True)) - np.asarray(nu.moment(-1.0, z, 1, lo_closed=True))

    def positive(z):
        upper = np.maximum(z, 1.0)
        return np.asarray(nu.moment(z, upper, 1, hi_closed=True)) - z * np.asarray(
            nu.moment(z, upper, 0, hi_closed=True)
        )

    return lambda z: _piecewise(z, lambda x: negative(np.maximum(x, -1.0)), positive)


def _b_util(nu):
    return lambda w: _split_at_one(w, lambda x: np.zeros(x.shape), lambda x: np.asarray(nu.tail_plus(np.maximum(x - 1.0, 1.0))))


def _s_util(nu):
    def below(w):
        edge = w - 1.0
        return edge * np.asarray(nu.moment(-1.0, edge, 0, lo_closed=True, hi_closed=True)) - np.asarray(
            nu.moment(-1.0, edge, 1, lo_closed=True, hi_closed=True)
        )

    def above(w):
        edge = np.minimum(w - 1.0, 1.0)
        return np.asarray(nu.moment(edge, 1.0, 1, hi_closed=True)) - edge * np.asarray(
            nu.moment(edge, 1.0, 0, hi_closed=True)
        )

    return lambda w: _split_at_one(w, below, above)


def _ib_eta(nu):
    return lambda z: _piecewise(
        z,
        lambda x: np.asarray(integrated_tail_minus(nu, -x)),
        lambda x: np.asarray(integrated_tail_plus(nu, x)),
    )


def _ib_util(nu):
    def single(w):
        w = np.asarray(w, dtype=float)
        if np.any(w < 1.0):
            raise DomainError("∫₁^w B_Ũ needs w ≥ 1")
        return integrated_tail_plus(nu, w - 1.0)

    return single


def _b_eta_fv(nu):
    return lambda z: _piecewise(
        z,
        lambda x: -np.asarray(nu.tail_minus(-x)),
        lambda x: np.asarray(nu.tail_plus(x)),
    )


def _b_util_fv(nu):
    return lambda w: _split_at_one(
        w,
        lambda x: -np.asarray(nu.tail_minus(1.0 - x)),
        lambda x: np.asarray(nu.tail_plus(x - 1.0)),
    )


def _s_eta_fm(nu):
    def negative(z):
        return z * np.asarray(nu.moment(-np.inf, z, 0)) - np.asarray(nu.moment(-np.inf, z, 1))

    def positive(z):
        return np.asarray(nu.moment(z, np.inf, 1)) - z * np.asarray(nu.moment(z, np.inf, 0))

    return lambda z: _piecewise(z, negative, positive)


def _s_util_fm(nu):
    def below(w):
        edge = w - 1.0
        return edge * np.asarray(nu.moment(-np.inf, edge, 0, hi_closed=True)) - np.asarray(
            nu.moment(-np.inf, edge, 1, hi_closed=True)
        )

    def above(w):
        edge = w - 1.0
        return np.asarray(nu.moment(edge, np.inf, 1)) - edge * np.asarray(nu.moment(edge, np.inf, 0))

    return lambda w: _split_at_one(w, below, above)


def build_aux(eta: LevyTriplet, util: LevyTriplet) -> AuxFunctions:
    """Builds the auxiliary functions of η and the killed Ũ.

    Finite-variation variants are attached when both jump measures have
    finite variation, first-moment variants when both have a finite first
    tail moment.
    """
    nu_eta, nu_util = eta.nu, util.nu
    fv = nu_eta.finite_variation and nu_util.finite_variation
    fm = nu_eta.tail_moment_finite(1) and nu_util.tail_moment_finite(1)
    logger.debug("auxiliary functions: finite variation=%s, first moments=%s", fv, fm)
    return AuxFunctions(
        b_eta=_b_eta(nu_eta),
        s_eta=_s_eta(nu_eta),
        b_util=_b_util(nu_util),
        s_util=_s_util(nu_util),
        ib_eta=_ib_eta(nu_eta),
        ib_util=_ib_util(nu_util),
        b_eta_fv=_b_eta_fv(nu_eta) if fv else None,
        b_util_fv=_b_util_fv(nu_util) if fv else None,
        s_eta_fm=_s_eta_fm(nu_eta) if fm else None,
        s_util_fm=_s_util_fm(nu_util) if fm else None,
    )
