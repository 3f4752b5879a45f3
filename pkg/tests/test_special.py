"""Tests for the Mittag-Leffler, hypergeometric and Bessel helpers."""

import math

import numpy as np
import pytest
from scipy import special as sp

from kef.errors import DomainError
from kef.special import (
    bessel_k_half,
    gauss_2f1,
    mittag_leffler,
    mittag_leffler_triple,
    ml_density,
    ml_density_limit,
)


def test_mittag_leffler_one_is_exponential():
    """Verifies E_1(x) = e^x."""
    x = np.array([-3.0, -0.5, 0.0])
    np.testing.assert_allclose(mittag_leffler(1.0, x), np.exp(x), rtol=1e-14)


@pytest.mark.parametrize("t", [0.1, 0.5, 1.0, 2.0, 4.5, 8.0, 30.0])
def test_mittag_leffler_half_matches_erfcx(t):
    """Verifies E_{1/2}(−t) = e^{t²}erfc(t) across the series and integral branches."""
    assert mittag_leffler(0.5, -t) == pytest.approx(sp.erfcx(t), rel=1e-8)


@pytest.mark.parametrize("t", [0.0, 0.5, 3.0, 10.0])
def test_mittag_leffler_triple_derivatives(t):
    """Verifies (L, L′, L″) against derivatives of erfcx for α = 1/2."""
    value = sp.erfcx(t)
    first = 2.0 * t * value - 2.0 / math.sqrt(math.pi)
    second = 2.0 * value + 2.0 * t * first
    got = mittag_leffler_triple(0.5, t)
    assert got[0] == pytest.approx(value, rel=1e-8)
    assert got[1] == pytest.approx(first, rel=1e-7, abs=1e-10)
    assert got[2] == pytest.approx(second, rel=1e-7, abs=1e-10)


def test_mittag_leffler_rejects_positive_argument():
    """Verifies that E_α is only evaluated on the nonpositive axis."""
    with pytest.raises(DomainError):
        mittag_leffler(0.5, 1.0)
    with pytest.raises(DomainError):
        mittag_leffler(1.5, -1.0)


def test_ml_density_half_is_half_gaussian():
    """Verifies f_ML(s) = e^{−s²/4}/√π for α = 1/2 inside the series range."""
    s = np.array([0.25, 1.5, 3.0])
    np.testing.assert_allclose(ml_density(0.5, s), np.exp(-(s**2) / 4.0) / math.sqrt(math.pi), rtol=1e-9)


def test_ml_density_refuses_beyond_limit():
    """Verifies that the density series is not used past its reliable range."""
    limit = ml_density_limit(0.5)
    assert limit > 3.0
    with pytest.raises(DomainError):
        ml_density(0.5, limit + 10.0)


@pytest.mark.parametrize("z", [0.5, -0.95, -3.0, 0.3 + 0.4j])
def test_gauss_2f1_logarithm(z):
    """Verifies ₂F₁(1, 1; 2; z) = −ln(1 − z)/z on both sides of the series radius."""
    expected = -np.log(1.0 - complex(z)) / complex(z)
    assert gauss_2f1(1.0, 1.0, 2.0, z) == pytest.approx(expected, rel=1e-10)


def test_gauss_2f1_pfaff_branch_with_unequal_parameters():
    """Verifies ₂F₁(1/2, 1; 3/2; −z²) = arctan(z)/z after the Pfaff transformation."""
    z = 2.0
    assert gauss_2f1(0.5, 1.0, 1.5, -z * z).real == pytest.approx(math.atan(z) / z, rel=1e-10)


def test_gauss_2f1_rejects_pole():
    """Verifies that c at a nonpositive integer is refused."""
    with pytest.raises(DomainError):
        gauss_2f1(1.0, 1.0, -1.0, 0.5)


@pytest.mark.parametrize("n", range(5))
def test_bessel_k_half_matches_scipy(n):
    """Verifies the upward recursion against scipy's K_ν."""
    z = np.array([0.3, 1.0, 5.0])
    np.testing.assert_allclose(bessel_k_half(n, z), sp.kv(n + 0.5, z), rtol=1e-12)
