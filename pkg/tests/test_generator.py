"""Tests for bump test functions and the generator pairing."""

import numpy as np
import pytest

from kef.errors import DomainError
from kef.estimators import EmpiricalLaw
from kef.generator import (
    BumpFunction,
    bump_family,
    generator_apply,
    generator_pairing,
    generator_pairing_with_error,
    generator_report,
)
from kef.levy import kill, xi_to_U
from kef.references import reference
from kef.simulation import SampleBatch, substream


@pytest.fixture()
def uniform_setting():
    """ξ = t, η = t, q = 1: V uniform on [0, 1]."""
    return reference("trivial_kef", {"gamma": 1.0, "q": 1.0})


def test_bump_derivatives_match_finite_differences():
    """Verifies f′ and f″ of a bump against central differences."""
    bump = BumpFunction(center=0.4, radius=0.7, power=4, scale=2.0)
    step = 1e-5
    for x in (-0.1, 0.3, 0.9):
        assert bump.derivative(x) == pytest.approx((bump(x + step) - bump(x - step)) / (2 * step), rel=1e-6)
        assert bump.second_derivative(x) == pytest.approx(
            (bump.derivative(x + step) - bump.derivative(x - step)) / (2 * step), rel=1e-6
        )


def test_bump_vanishes_outside_support():
    """Verifies the compact support and the peak value."""
    bump = BumpFunction(center=1.0, radius=0.5)
    np.testing.assert_allclose(bump(np.array([0.2, 0.5, 1.5, 3.0])), 0.0)
    assert bump(1.0) == 1.0
    assert bump.support == (0.5, 1.5)


def test_bump_validation():
    """Verifies that bumps must be C² and have a positive radius."""
    with pytest.raises(DomainError):
        BumpFunction(power=2)
    with pytest.raises(DomainError):
        BumpFunction(radius=0.0)


def test_bump_family_layout():
    """Verifies evenly spaced centers that keep the bumps inside [lo, hi]."""
    family = bump_family(0.0, 4.0, count=3)
    assert [f.center for f in family] == pytest.approx([1.0, 2.0, 3.0])
    assert all(f.radius == pytest.approx(1.0) for f in family)
    with pytest.raises(DomainError):
        bump_family(1.0, 1.0)


def test_generator_of_unit_drift(uniform_setting):
    """Verifies A f = f′ − xf′ − f + f(0) for ξ = η = t, q = 1."""
    util = kill(xi_to_U(uniform_setting.xi), uniform_setting.q)
    bump = BumpFunction(center=0.5, radius=0.4)
    x = np.array([0.2, 0.5, 0.7])
    expected = bump.derivative(x) - x * bump.derivative(x) - bump(x) + bump(0.0)
    np.testing.assert_allclose(generator_apply(bump, x, uniform_setting.eta, util), expected, atol=1e-14)


def test_pairing_vanishes_for_the_law_of_v(uniform_setting):
    """Verifies ∫ A f dμ = 0 across a family of bumps."""
    report = generator_report(
        bump_family(0.05, 0.95, count=4),
        uniform_setting.xi,
        uniform_setting.eta,
        uniform_setting.q,
        uniform_setting.law,
    )
    assert report.passed, report.to_json()
    assert report.equation == "generator"


def test_pairing_negative_control(uniform_setting):
    """Verifies that Exp(1) in place of the uniform law gives ∫ f(x)(1 − x)e^{−x}dx ≠ 0."""
    wrong = reference("gamma", {"intensity": 1.0, "drift": 1.0}).law
    bump = BumpFunction(center=0.5, radius=0.3)
    value = generator_pairing(bump, uniform_setting.xi, uniform_setting.eta, uniform_setting.q, wrong)
    assert abs(value) > 1e-3


def test_pairing_with_compound_poisson_eta():
    """Verifies the pairing for the Laplace law, whose η jumps need quadrature."""
    built = reference("laplace01")
    for bump in bump_family(-2.0, 2.0, count=3):
        assert abs(generator_pairing(bump, built.xi, built.eta, built.q, built.law)) < 1e-7


def test_pairing_on_exact_draws(uniform_setting):
    """Verifies that the sample pairing is within four standard errors of zero."""
    draws = SampleBatch(uniform_setting.law.sample(substream(5, 0), 20_000))
    bump = BumpFunction(center=0.5, radius=0.4)
    value, error = generator_pairing_with_error(
        bump, uniform_setting.xi, uniform_setting.eta, uniform_setting.q, EmpiricalLaw(draws)
    )
    assert error > 0
    assert abs(value) < 4.0 * error


def test_report_needs_bumps(uniform_setting):
    """Verifies that an empty family is refused."""
    with pytest.raises(DomainError):
        generator_report([], uniform_setting.xi, uniform_setting.eta, uniform_setting.q, uniform_setting.law)
