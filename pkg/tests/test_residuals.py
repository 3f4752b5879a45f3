"""Tests for the residual operators of the distributional equations."""

import math

import numpy as np
import pytest
from scipy import special

from kef.errors import DomainError, PreconditionError
from kef.estimators import EmpiricalLaw
from kef.levy import Atoms, CompoundPoissonExponential, LevyTriplet, ProcessSpec, Role, Zero
from kef.references import reference
from kef.residuals import (
    RESIDUALS,
    ResidualReport,
    default_grid,
    integrated_equation_gap,
    mc_budget,
    moment_identity,
    mu_profile,
    ode_residual_delay,
    ode_residual_exp_jumps,
    residual_cf,
    residual_density_diff,
    residual_density_laplace,
    residual_laplace,
    residual_mu,
    residual_mu_fm,
    residual_mu_fv,
)
from kef.simulation import SampleBatch, SimConfig, batch, substream

U_GRID = np.linspace(0.1, 10.0, 12)


def _check(equation, name, grid, params=None, **kwargs):
    built = reference(name, params)
    return RESIDUALS[equation](grid, built.xi, built.eta, built.q, built.law, **kwargs)


def test_default_grid_avoids_kinks():
    """Verifies the mirrored geometric grid and that no point sits on ±1."""
    grid = default_grid(0.1, 10.0, 3)
    assert grid.size == 6
    np.testing.assert_allclose(grid[3:], -grid[2::-1])
    assert not np.any(np.isclose(np.abs(grid), 1.0))
    assert np.all(default_grid(symmetric=False) > 0)
    with pytest.raises(DomainError):
        default_grid(0.0, 1.0)


def test_report_norms_and_verdict():
    """Verifies sup and trapezoidal L¹ norms and the pass rule."""
    report = ResidualReport("mu", np.array([0.0, 1.0, 2.0]), np.array([0.0, -2.0, 0.0]), tolerance=1.0, budget=0.5)
    assert report.norm_sup == 2.0
    assert report.norm_l1 == pytest.approx(2.0)
    assert not report.passed
    payload = report.to_dict()
    assert payload["residual"] == [0.0, 2.0, 0.0]
    assert payload["pass"] is False


def test_budget_is_zero_for_closed_forms():
    """Verifies that only empirical laws get a Monte Carlo allowance."""
    assert mc_budget(reference("laplace01").law, [1.0]) == 0.0
    empirical = EmpiricalLaw(SampleBatch(np.array([1.0, 2.0])))
    assert mc_budget(empirical, [0.1, -0.2]) == pytest.approx(1.2)


@pytest.mark.parametrize(
    ("name", "params"),
    [
        ("trivial_kef", {"gamma": 1.0, "q": 1.0}),
        ("cf_bm_eta", {"gamma_xi": 1.0, "q": 2.0}),
        ("cf_bm_eta", {"gamma_xi": 0.5, "sigma_eta": 2.0, "q": 2.0}),
        ("cf_bessel", {}),
        ("cf_bessel", {"sigma_xi": 0.8, "sigma_eta": 1.5}),
    ],
)
def test_cf_equation_closed_forms(name, params):
    """Verifies that the CF equation holds for every closed-form CF."""
    report = _check("cf", name, U_GRID, params)
    assert report.passed, report.to_json()
    assert report.norm_sup < 1e-9


def test_cf_equation_negative_control():
    """Verifies that an Exp(1) CF substituted into the unit-drift setting leaves a large residual."""
    trivial = reference("trivial_kef", {"gamma": 1.0, "q": 1.0})
    wrong = reference("gamma", {"intensity": 1.0, "drift": 1.0, "a": 1.0}).law
    report = residual_cf(U_GRID, trivial.xi, trivial.eta, trivial.q, wrong)
    assert not report.passed
    assert report.norm_sup > 0.05
    # the residual is −iu/(1 − iu)²
    np.testing.assert_allclose(report.magnitudes, U_GRID / (1.0 + U_GRID**2), rtol=1e-8)


def test_cf_equation_on_exact_draws():
    """Verifies the expectation form with draws from the exact law within its Monte Carlo budget."""
    built = reference("trivial_kef", {"gamma": 1.0, "q": 1.0})
    draws = SampleBatch(built.law.sample(substream(7, 0), 20_000))
    report = residual_cf(U_GRID[:4], built.xi, built.eta, built.q, EmpiricalLaw(draws))
    assert report.budget > 0
    assert report.passed, report.to_json()


def test_cf_equation_needs_second_moment():
    """Verifies the E V² precondition when the law does not assert it."""
    built = reference("uniform_over_2exp")
    with pytest.raises(PreconditionError):
        residual_cf(U_GRID, built.xi, built.eta, built.q, built.law)


def test_laplace_equation_mittag_leffler():
    """Verifies the Laplace equation for the ML subordinator with infinite activity."""
    report = _check("laplace", "mittag_leffler", U_GRID)
    assert report.passed, report.to_json()


def test_laplace_equation_gamma():
    """Verifies the Laplace equation for compound Poisson η with q = 0."""
    report = _check("laplace", "gamma", U_GRID, {"intensity": 2.0, "drift": 1.0, "a": 3.0})
    assert report.passed, report.to_json()


def test_laplace_equation_gates():
    """Verifies that η must be a subordinator and u must be positive."""
    bm = reference("potential_bm")
    with pytest.raises(DomainError):
        residual_laplace(U_GRID, bm.xi, bm.eta, bm.q, bm.law)
    ml = reference("mittag_leffler")
    with pytest.raises(DomainError):
        residual_laplace([-1.0], ml.xi, ml.eta, ml.q, ml.law)


def test_density_laplace_uniform_over_exponential():
    """Verifies the density form of the Laplace equation for ξ = 2B, η = t, q = 2."""
    report = _check("density-laplace", "uniform_over_2exp", default_grid(0.05, 5.0, 12, symmetric=False))
    assert report.passed, report.to_json()
    assert report.notes


def test_density_laplace_gamma():
    """Verifies the density form with compound Poisson η and its jump integrals."""
    report = _check("density-laplace", "gamma", default_grid(0.05, 5.0, 8, symmetric=False), {"intensity": 2.0})
    assert report.passed, report.to_json()


def test_density_laplace_needs_density():
    """Verifies that a law given by its Laplace transform only is refused."""
    ml = reference("mittag_leffler", {"alpha": 0.3})
    with pytest.raises(DomainError):
        residual_density_laplace([1.0], ml.xi, ml.eta, ml.q, ml.law)


def test_mu_equation_potential_of_brownian_motion():
    """Verifies that G ≡ σ√(2q)/4 for σB stopped at an independent exponential time."""
    grid = default_grid(0.05, 5.0, 8)
    report = _check("mu", "potential_bm", grid, {"q": 2.0, "sigma": 1.0})
    assert report.passed, report.to_json()
    assert report.K == pytest.approx(0.5, abs=1e-7)


def test_mu_equation_laplace():
    """Verifies the general μ equation for the q = 0 Laplace law."""
    report = _check("mu", "laplace01", default_grid(0.05, 5.0, 8))
    assert report.passed, report.to_json()


def test_mu_fm_explicit_constant():
    """Verifies the first-moment form with the closed-form K = ½ for the Laplace law."""
    report = _check("mu-fm", "laplace01", default_grid(0.05, 5.0, 8))
    assert report.K == pytest.approx(0.5, abs=1e-8)
    assert report.passed, report.to_json()


def test_mu_fm_refuses_explicit_constant_without_negative_mean():
    """Verifies that the closed-form K needs E Ũ₁ < 0."""
    xi = LevyTriplet(0.0, Zero(), -1.0)
    eta = reference("laplace01").eta
    with pytest.raises(DomainError):
        residual_mu_fm([1.0], xi, eta, 0.0, reference("laplace01").law, use_explicit_k=True)


def test_mu_fv_laplace():
    """Verifies the finite-variation μ equation for the Laplace law to 1e-9."""
    report = _check("mu-fv", "laplace01", default_grid(0.05, 5.0, 12))
    assert report.norm_sup < 1e-9
    assert report.passed


def test_mu_fv_refuses_gaussian_parts():
    """Verifies the finite-variation gate."""
    bm = reference("potential_bm")
    with pytest.raises(DomainError):
        residual_mu_fv([1.0], bm.xi, bm.eta, bm.q, bm.law)


def test_mu_profile_derivative_is_fv_residual():
    """Verifies G′ = −R_FV on a law that solves neither equation."""
    setting = reference("laplace01")
    wrong = reference("potential_bm", {"q": 2.0}).law
    step = 1e-4
    for z in (-1.6, 0.7, 2.3):
        left, right = mu_profile([z - step, z + step], setting.xi, setting.eta, setting.q, wrong)
        fv = residual_mu_fv([z], setting.xi, setting.eta, setting.q, wrong, tol=1.0)
        assert abs(fv.residuals[0]) > 1e-3
        assert (right - left) / (2.0 * step) == pytest.approx(-fv.residuals[0], abs=1e-3)


def test_mu_profile_derivative_with_large_negative_jumps():
    """Verifies G′ = −R_FV on both sides of zero when ξ jumps by −1, where Ũ has a ratio term."""
    xi = LevyTriplet.from_drift(0.0, Atoms((-1.0,), (0.5,)), 1.0)
    eta = reference("laplace01").eta
    wrong = reference("potential_bm", {"q": 2.0}).law
    step = 1e-4
    for z in (-2.0, -0.7, 0.7, 2.0):
        left, right = mu_profile([z - step, z + step], xi, eta, 1.0, wrong)
        fv = residual_mu_fv([z], xi, eta, 1.0, wrong, tol=1.0)
        assert (right - left) / (2.0 * step) == pytest.approx(-fv.residuals[0], abs=1e-3)


def test_mu_equations_skip_zero():
    """Verifies that z = 0 is never a grid point of the μ equations."""
    built = reference("laplace01")
    with pytest.raises(DomainError):
        residual_mu_fv([0.0], built.xi, built.eta, built.q, built.law)


@pytest.mark.parametrize("q", [0.5, 2.0])
def test_density_diff_potential_of_brownian_motion(q):
    """Verifies the differentiated density equation with a Gaussian η."""
    report = _check("density-diff", "potential_bm", default_grid(0.05, 5.0, 12), {"q": q})
    assert report.passed, report.to_json()


def test_density_diff_needs_gaussian_part():
    """Verifies that the differentiated equation refuses σ_η² + σ_Ũ² = 0."""
    built = reference("laplace01")
    with pytest.raises(DomainError):
        residual_density_diff([1.0], built.xi, built.eta, built.q, built.law)


def test_moment_identity_trivial():
    """Verifies E(V)E(Ũ₁) + E(η₁) = 0 for V uniform on [0, 1]."""
    built = reference("trivial_kef", {"gamma": 1.0, "q": 1.0})
    value, error = moment_identity(built.law, built.xi, built.eta, built.q)
    assert value == pytest.approx(0.0, abs=1e-9)
    assert error == 0.0


def test_integrated_equation_gap_does_not_vanish():
    """Verifies the integrated equation for ξ = t leaves −E₁(v)/4 at v = 1 for the Laplace law."""
    built = reference("laplace01")
    value = integrated_equation_gap(1.0, built.xi, built.eta, built.law)
    assert value == pytest.approx(-0.25 * special.exp1(1.0), abs=1e-6)
    with pytest.raises(DomainError):
        integrated_equation_gap(1.0, LevyTriplet(1.0), built.eta, built.law)


def test_delay_equation_without_jumps():
    """Verifies the delay equation with c = 0 on the Brownian potential law, and that c > 0 breaks it."""
    law = reference("potential_bm", {"q": 2.0, "sigma": 1.0}).law
    grid = [-2.0, 0.5, 1.5]
    report = ode_residual_delay(grid, law, q=2.0, c=0.0, sigma_eta=1.0)
    assert report.passed, report.to_json()
    assert report.norm_sup < 1e-5
    assert not ode_residual_delay(grid, law, q=2.0, c=1.0, sigma_eta=1.0, tol=1e-5).passed


def _draws(xi, eta, q, n=40_000):
    return EmpiricalLaw(batch(n, "direct", ProcessSpec(xi), ProcessSpec(eta, Role.ETA), q, SimConfig(master_seed=11)))


@pytest.mark.slow
def test_delay_equation_on_simulated_draws():
    """Verifies the delay equation for Poisson ξ with unit jumps on a KDE of simulated draws."""
    c, q = 1.0, 1.0
    xi = LevyTriplet.from_drift(0.0, Atoms((1.0,), (c,)), 0.0)
    law = _draws(xi, LevyTriplet(1.0), q)
    report = ode_residual_delay([-1.5, -0.8, 0.6, 1.0, 1.8], law, q=q, c=c, sigma_eta=1.0)
    assert math.isfinite(report.budget)
    assert report.budget > 0
    assert report.passed, report.to_json()


@pytest.mark.slow
def test_third_order_equation_on_simulated_draws():
    """Verifies the third-order equation for exponential ξ jumps on a KDE of simulated draws."""
    q, gamma_eta = 1.0, 0.5
    xi = LevyTriplet.from_drift(0.0, CompoundPoissonExponential(1.0, 1.0), 0.0)
    eta = LevyTriplet.from_drift(1.0, Zero(), gamma_eta)
    law = _draws(xi, eta, q)
    report = ode_residual_exp_jumps([-1.2, -0.6, 0.6, 1.2, 2.0], law, q, 1.0, gamma_eta)
    assert math.isfinite(report.budget)
    assert report.budget > 0
    assert report.passed, report.to_json()


def test_third_order_equation_skips_zero():
    """Verifies that the third-order ODE is not evaluated at z = 0."""
    with pytest.raises(DomainError):
        ode_residual_exp_jumps([0.0], reference("laplace01").law, 1.0, 1.0, 0.0)


def test_registry_covers_pointwise_equations():
    """Verifies the pointwise residuals are registered by name."""
    assert set(RESIDUALS) == {"cf", "laplace", "density-laplace", "mu", "mu-fm", "mu-fv", "density-diff"}
    assert math.isfinite(residual_mu(default_grid(0.5, 2.0, 2), *_args("potential_bm")).norm_sup)


def _args(name):
    built = reference(name)
    return built.xi, built.eta, built.q, built.law
