"""Tests for the samplers, batches and GOU paths."""

import math

import numpy as np
import pytest
from scipy import integrate as sp_integrate

from kef.errors import ConfigError, DomainError
from kef.estimators import emp_laplace, ks, ks_two_sample
from kef.levy import (
    Atoms,
    LevyTriplet,
    MLSubordinator,
    ProcessSpec,
    Role,
    Zero,
)
from kef.references import gamma_law, mittag_leffler_law, uniform_over_2exp
from kef.simulation import (
    BiasNote,
    FixedT,
    SampleBatch,
    SimConfig,
    batch,
    resolve_workers,
    sample_increment,
    simulate_gou_path,
    simulate_kef_direct,
    simulate_kef_sde,
    splitmix64,
    substream,
    truncation_bias,
)
from kef.special import mittag_leffler

SEED = 12345


def _drift(rate):
    return LevyTriplet.from_drift(0.0, Zero(), rate)


@pytest.fixture()
def time_eta():
    """η_t = t."""
    return ProcessSpec(_drift(1.0), Role.ETA)


@pytest.fixture()
def cfg():
    """Default killed-horizon settings with a fixed seed."""
    return SimConfig(master_seed=SEED)


def test_splitmix_streams_differ_by_index():
    """Verifies that substream seeds depend on the draw index."""
    seeds = {splitmix64(SEED, i) for i in range(100)}
    assert len(seeds) == 100
    assert all(0 <= s < 2**64 for s in seeds)


def test_deterministic_increment():
    """Verifies that a pure drift increment is γ⁰·dt with no jumps."""
    inc = sample_increment(ProcessSpec(_drift(0.7)), 0.5, 0.0, substream(SEED, 0))
    assert inc.value == pytest.approx(0.35, abs=1e-15)
    assert inc.jump_times.size == 0


def test_brownian_increment_moments():
    """Verifies mean 0 and variance 1 of unit Brownian increments within 4 standard errors."""
    rng = substream(SEED, 1)
    spec = ProcessSpec(LevyTriplet(1.0))
    n = 20_000
    draws = np.array([sample_increment(spec, 1.0, 0.0, rng).value for _ in range(n)])
    assert abs(draws.mean()) < 4.0 / math.sqrt(n)
    assert abs(draws.var() - 1.0) < 4.0 * math.sqrt(2.0 / n)


def test_infinite_activity_needs_cutoff():
    """Verifies that eps = 0 is a config error for infinite activity."""
    spec = ProcessSpec(LevyTriplet.from_drift(0.0, MLSubordinator(0.5), 0.0))
    with pytest.raises(ConfigError):
        sample_increment(spec, 0.1, 0.0, substream(SEED, 0))


def test_truncation_bias_is_small_jump_mean():
    """Verifies the drift bound ∫₀^eps x ν(dx) for the ML subordinator."""
    nu = MLSubordinator(0.5)
    triplet = LevyTriplet.from_drift(0.0, nu, 0.0)
    eps = 1e-4
    expected, _ = sp_integrate.quad(lambda x: x * nu.density(x), 0.0, eps, epsabs=1e-14, epsrel=1e-12)
    assert truncation_bias(triplet, eps) == pytest.approx(expected, abs=1e-10)
    assert truncation_bias(triplet, eps / 2) <= truncation_bias(triplet, eps)


def test_direct_trivial_is_exact(time_eta, cfg):
    """Verifies V = (1 − e^{−γτ})/γ to rounding for ξ = γt, η = t."""
    gamma, q = 1.5, 0.8
    xi = ProcessSpec(_drift(gamma))
    for index in range(5):
        tau = substream(SEED, index).exponential(1.0 / q)
        value = simulate_kef_direct(xi, time_eta, q, cfg, substream(SEED, index))
        assert value == pytest.approx(-math.expm1(-gamma * tau) / gamma, rel=1e-14)


def test_sde_trivial_matches_direct(time_eta, cfg):
    """Verifies that both samplers give the same draw on a deterministic ξ."""
    xi = ProcessSpec(_drift(1.0))
    for index in range(5):
        direct = simulate_kef_direct(xi, time_eta, 1.0, cfg, substream(SEED, index))
        sde = simulate_kef_sde(xi, time_eta, 1.0, cfg, substream(SEED, index))
        assert sde == pytest.approx(direct, rel=1e-13)


def test_zero_xi_returns_eta_at_tau(cfg):
    """Verifies V = η_τ when ξ ≡ 0, with η Brownian."""
    xi = ProcessSpec(LevyTriplet(0.0))
    eta = ProcessSpec(LevyTriplet(1.0), Role.ETA)
    rng = substream(SEED, 3)
    tau = rng.exponential(1.0 / 2.0)
    normal = rng.standard_normal(1)[0]
    value = simulate_kef_direct(xi, eta, 2.0, cfg, substream(SEED, 3))
    assert value == pytest.approx(math.sqrt(tau) * normal, rel=1e-12)


def test_killed_horizon_gates(time_eta):
    """Verifies the q = 0 horizon requirement and the SDE sampler's q > 0 requirement."""
    xi = ProcessSpec(_drift(1.0))
    with pytest.raises(ConfigError):
        simulate_kef_direct(xi, time_eta, 0.0, SimConfig(), substream(SEED, 0))
    with pytest.raises(ConfigError):
        simulate_kef_direct(xi, time_eta, 1.0, SimConfig(horizon=FixedT(5.0)), substream(SEED, 0))
    with pytest.raises(DomainError):
        simulate_kef_sde(xi, time_eta, 0.0, SimConfig(horizon=FixedT(5.0)), substream(SEED, 0))


def test_fixed_horizon_q0(time_eta):
    """Verifies V = (1 − e^{−T})/1 when q = 0 and ξ = t."""
    cfg = SimConfig(horizon=FixedT(3.0))
    value = simulate_kef_direct(ProcessSpec(_drift(1.0)), time_eta, 0.0, cfg, substream(SEED, 0))
    assert value == pytest.approx(1.0 - math.exp(-3.0), rel=1e-14)


def test_sim_config_validation():
    """Verifies that bad step, eps, horizon and seed values are config errors."""
    with pytest.raises(ConfigError):
        SimConfig(step=0.0)
    with pytest.raises(ConfigError):
        SimConfig(eps=-1.0)
    with pytest.raises(ConfigError):
        FixedT(0.0)
    with pytest.raises(ConfigError):
        SimConfig(master_seed=-1)


def test_batch_single_draw_uses_substream_zero(time_eta, cfg):
    """Verifies that batch(n = 1) equals one sampler call on substream 0."""
    xi = ProcessSpec(LevyTriplet(0.5, Atoms((1.0,), (0.7,)), 0.3))
    single = simulate_kef_direct(xi, time_eta, 1.0, cfg, substream(SEED, 0))
    assert batch(1, "direct", xi, time_eta, 1.0, cfg).values[0] == single


def test_batch_is_deterministic_and_order_free(time_eta, cfg):
    """Verifies bit-identical batches across repeats and worker counts."""
    xi = ProcessSpec(LevyTriplet(0.5, Atoms((1.0,), (0.7,)), 0.3))
    first = batch(200, "direct", xi, time_eta, 1.0, cfg, workers=1)
    again = batch(200, "direct", xi, time_eta, 1.0, cfg, workers=1)
    parallel = batch(200, "direct", xi, time_eta, 1.0, cfg, workers=4)
    np.testing.assert_array_equal(first.values, again.values)
    np.testing.assert_array_equal(first.values, parallel.values)


def test_batch_rejects_unverified_convergence(time_eta):
    """Verifies that q = 0 needs E ξ₁ > 0 unless convergence is asserted."""
    xi = ProcessSpec(LevyTriplet(1.0))
    cfg = SimConfig(horizon=FixedT(2.0))
    with pytest.raises(DomainError):
        batch(3, "direct", xi, time_eta, 0.0, cfg)
    forced = batch(3, "direct", xi, time_eta, 0.0, cfg, assume_convergence=True)
    assert forced.bias_note.convergence_assumed


def test_batch_rejects_unknown_sampler(time_eta, cfg):
    """Verifies that an unknown sampler name is a config error."""
    with pytest.raises(ConfigError):
        batch(3, "euler", ProcessSpec(_drift(1.0)), time_eta, 1.0, cfg)


def test_horizon_bias_shrinks_with_T(time_eta):
    """Verifies the e^{−E ξ₁ T} horizon indicator for q = 0."""
    xi = ProcessSpec(_drift(1.0))
    short = batch(2, "direct", xi, time_eta, 0.0, SimConfig(horizon=FixedT(5.0)))
    long = batch(2, "direct", xi, time_eta, 0.0, SimConfig(horizon=FixedT(10.0)))
    assert short.bias_note.horizon_bias == pytest.approx(math.exp(-5.0))
    assert long.bias_note.horizon_bias < short.bias_note.horizon_bias


def test_sample_batch_csv_with_sidecar(tmp_path):
    """Verifies that values and provenance survive the CSV and sidecar files."""
    original = SampleBatch(np.array([0.25, 1.0 / 3.0, 2.0]), BiasNote(eps_bias=1e-5), 99, "sde", 0.1)
    path = tmp_path / "samples.csv"
    original.write_csv(path)
    original.write_sidecar(path.with_suffix(".json"), {"q": 1.0})
    assert path.read_text(encoding="utf-8").splitlines()[0] == "v"
    loaded = SampleBatch.read_csv(path)
    np.testing.assert_array_equal(loaded.values, original.values)
    assert loaded.master_seed == 99
    assert loaded.sampler == "sde"
    assert loaded.bias_note.eps_bias == 1e-5


def test_sample_batch_rejects_non_finite():
    """Verifies that NaN draws are refused."""
    with pytest.raises(DomainError):
        SampleBatch(np.array([1.0, math.nan]))


def test_resolve_workers_reads_environment(monkeypatch):
    """Verifies that KEF_THREADS caps the worker count and bad values are ignored."""
    monkeypatch.setenv("KEF_THREADS", "3")
    assert resolve_workers() == 3
    assert resolve_workers(2) == 2
    monkeypatch.setenv("KEF_THREADS", "many")
    assert resolve_workers() >= 1


def test_gou_without_eta_decays(cfg):
    """Verifies X_t = e^{−t} for ξ = t, η ≡ 0, x0 = 1."""
    path = simulate_gou_path(ProcessSpec(_drift(1.0)), ProcessSpec(LevyTriplet(0.0)), 1.0, 2.0, cfg, substream(SEED, 0))
    assert path.values[0] == 1.0
    np.testing.assert_allclose(path.values, np.exp(-path.times), rtol=1e-14)


def test_gou_without_xi_follows_eta(cfg):
    """Verifies X_t = x0 + η_t when ξ ≡ 0."""
    path = simulate_gou_path(ProcessSpec(LevyTriplet(0.0)), ProcessSpec(LevyTriplet(1.0, Zero(), 0.2)), 0.5, 1.0, cfg, substream(SEED, 0))
    np.testing.assert_allclose(path.values, 0.5 + path.eta, atol=1e-12)


def test_gou_deterministic_endpoint(cfg):
    """Verifies X_1 = 1 − e^{−1} for ξ = t, η = t, x0 = 0."""
    path = simulate_gou_path(ProcessSpec(_drift(1.0)), ProcessSpec(_drift(1.0)), 0.0, 1.0, cfg, substream(SEED, 0))
    assert path.times[-1] == 1.0
    assert path.values[-1] == pytest.approx(1.0 - math.exp(-1.0), rel=1e-12)


def test_gou_rejects_nonpositive_horizon(cfg):
    """Verifies that T must be positive."""
    with pytest.raises(DomainError):
        simulate_gou_path(ProcessSpec(_drift(1.0)), ProcessSpec(_drift(1.0)), 0.0, 0.0, cfg, substream(SEED, 0))


@pytest.mark.slow
def test_trivial_mean_is_one_half(time_eta, cfg):
    """Verifies E V = 1/2 for q = γ = 1, η = t over 10⁵ draws."""
    draws = batch(100_000, "direct", ProcessSpec(_drift(1.0)), time_eta, 1.0, cfg).values
    se = draws.std(ddof=1) / math.sqrt(draws.size)
    assert abs(draws.mean() - 0.5) < 3.0 * se


@pytest.mark.slow
def test_two_samplers_agree_for_yor_setup(time_eta):
    """Verifies two-sample KS < 0.012 between direct and SDE draws for ξ = 2B, q = 2."""
    xi = ProcessSpec(LevyTriplet(4.0))
    direct = batch(100_000, "direct", xi, time_eta, 2.0, SimConfig(master_seed=1))
    sde = batch(100_000, "sde", xi, time_eta, 2.0, SimConfig(master_seed=2))
    assert ks_two_sample(direct, sde) < 0.012


@pytest.mark.slow
def test_two_samplers_agree_for_poisson_xi():
    """Verifies equal means of both samplers for Poisson ξ and Brownian η, q = 1."""
    xi = ProcessSpec(LevyTriplet.from_drift(0.0, Atoms((1.0,), (1.0,)), 0.0))
    eta = ProcessSpec(LevyTriplet(1.0, Zero(), 0.5), Role.ETA)
    direct = batch(100_000, "direct", xi, eta, 1.0, SimConfig(master_seed=3)).values
    sde = batch(100_000, "sde", xi, eta, 1.0, SimConfig(master_seed=4)).values
    se = math.sqrt(direct.var() / direct.size + sde.var() / sde.size)
    assert abs(direct.mean() - sde.mean()) < 4.0 * se
    assert ks_two_sample(direct, sde) < 0.012


@pytest.mark.slow
def test_yor_law_goodness_of_fit():
    """Verifies KS < 0.01 of 10⁵ draws against 2 − (1/z + 2)e^{−1/(2z)}."""
    ref = uniform_over_2exp()
    draws = batch(100_000, "direct", ProcessSpec(ref.xi), ProcessSpec(ref.eta, Role.ETA), ref.q, SimConfig())
    assert ks(draws, ref.law.cdf_at) < 0.01


@pytest.mark.slow
def test_gamma_limit_goodness_of_fit():
    """Verifies KS < 0.02 against Gamma(λ/γ, a) with q = 0 and T = 50/γ."""
    ref = gamma_law(intensity=2.0, drift=1.0, a=1.0)
    cfg = SimConfig(horizon=FixedT(50.0))
    draws = batch(100_000, "direct", ProcessSpec(ref.xi), ProcessSpec(ref.eta, Role.ETA), 0.0, cfg)
    assert ks(draws, ref.law.cdf_at) < 0.02
    assert draws.atom0 == 0.0


@pytest.mark.slow
def test_mittag_leffler_laplace_transform():
    """Verifies E e^{−tV} ≈ E_{1/2}(−t) at t ∈ {0.5, 1, 2} for the ML subordinator."""
    ref = mittag_leffler_law(0.5)
    draws = batch(100_000, "direct", ProcessSpec(ref.xi), ProcessSpec(ref.eta, Role.ETA), ref.q, SimConfig(eps=1e-4))
    for t in (0.5, 1.0, 2.0):
        estimate, se = emp_laplace(draws, t)
        exact = mittag_leffler(0.5, -t)
        assert abs(estimate - exact) < max(0.02 * exact, 4.0 * se)
