"""Monte Carlo draws of killed exponential functionals and GOU paths."""

import json
import logging
import math
import os
from collections.abc import Callable
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from enum import StrEnum
from pathlib import Path

import numpy as np
from scipy import special

from kef.constants import (
    DEFAULT_EPS,
    DEFAULT_SEED,
    DEFAULT_STEP,
    SPLITMIX_GAMMA,
    SPLITMIX_MUL1,
    SPLITMIX_MUL2,
    THREADS_ENV,
    UINT64_MASK,
)
from kef.errors import ConfigError, DomainError
from kef.levy import (
    LevyMeasure,
    LevyTriplet,
    ProcessSpec,
    Structure,
    convergence_sufficient,
    first_moment,
    xi_to_U,
)

logger = logging.getLogger(__name__)


class SmallJumpMode(StrEnum):
    DROP_COMPENSATE = "drop_compensate"
    GAUSSIAN = "gaussian"


@dataclass(frozen=True)
class Killed:
    """Integrate up to an independent Exp(q) time."""


@dataclass(frozen=True)
class FixedT:
    """Integrate up to a deterministic horizon (q = 0 only)."""

    T: float

    def __post_init__(self):
        if not self.T > 0:
            raise ConfigError(f"horizon.T must be positive, got {self.T}")


@dataclass(frozen=True)
class SimConfig:
    """Discretization and reproducibility settings for the samplers."""

    step: float = DEFAULT_STEP
    eps: float = DEFAULT_EPS
    horizon: Killed | FixedT = field(default_factory=Killed)
    small_jump_mode: SmallJumpMode = SmallJumpMode.DROP_COMPENSATE
    master_seed: int = DEFAULT_SEED

    def __post_init__(self):
        if not self.step > 0:
            raise ConfigError(f"sim.step must be positive, got {self.step}")
        if self.eps < 0:
            raise ConfigError(f"sim.eps must be nonnegative, got {self.eps}")
        if not 0 <= self.master_seed <= UINT64_MASK:
            raise ConfigError("sim.seed must be an unsigned 64-bit integer")

    def to_dict(self) -> dict:
        """JSON-ready view used by the CSV sidecar."""
        horizon = (
            {"kind": "fixed", "T": self.horizon.T}
            if isinstance(self.horizon, FixedT)
            else {"kind": "killed"}
        )
        return {
            "step": self.step,
            "eps": self.eps,
            "horizon": horizon,
            "small_jump_mode": str(self.small_jump_mode),
            "seed": self.master_seed,
        }


@dataclass(frozen=True)
class BiasNote:
    """Known systematic errors of a batch.

    eps_bias bounds the drift replacing dropped small jumps; horizon_bias is the
    e^{-ξ} scale at T for q = 0, a heuristic and not a bound.
    """

    eps_bias: float = 0.0
    horizon_bias: float = 0.0
    convergence_assumed: bool = False


@dataclass(frozen=True)
class SampleBatch:
    """i.i.d. draws of V together with their provenance."""

    values: np.ndarray
    bias_note: BiasNote = field(default_factory=BiasNote)
    master_seed: int = DEFAULT_SEED
    sampler: str = "direct"
    atom0: float = 0.0

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1 or values.size == 0:
            raise DomainError("a sample batch needs a nonempty one-dimensional array")
        if not np.all(np.isfinite(values)):
            raise DomainError("sample batch contains non-finite draws")
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return int(self.values.size)

    def write_csv(self, path: Path) -> None:
        """Writes header "v" and one value per row."""
        lines = ["v", *(format(float(v), ".17g") for v in self.values)]
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    def sidecar(self, config: dict | None = None) -> dict:
        """Metadata written next to the CSV."""
        return {
            "n": self.n,
            "seed": self.master_seed,
            "sampler": self.sampler,
            "atom0": self.atom0,
            "bias_note": asdict(self.bias_note),
            "config": config or {},
        }

    def write_sidecar(self, path: Path, config: dict | None = None) -> None:
        Path(path).write_text(json.dumps(self.sidecar(config), indent=2), encoding="utf-8")

    @classmethod
    def read_csv(cls, path: Path) -> "SampleBatch":
        """Reads a CSV written by write_csv (sidecar metadata optional)."""
        lines = Path(path).read_text(encoding="utf-8").split()
        if not lines or lines[0] != "v":
            raise ConfigError(f"{path} is not a sample file (missing 'v' header)")
        values = np.array([float(v) for v in lines[1:]])
        sidecar = Path(path).with_suffix(".json")
        if sidecar.exists():
            meta = json.loads(sidecar.read_text(encoding="utf-8"))
            return cls(
                values,
                BiasNote(**meta.get("bias_note", {})),
                meta.get("seed", DEFAULT_SEED),
                meta.get("sampler", "direct"),
                meta.get("atom0", 0.0),
            )
        return cls(values)


@dataclass(frozen=True)
class Increment:
    value: float
    jump_times: np.ndarray
    jump_sizes: np.ndarray


@dataclass(frozen=True)
class GouPath:
    """X_t = e^{-ξ_t}(∫₀^t e^{ξ_{s-}} dη_s + x0) on the simulation grid."""

    times: np.ndarray
    values: np.ndarray
    xi: np.ndarray
    eta: np.ndarray


@dataclass(frozen=True)
class _Truncated:
    """Jumps ≥ eps simulated exactly, the rest folded into drift or noise."""

    drift: float
    sigma: float
    measure: LevyMeasure
    rate: float
    eps: float


def splitmix64(master_seed: int, index: int) -> int:
    """Substream seed for draw `index`, independent of execution order."""
    z = (master_seed + (index + 1) * SPLITMIX_GAMMA) & UINT64_MASK
    z = ((z ^ (z >> 30)) * SPLITMIX_MUL1) & UINT64_MASK
    z = ((z ^ (z >> 27)) * SPLITMIX_MUL2) & UINT64_MASK
    return z ^ (z >> 31)


def substream(master_seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(splitmix64(master_seed, index))


def _truncate(triplet: LevyTriplet, eps: float, mode: SmallJumpMode) -> _Truncated:
    nu = triplet.nu
    if nu.infinite_activity and eps <= 0:
        raise ConfigError("sim.eps must be positive for infinite-activity jump measures")
    cutoff = eps if nu.infinite_activity else 0.0
    small_mean = 0.0
    variance = triplet.sigma2
    if cutoff > 0:
        small_mean = float(nu.moment(0.0, cutoff, 1) + nu.moment(-cutoff, 0.0, 1))
        if mode == SmallJumpMode.GAUSSIAN:
            variance += nu.small_jump_moment(cutoff, 2)
    # compensator of the simulated jumps in [cutoff, 1]
    drift = triplet.gamma - (nu.truncated_mean() - small_mean)
    return _Truncated(drift, math.sqrt(variance), nu, nu.activity(cutoff), cutoff)


def truncation_bias(triplet: LevyTriplet, eps: float) -> float:
    """∫_{|x|<eps} |x| ν(dx): drift bound for jumps replaced by their compensator."""
    if not triplet.nu.infinite_activity:
        return 0.0
    return triplet.nu.small_jump_moment(eps, 1)


def _arrival_times(rng: np.random.Generator, rate: float, span: float) -> np.ndarray:
    """Arrival times on [0, span) from exponential inter-arrival gaps."""
    if rate <= 0 or span <= 0:
        return np.zeros(0)
    chunk = int(rate * span * 1.2) + 16
    found: list[np.ndarray] = []
    start = 0.0
    while True:
        arrivals = start + np.cumsum(rng.exponential(1.0 / rate, size=chunk))
        inside = arrivals[arrivals < span]
        found.append(inside)
        if inside.size < chunk:
            return np.concatenate(found)
        start = arrivals[-1]


def _jumps(rng, law: _Truncated, span: float) -> tuple[np.ndarray, np.ndarray]:
    times = _arrival_times(rng, law.rate, span)
    if times.size == 0:
        return times, np.zeros(0)
    return times, np.asarray(law.measure.sample(rng, times.size, law.eps), dtype=float)


def sample_increment(
    spec: ProcessSpec,
    dt: float,
    eps: float,
    rng: np.random.Generator,
    mode: SmallJumpMode = SmallJumpMode.DROP_COMPENSATE,
) -> Increment:
    """One increment over dt with the jump times that produced it.

    Raises:
        ConfigError: Infinite activity with eps = 0.
    """
    if not dt > 0:
        raise DomainError(f"increment length must be positive, got {dt}")
    law = _truncate(spec.triplet, eps, mode)
    gaussian = law.sigma * math.sqrt(dt) * rng.standard_normal() if law.sigma > 0 else 0.0
    times, sizes = _jumps(rng, law, dt)
    return Increment(law.drift * dt + gaussian + float(sizes.sum()), times, sizes)


def _integrate(
    rng: np.random.Generator,
    span: float,
    driver: _Truncated,
    driver_sign: float,
    driver_jump_map: Callable[[np.ndarray], np.ndarray],
    eta: _Truncated,
    step: float,
    record: bool = False,
):
    """∫₀^span e^{Y_{s-}} dη_s for Y with drift, Brownian part and mapped jumps.

    Between jumps the drift of η is integrated exactly against e^Y interpolated
    log-linearly; when Y has no Brownian part this is the closed form and the
    Brownian part of η is drawn from its exact Gaussian law, so no time grid is
    needed. Otherwise the grid uses step min(h, gap to the next jump).
    """
    y_times, y_raw = _jumps(rng, driver, span)
    y_sizes = driver_jump_map(y_raw)
    eta_times, eta_sizes = _jumps(rng, eta, span)

    gridded = driver.sigma > 0 or record
    base = np.append(np.arange(0.0, span, step), span) if gridded else np.array([0.0, span])
    grid = np.union1d(base, np.concatenate([y_times, eta_times]))
    dt = np.diff(grid)

    y_drift = driver_sign * driver.drift
    brownian = np.zeros_like(grid)
    if driver.sigma > 0:
        steps = driver.sigma * np.sqrt(dt) * rng.standard_normal(dt.size)
        brownian[1:] = driver_sign * np.cumsum(steps)
    y_continuous = y_drift * grid + brownian

    jumps_at = np.zeros_like(grid)
    np.add.at(jumps_at, np.searchsorted(grid, y_times), y_sizes)
    y_path = y_continuous + np.cumsum(jumps_at)

    left = np.exp(y_path[:-1])
    segments = eta.drift * left * dt * special.exprel(np.diff(y_continuous))
    normals = rng.standard_normal(dt.size) if eta.sigma > 0 else np.zeros(dt.size)
    if eta.sigma > 0:
        if driver.sigma > 0:
            scale = np.sqrt(dt)
        else:
            scale = np.sqrt(dt * special.exprel(2.0 * y_drift * dt))
        segments = segments + eta.sigma * left * scale * normals

    eta_index = np.searchsorted(grid, eta_times)
    pre_jump = y_path[eta_index] - jumps_at[eta_index]
    jump_terms = np.exp(pre_jump) * eta_sizes

    if not record:
        return float(segments.sum() + jump_terms.sum())

    integral = np.zeros_like(grid)
    integral[1:] = np.cumsum(segments)
    eta_jumps_at = np.zeros_like(grid)
    np.add.at(eta_jumps_at, eta_index, jump_terms)
    integral += np.cumsum(eta_jumps_at)

    eta_path = np.zeros_like(grid)
    eta_path[1:] = np.cumsum(eta.drift * dt + eta.sigma * np.sqrt(dt) * normals)
    raw_eta_jumps = np.zeros_like(grid)
    np.add.at(raw_eta_jumps, eta_index, eta_sizes)
    eta_path += np.cumsum(raw_eta_jumps)
    return grid, y_path, integral, eta_path


def _horizon(q: float, cfg: SimConfig, rng: np.random.Generator) -> float:
    if q > 0:
        if isinstance(cfg.horizon, FixedT):
            raise ConfigError("horizon.kind 'fixed' only applies to q = 0")
        return float(rng.exponential(1.0 / q))
    if q < 0:
        raise DomainError(f"killing rate must be nonnegative, got {q}")
    if not isinstance(cfg.horizon, FixedT):
        raise ConfigError("q = 0 requires a fixed horizon: set horizon.T")
    return cfg.horizon.T


def simulate_kef_direct(
    xi: ProcessSpec,
    eta: ProcessSpec,
    q: float,
    cfg: SimConfig,
    rng: np.random.Generator,
) -> float:
    """One draw of ∫₀^τ e^{-ξ_{s-}} dη_s, τ ~ Exp(q) (or T when q = 0)."""
    span = _horizon(q, cfg, rng)
    xi_law = _truncate(xi.triplet, cfg.eps, cfg.small_jump_mode)
    eta_law = _truncate(eta.triplet, cfg.eps, cfg.small_jump_mode)
    return _integrate(rng, span, xi_law, -1.0, np.negative, eta_law, cfg.step)


def simulate_kef_sde(
    xi: ProcessSpec,
    eta: ProcessSpec,
    q: float,
    cfg: SimConfig,
    rng: np.random.Generator,
) -> float:
    """One draw of ∫₀^∞ E(Ũ)_{s-} dη_s with Ũ built from U and a rate-q Poisson process.

    E(Ũ) = E(U) until the first jump T₁ of N, where ΔŨ = -1 sends it to zero.
    log E(U) has drift b_U - σ_U²/2 and jumps ln(1 + ΔU).
    """
    if not q > 0:
        raise DomainError("the stochastic-exponential sampler needs q > 0")
    if isinstance(cfg.horizon, FixedT):
        raise ConfigError("horizon.kind 'fixed' only applies to q = 0")
    first_kill = float(rng.exponential(1.0 / q))
    u_law = _truncate(xi_to_U(xi.triplet), cfg.eps, cfg.small_jump_mode)
    log_exponential = _Truncated(
        u_law.drift - 0.5 * u_law.sigma**2,
        u_law.sigma,
        u_law.measure,
        u_law.rate,
        u_law.eps,
    )
    eta_law = _truncate(eta.triplet, cfg.eps, cfg.small_jump_mode)
    return _integrate(rng, first_kill, log_exponential, 1.0, np.log1p, eta_law, cfg.step)


def simulate_gou_path(
    xi: ProcessSpec,
    eta: ProcessSpec,
    x0: float,
    T: float,
    cfg: SimConfig,
    rng: np.random.Generator,
) -> GouPath:
    """Generalized Ornstein–Uhlenbeck path started at x0 on [0, T]."""
    if not T > 0:
        raise DomainError(f"path horizon must be positive, got {T}")
    xi_law = _truncate(xi.triplet, cfg.eps, cfg.small_jump_mode)
    eta_law = _truncate(eta.triplet, cfg.eps, cfg.small_jump_mode)
    grid, xi_path, integral, eta_path = _integrate(
        rng, T, xi_law, 1.0, lambda x: x, eta_law, cfg.step, record=True
    )
    return GouPath(grid, np.exp(-xi_path) * (integral + x0), xi_path, eta_path)


SAMPLERS = {"direct": simulate_kef_direct, "sde": simulate_kef_sde}


def resolve_workers(workers: int | None = None) -> int:
    """Worker count from the argument, else KEF_THREADS, else the CPU count."""
    if workers is not None:
        return max(1, workers)
    raw = os.environ.get(THREADS_ENV)
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            logger.debug("Ignoring malformed %s=%r", THREADS_ENV, raw, exc_info=True)
    return os.cpu_count() or 1


def batch(
    n: int,
    kind: str,
    xi: ProcessSpec,
    eta: ProcessSpec,
    q: float,
    cfg: SimConfig,
    workers: int | None = None,
    assume_convergence: bool = False,
) -> SampleBatch:
    """n independent draws; draw i always uses substream splitmix64(seed, i).

    Args:
        n: Number of draws.
        kind: "direct" or "sde".
        xi: Process in the exponent.
        eta: Integrator process.
        q: Killing rate.
        cfg: Simulation settings.
        workers: Thread count (defaults to KEF_THREADS or the CPU count).
        assume_convergence: Skip the q = 0 convergence check.

    Returns:
        The batch with its bias note.
    """
    if n < 1:
        raise DomainError(f"batch size must be at least 1, got {n}")
    if kind not in SAMPLERS:
        raise ConfigError(f"unknown sampler {kind!r}; choose from {sorted(SAMPLERS)}")
    if q == 0 and not assume_convergence and not convergence_sufficient(xi.triplet, eta.triplet):
        raise DomainError(
            "cannot verify that V_{0,xi,eta} exists (need E xi_1 > 0, E|eta_1| < inf);"
            " assert it with assume_convergence"
        )
    sampler = SAMPLERS[kind]

    def draw(index: int) -> float:
        return sampler(xi, eta, q, cfg, substream(cfg.master_seed, index))

    pool_size = min(resolve_workers(workers), n)
    logger.debug("Drawing %d samples with %d worker(s), seed %d", n, pool_size, cfg.master_seed)
    if pool_size > 1:
        with ThreadPoolExecutor(max_workers=pool_size) as pool:
            values = np.fromiter(pool.map(draw, range(n), chunksize=256), dtype=float, count=n)
    else:
        values = np.fromiter(map(draw, range(n)), dtype=float, count=n)

    exponent = xi_to_U(xi.triplet) if kind == "sde" else xi.triplet
    eps_bias = truncation_bias(exponent, cfg.eps) + truncation_bias(eta.triplet, cfg.eps)
    horizon_bias = 0.0
    if q == 0:
        mean = first_moment(xi.triplet)
        horizon_bias = math.exp(-mean * cfg.horizon.T) if mean is not None else math.nan
    note = BiasNote(
        eps_bias=eps_bias,
        horizon_bias=horizon_bias,
        convergence_assumed=assume_convergence or not eta.triplet.nu.tail_moment_finite(1),
    )

    atom0 = 0.0
    if q > 0 and eta.tag == Structure.COMPOUND_POISSON_DRIFT and eta.triplet.gamma0 == 0.0:
        atom0 = float(np.mean(values == 0.0))
    return SampleBatch(values, note, cfg.master_seed, kind, atom0)
