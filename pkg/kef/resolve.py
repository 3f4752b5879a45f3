"""Utilities for resolving run configurations and reporting status lines."""

import json
import logging
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Optional

import numpy as np

from kef.errors import ConfigError, DomainError
from kef.estimators import EmpiricalLaw, LawRep
from kef.levy import (
    Atoms,
    CompoundPoissonExponential,
    LevyMeasure,
    LevyTriplet,
    MLSubordinator,
    ProcessSpec,
    Role,
    Structure,
    TwoSidedExponential,
    combine,
)
from kef.references import ReferenceLaw, reference
from kef.simulation import FixedT, Killed, SampleBatch, SimConfig, SmallJumpMode

logger = logging.getLogger(__name__)


def log(level: str, msg: str) -> None:
    """Logs a message with an icon based on the severity level.

    Args:
        level: The severity level ("FAIL", "WARN", "OK").
        msg: The message to log.
    """
    icon = "❌" if level == "FAIL" else "⚠️" if level == "WARN" else "✅"
    if level == "FAIL":
        logging.error(f"{icon}  {msg}")
    elif level == "WARN":
        logging.warning(f"{icon}  {msg}")
    else:
        logging.info(f"{icon}  {msg}")


@lru_cache(maxsize=16)
def _load_json(path: Path) -> Optional[dict]:
    """Loads and caches a parsed JSON config file.

    Args:
        path: Resolved path of the file.

    Returns:
        The parsed dictionary, or None on error.
    """
    if not path.exists():
        return None
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except Exception:
        logger.debug("Failed to parse %s", path, exc_info=True)
        return None
    return data if isinstance(data, dict) else None


def load_config(path: str | Path) -> dict:
    """Reads a RunConfig JSON file.

    Raises:
        ConfigError: If the file is missing or not a JSON object.
    """
    resolved = Path(path).expanduser().resolve()
    data = _load_json(resolved)
    if data is None:
        raise ConfigError(f"cannot read config {resolved}: missing file or not a JSON object")
    logger.debug("Loaded config %s with keys %s", resolved, sorted(data))
    return data


def _number(data: dict, key: str, where: str, default: float | None = None) -> float:
    value = data.get(key, default)
    if value is None:
        raise ConfigError(f"{where}.{key} is required")
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}.{key} must be a number, got {value!r}")
    return float(value)


def parse_measure(entry: dict, where: str = "nu") -> LevyMeasure:
    """Builds one Lévy measure component from its JSON description.

    Kinds: "atom" (position, mass or positions, masses), "two_sided_exp"
    (a, left, right), "cp_exp" (intensity, a), "ml_subordinator" (alpha).
    """
    if not isinstance(entry, dict):
        raise ConfigError(f"{where} entries must be objects, got {entry!r}")
    kind = entry.get("kind")
    try:
        if kind == "atom":
            if "positions" in entry:
                return Atoms(tuple(entry["positions"]), tuple(entry.get("masses", ())))
            return Atoms((_number(entry, "position", where),), (_number(entry, "mass", where),))
        if kind == "two_sided_exp":
            return TwoSidedExponential(
                _number(entry, "a", where),
                _number(entry, "left", where, 0.0),
                _number(entry, "right", where, 0.0),
            )
        if kind == "cp_exp":
            return CompoundPoissonExponential(_number(entry, "intensity", where), _number(entry, "a", where))
        if kind == "ml_subordinator":
            return MLSubordinator(_number(entry, "alpha", where))
    except DomainError as exc:
        raise ConfigError(f"{where}: {exc}") from exc
    raise ConfigError(
        f"{where}.kind must be one of atom, two_sided_exp, cp_exp, ml_subordinator; got {kind!r}"
    )


def parse_process(data: dict | None, role: Role) -> ProcessSpec:
    """Parses {"sigma2", "gamma": num | {"drift0": num}, "nu": [...], "tag"?}.

    Raises:
        ConfigError: On a missing process, a bad field or an inconsistent triplet.
    """
    where = str(role)
    if not isinstance(data, dict):
        raise ConfigError(f"{where} process is required")
    sigma2 = _number(data, "sigma2", where, 0.0)
    entries = data.get("nu", [])
    if not isinstance(entries, list):
        raise ConfigError(f"{where}.nu must be a list")
    nu = combine(*(parse_measure(e, f"{where}.nu[{i}]") for i, e in enumerate(entries)))
    gamma = data.get("gamma", 0.0)
    try:
        if isinstance(gamma, dict):
            triplet = LevyTriplet.from_drift(sigma2, nu, _number(gamma, "drift0", f"{where}.gamma"))
        else:
            triplet = LevyTriplet(sigma2, nu, _number(data, "gamma", where, 0.0))
        tag = data.get("tag")
        return ProcessSpec(triplet, role, Structure(tag) if tag else None)
    except DomainError as exc:
        raise ConfigError(f"{where}: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"{where}.tag: {exc}") from exc


def parse_sim(data: dict | None) -> SimConfig:
    """Parses step, eps, horizon, small_jump_mode and seed (all optional)."""
    data = data or {}
    defaults = SimConfig()
    horizon_data = data.get("horizon", {"kind": "killed"})
    kind = horizon_data.get("kind", "killed") if isinstance(horizon_data, dict) else None
    if kind == "killed":
        horizon = Killed()
    elif kind == "fixed":
        horizon = FixedT(_number(horizon_data, "T", "sim.horizon"))
    else:
        raise ConfigError(f"sim.horizon.kind must be 'killed' or 'fixed', got {kind!r}")
    try:
        mode = SmallJumpMode(data.get("small_jump_mode", str(defaults.small_jump_mode)))
    except ValueError as exc:
        raise ConfigError(f"sim.small_jump_mode: {exc}") from exc
    seed = data.get("seed", defaults.master_seed)
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ConfigError(f"sim.seed must be an integer, got {seed!r}")
    return SimConfig(
        step=_number(data, "step", "sim", defaults.step),
        eps=_number(data, "eps", "sim", defaults.eps),
        horizon=horizon,
        small_jump_mode=mode,
        master_seed=seed,
    )


def parse_grid(text: str) -> np.ndarray:
    """Parses "a:b:n" (evenly spaced) or "a:b:n:log" / "a:b:n|log" (geometric)."""
    parts = text.replace("|", ":").split(":")
    geometric = len(parts) == 4 and parts[3] == "log"
    if len(parts) != 3 and not geometric:
        raise ConfigError(f"--grid must look like a:b:n or a:b:n:log, got {text!r}")
    try:
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise ConfigError(f"--grid {text!r}: {exc}") from exc
    if n < 1 or not hi >= lo:
        raise ConfigError(f"--grid needs b >= a and n >= 1, got {text!r}")
    if geometric:
        if lo <= 0:
            raise ConfigError("a logarithmic grid needs a > 0")
        return np.geomspace(lo, hi, n)
    return np.linspace(lo, hi, n)


@dataclass(frozen=True)
class RunConfig:
    """Everything a subcommand needs: the processes, q, the sampler settings and a law source."""

    xi: ProcessSpec
    eta: ProcessSpec
    q: float
    sim: SimConfig = field(default_factory=SimConfig)
    assume_convergence: bool = False
    reference: ReferenceLaw | None = None
    raw: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.q < 0:
            raise ConfigError(f"q must be nonnegative, got {self.q}")
        fixed = isinstance(self.sim.horizon, FixedT)
        if self.q == 0 and not fixed:
            raise ConfigError("q = 0 needs a fixed horizon: set sim.horizon.T")
        if self.q > 0 and fixed:
            raise ConfigError("sim.horizon.T only applies to q = 0; use the killed horizon")

    def to_dict(self) -> dict:
        """Config echoed into the CSV sidecar."""
        out = {"q": self.q, "sim": self.sim.to_dict(), "assume_convergence": self.assume_convergence}
        if self.reference is not None:
            out["reference"] = {"name": self.reference.name, "params": self.reference.params}
        for key in ("xi", "eta"):
            if key in self.raw:
                out[key] = self.raw[key]
        return out


def _reference_sim(ref: ReferenceLaw, data: dict | None) -> dict:
    data = dict(data or {})
    if ref.q == 0 and "horizon" not in data and ref.horizon_T is not None:
        data["horizon"] = {"kind": "fixed", "T": ref.horizon_T}
    return data


def resolve_run(
    config_path: str | None = None,
    reference_name: str | None = None,
    params: dict | None = None,
    overrides: dict | None = None,
) -> RunConfig:
    """Builds a RunConfig from a file, a reference law, or both; overrides win.

    Without --config the reference supplies (ξ, η, q) and, for q = 0, its horizon.

    Args:
        config_path: Optional JSON RunConfig file.
        reference_name: Optional registry name.
        params: Keyword parameters of the reference law.
        overrides: CLI values for q, seed, n and friends; None entries are ignored.

    Raises:
        ConfigError: If neither source is given or a field is invalid.
    """
    data = dict(load_config(config_path)) if config_path else {}
    name = reference_name or data.get("reference")
    if params is None:
        params = data.get("params", {})
    ref = reference(name, params) if name else None
    if not data.get("xi") and ref is None:
        raise ConfigError("give --config with xi and eta, or --reference NAME")

    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    sim_data = dict(data.get("sim") or {})
    if ref is not None and "xi" not in data:
        sim_data = _reference_sim(ref, sim_data)
    if "seed" in overrides:
        sim_data["seed"] = overrides["seed"]

    if "xi" in data:
        xi = parse_process(data.get("xi"), Role.XI)
        eta = parse_process(data.get("eta"), Role.ETA)
        q = _number(data, "q", "config", None if ref is None else ref.q)
    else:
        try:
            xi, eta = ProcessSpec(ref.xi, Role.XI), ProcessSpec(ref.eta, Role.ETA)
        except DomainError as exc:
            raise ConfigError(f"reference {ref.name}: {exc}") from exc
        q = ref.q
    q = float(overrides.get("q", q))
    return RunConfig(
        xi,
        eta,
        q,
        parse_sim(sim_data),
        bool(overrides.get("assume_convergence", data.get("assume_convergence", False))),
        ref,
        data,
    )


def resolve_law(run: RunConfig, samples: str | None = None) -> LawRep:
    """The law under test: a samples CSV if given, else the reference law.

    Raises:
        ConfigError: If there is no law source or the file is unreadable.
    """
    if samples:
        path = Path(samples)
        if not path.exists():
            raise ConfigError(f"samples file {path} does not exist")
        law = EmpiricalLaw(SampleBatch.read_csv(path))
        log("OK", f"Loaded {law.batch.n} draws from {path}")
        return law
    if run.reference is None:
        raise ConfigError("check needs --reference NAME or --samples FILE")
    return run.reference.law


def parse_params(text: str | None) -> dict | None:
    """Parses the --params JSON object."""
    if text is None:
        return None
    try:
        value = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"--params is not valid JSON: {exc}") from exc
    if not isinstance(value, dict):
        raise ConfigError("--params must be a JSON object")
    return value
