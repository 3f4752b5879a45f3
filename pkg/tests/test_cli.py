"""Tests for the kef command line."""

import json
import logging
from pathlib import Path

import numpy as np
import pytest

from kef.constants import EXIT_CONFIG, EXIT_FAIL, EXIT_OK
from kef.main import main
from kef.resolve import resolve_run
from kef.simulation import SampleBatch

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def _run(monkeypatch, *argv):
    monkeypatch.setattr("sys.argv", ["kef", *argv])
    with pytest.raises(SystemExit) as raised_exit:
        main()
    return raised_exit.value.code


@pytest.fixture()
def exponential_draws(tmp_path):
    """Exp(1) draws saved as a samples CSV; not the law of the unit-drift functional."""
    path = tmp_path / "exp.csv"
    SampleBatch(np.random.default_rng(3).exponential(size=20_000)).write_csv(path)
    return path


@pytest.mark.parametrize("config", sorted(CONFIGS.glob("*.json")), ids=lambda p: p.stem)
def test_shipped_configs_resolve(config):
    """Verifies that every example config parses into a run."""
    run = resolve_run(str(config))
    assert run.reference is not None


def test_simulate_writes_samples_and_sidecar(monkeypatch, tmp_path):
    """Verifies the samples CSV, its sidecar and seed reproducibility."""
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    for out in (first, second):
        code = _run(monkeypatch, "simulate", "--reference", "trivial_kef", "--n", "10", "--seed", "5", "-o", str(out))
        assert code == EXIT_OK

    lines = first.read_text(encoding="utf-8").split()
    assert lines[0] == "v"
    values = np.array([float(v) for v in lines[1:]])
    assert values.size == 10
    assert np.all((values >= 0.0) & (values <= 1.0))
    assert first.read_bytes() == second.read_bytes()

    sidecar = json.loads(first.with_suffix(".json").read_text(encoding="utf-8"))
    assert sidecar["n"] == 10
    assert sidecar["seed"] == 5
    assert sidecar["config"]["reference"]["name"] == "trivial_kef"


def test_q0_without_horizon_is_a_config_error(monkeypatch, tmp_path, caplog):
    """Verifies exit code 2 and a message naming the missing horizon field."""
    config = tmp_path / "q0.json"
    config.write_text(
        json.dumps({"xi": {"gamma": {"drift0": 1.0}}, "eta": {"gamma": {"drift0": 1.0}}, "q": 0.0}),
        encoding="utf-8",
    )
    with caplog.at_level(logging.INFO):
        code = _run(monkeypatch, "simulate", "--config", str(config), "--n", "5", "-o", str(tmp_path / "s.csv"))
    assert code == EXIT_CONFIG
    assert "sim.horizon.T" in caplog.text
    assert not (tmp_path / "s.csv").exists()


@pytest.mark.parametrize(
    ("name", "equation"),
    [("laplace01", "mu-fv"), ("trivial_kef", "cf"), ("potential_bm", "density-diff")],
)
def test_check_passes_on_reference_laws(monkeypatch, tmp_path, name, equation):
    """Verifies exit code 0 and a passing JSON report for a law that solves its equation."""
    out = tmp_path / "report.json"
    code = _run(monkeypatch, "check", "--reference", name, "--equation", equation, "-o", str(out))
    assert code == EXIT_OK
    report = json.loads(out.read_text(encoding="utf-8"))
    assert report["equation"] == equation
    assert report["pass"] is True


def test_check_all_prints_suite(monkeypatch, capsys):
    """Verifies the suite JSON on stdout when no output path is given."""
    code = _run(monkeypatch, "check", "--reference", "laplace01", "--grid", "0.2:3:5")
    payload = json.loads(capsys.readouterr().out)
    assert set(payload) == {"law", "reports", "skipped", "pass"}
    assert "mu-fv" in payload["reports"]
    assert code == (EXIT_OK if payload["pass"] else EXIT_FAIL)


def test_check_fails_on_wrong_draws(monkeypatch, tmp_path, exponential_draws):
    """Verifies exit code 4 when the draws do not solve the CF equation."""
    code = _run(
        monkeypatch,
        "check",
        "--reference",
        "trivial_kef",
        "--equation",
        "cf",
        "--samples",
        str(exponential_draws),
        "--grid",
        "0.5:2:4",
        "-o",
        str(tmp_path / "report.json"),
    )
    assert code == EXIT_FAIL


def test_gof_from_reference(monkeypatch, tmp_path):
    """Verifies that the reference sampler passes its own KS test."""
    out = tmp_path / "gof.json"
    code = _run(monkeypatch, "gof", "--reference", "laplace01", "--from-reference", "--n", "2000", "-o", str(out))
    payload = json.loads(out.read_text(encoding="utf-8"))
    assert code == EXIT_OK
    assert payload["n"] == 2000
    assert payload["ks"] < payload["threshold"]


def test_gof_rejects_wrong_draws(monkeypatch, tmp_path, exponential_draws):
    """Verifies exit code 4 for draws from another law."""
    code = _run(
        monkeypatch,
        "gof",
        "--reference",
        "trivial_kef",
        "--samples",
        str(exponential_draws),
        "-o",
        str(tmp_path / "gof.json"),
    )
    assert code == EXIT_FAIL


def test_gof_needs_reference(monkeypatch, tmp_path):
    """Verifies that gof without a reference law is a configuration error."""
    config = tmp_path / "plain.json"
    config.write_text(
        json.dumps({"xi": {"gamma": {"drift0": 1.0}}, "eta": {"gamma": {"drift0": 1.0}}, "q": 1.0}),
        encoding="utf-8",
    )
    assert _run(monkeypatch, "gof", "--config", str(config), "--n", "5") == EXIT_CONFIG


def test_reference_csv(monkeypatch, tmp_path):
    """Verifies the tidy density and CDF table of a registry law."""
    out = tmp_path / "laplace.csv"
    code = _run(monkeypatch, "reference", "laplace01", "--grid", "0.1:2:5", "-o", str(out))
    assert code == EXIT_OK
    lines = out.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "z,value,series"
    series = [line.split(",")[2] for line in lines[1:]]
    assert series.count("density") == 5
    assert series.count("cdf") == 5


def test_reference_lists_names(monkeypatch, caplog):
    """Verifies that reference without a name lists the registry."""
    with caplog.at_level(logging.INFO):
        code = _run(monkeypatch, "reference")
    assert code == EXIT_OK
    assert "laplace01" in caplog.text


def test_unknown_reference(monkeypatch, tmp_path):
    """Verifies exit code 2 for a name outside the registry."""
    assert _run(monkeypatch, "reference", "nope", "-o", str(tmp_path / "x.csv")) == EXIT_CONFIG


def test_gou_path(monkeypatch, tmp_path):
    """Verifies the tidy GOU path with its three series."""
    out = tmp_path / "gou.csv"
    code = _run(monkeypatch, "gou", "--reference", "trivial_kef", "--x0", "1", "--T", "0.5", "-o", str(out))
    assert code == EXIT_OK
    lines = out.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "t,value,series"
    rows = [line.split(",") for line in lines[1:]]
    assert {row[2] for row in rows} == {"X", "xi", "eta"}
    first_x = next(row for row in rows if row[2] == "X")
    assert float(first_x[0]) == 0.0
    assert float(first_x[1]) == pytest.approx(1.0)
