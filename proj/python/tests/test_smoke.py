import math

import numpy as np
import pytest

import obstacle_lab as ol


def test_list_scenarios():
    names = [n for n, _ in ol.list_scenarios()]
    assert names == sorted(names)
    assert "halfspace-1d" in names and "radial-2d" in names


def test_theta_closed_form():
    assert ol.theta(2) == pytest.approx(math.pi / 16)
    assert ol.theta(3) == pytest.approx(4 * math.pi / 3 / 20)


def test_psi_half_space_and_polynomial():
    defining, mass, closed = ol.psi([0.6, 0.8], 2)
    assert defining == pytest.approx(math.pi / 16, abs=1e-9)
    assert mass == pytest.approx(defining, abs=1e-9)
    defining, mass, closed = ol.psi([0.4, 0.0, 0.0, 0.1], 2)
    assert mass == pytest.approx(math.pi / 8, abs=1e-9)


def test_run_halfspace_1d_matches_closed_form():
    r = ol.run_scenario("halfspace-1d", resolution=64)
    assert r["passed"], r["verdicts"]
    u = r["u"]
    x = np.linspace(-1.0, 1.0, u.shape[0])
    exact = 0.5 * np.maximum(x - 0.5, 0.0) ** 2
    assert np.max(np.abs(u - exact)) < 1e-8
    assert r["report"]["provenance"]["scenario"] == "halfspace-1d"


def test_run_radial_classifies_singular():
    r = ol.run_scenario("radial-2d", resolution=64, analyses=["solve", "blowup"])
    assert r["u"].shape == (129, 129)
    assert r["label"] == "Singular"
    assert r["stratum"] == 0
    assert r["phi0"] == pytest.approx(math.pi / 8, rel=0.05)


def test_config_dict_round_trip_and_errors():
    cfg = ol.scenario_config("halfspace-2d")
    assert ol.validate_config(cfg)["name"] == "halfspace-2d"
    cfg["solver"]["tol"] = -1.0
    with pytest.raises(ol.ConfigError) as info:
        ol.validate_config(cfg)
    assert "solver.tol" in str(info.value)
    assert info.value.code == "ConfigError"


def test_unknown_scenario_raises():
    with pytest.raises(ol.LabError):
        ol.run_scenario("no-such-scenario")


def test_outputs_written(tmp_path):
    r = ol.run_scenario("halfspace-1d", resolution=32, output=str(tmp_path), seed=3)
    assert (tmp_path / "report.json").exists()
    assert any(f.endswith("slices.csv") for f in r["files"])
