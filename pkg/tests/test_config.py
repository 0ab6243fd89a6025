import json
import math

import numpy as np
import pytest

from chiralwg.config import ConfigError, Scenario, load_scenario, scenario_from_dict
from chiralwg.ensemble import CavityConfig
from chiralwg.params import Direction, EmitterConfig, EnergyBranch


def test_empty_scenario_is_default():
    assert scenario_from_dict({}) == Scenario()


def test_round_trip_through_dict():
    sc = Scenario(emitter=EmitterConfig(beta=0.9, dephasing_tau_d=math.inf, strong_branch=EnergyBranch.LowEnergy),
                  cavity=CavityConfig(0.2, 0.9, 1.0, 0.01, 0.3))
    raw = json.loads(json.dumps(sc.to_dict()))
    assert raw["emitter"]["dephasing_tau_d"] is None
    assert raw["emitter"]["strong_branch"] == "LowEnergy"
    assert scenario_from_dict(raw) == sc


def test_digest_tracks_content():
    a = Scenario()
    assert a.digest() == Scenario().digest()
    assert len(a.digest()) == 16
    assert a.replace(emitter=EmitterConfig(beta=0.71)).digest() != a.digest()


def test_load_from_file(tmp_path):
    p = tmp_path / "s.json"
    p.write_text(json.dumps({
        "emitter": {"beta": 0.9, "strong_branch": "low", "dephasing_tau_d": None},
        "ensemble": {"wandering_sigma": 0, "quadrature_order": 1},
        "drive": {"direction": "RTL", "power_in_waveguide": 1e-9,
                  "laser_detuning_grid": {"start": -10, "stop": 10, "points": 21}},
    }))
    sc = load_scenario(p)
    assert sc.emitter.beta == 0.9
    assert sc.emitter.strong_branch is EnergyBranch.LowEnergy
    assert math.isinf(sc.emitter.dephasing_tau_d)
    assert sc.drive.direction is Direction.RtoL
    np.testing.assert_allclose(sc.drive.detunings, np.linspace(-10, 10, 21))


@pytest.mark.parametrize("raw, path", [
    ({"emitter": {"beta": 1.5}}, "emitter.beta"),
    ({"emitter": {"beta_d_LR": 0.3}}, "emitter.beta_d_LR"),
    ({"emitter": {"beta": "high"}}, "emitter.beta"),
    ({"emitter": {"betta": 0.5}}, "emitter.betta"),
    ({"emitter": {"strong_branch": "middle"}}, "emitter.strong_branch"),
    ({"ensemble": {"quadrature_order": 4}}, "ensemble.quadrature_order"),
    ({"ensemble": {"quadrature_order": 5.0}}, "ensemble.quadrature_order"),
    ({"ensemble": {"p_dark": -0.1}}, "ensemble.p_dark"),
    ({"drive": {"direction": "up"}}, "drive.direction"),
    ({"drive": {"laser_detuning_grid": [0, 2, 1]}}, "drive.laser_detuning_grid"),
    ({"drive": {"laser_detuning_grid": {"start": 0}}}, "drive.laser_detuning_grid"),
    ({"cavity": {"mirror_reflectivity": 0.9, "mirror_transmissivity": 0.9}}, "cavity"),
    ({"lasers": {}}, "lasers"),
    ({"emitter": [1, 2]}, "emitter"),
])
def test_errors_name_the_field(raw, path):
    with pytest.raises(ConfigError) as exc:
        scenario_from_dict(raw)
    assert exc.value.path.startswith(path)
    assert str(exc.value).startswith(path)


def test_invalid_json(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{")
    with pytest.raises(ConfigError, match="invalid JSON"):
        load_scenario(p)
