import json
from dataclasses import replace

import numpy as np
import pytest

from fwguide import scenarios
from fwguide.errors import ConfigError, ConfigParseError, PhysicsError, SchemaError
from fwguide.scenarios import (
    load_preset,
    load_scenario,
    parse_scenario,
    preset_names,
    read_trajectory_csv,
    run_scenario,
    scenario_from_dict,
    scenario_to_dict,
    trajectory_to_csv,
    write_scenario,
)

from conftest import HEXAGON

PRESETS = ["sim1a-finite", "sim1a-gradient", "sim1a-noisy", "sim1b", "sim1c-adaptive",
           "sim1c-smc", "sim2a", "sim2b", "sim2c"]


def minimal(**extra):
    doc = {"name": "tiny", "beacons": {"positions": [list(p) for p in HEXAGON]}}
    doc.update(extra)
    return doc


def test_presets_ship():
    assert preset_names() == PRESETS


@pytest.mark.parametrize("name", PRESETS)
def test_preset_round_trip(name, tmp_path):
    sc = load_preset(name)
    path = write_scenario(sc, tmp_path / "s.json")
    assert load_scenario(path) == sc


def test_hexagon_and_sim2b_presets():
    sc = load_preset("sim1a-gradient")
    assert sc.beacons.positions == HEXAGON and sc.beacons.weights == (1.0,) * 6
    sc = load_preset("sim2b")
    assert sc.beacons.motion.velocity == (0.5, 0.3, 0.4)
    assert sc.initial.p == (5.0, 5.0, -3.0)
    assert (sc.law.k1, sc.law.k2) == (1.0, 1.0)


def test_defaults_are_echoed():
    sc = scenario_from_dict(minimal())
    doc = scenario_to_dict(sc)
    assert doc["law"]["kind"] == "gradient" and doc["dt"] == 1e-3
    assert doc["agent"] == "single" and doc["dimension"] == 2
    assert scenario_from_dict(json.loads(json.dumps(doc))) == sc


@pytest.mark.parametrize("doc, error", [
    ({"beacons": {"positions": [[0, 0]]}}, SchemaError),
    (minimal(extra=1), SchemaError),
    (minimal(law={"kind": "nope"}), SchemaError),
    (minimal(law={"k": "fast"}), SchemaError),
    (minimal(dt=-1), SchemaError),
    (minimal(initial={"mode": "explicit"}), SchemaError),
    (minimal(initial={"mode": "somewhere"}), SchemaError),
    (minimal(dimension=3), SchemaError),
    (minimal(seed=1.5), SchemaError),
])
def test_schema_errors(doc, error):
    with pytest.raises(error):
        scenario_from_dict(doc)


def test_parse_error():
    with pytest.raises(ConfigParseError):
        parse_scenario("{not json")


def _physics(doc):
    with pytest.raises(PhysicsError) as info:
        scenario_from_dict(doc).validate()
    return str(info.value)


def test_physics_errors():
    assert "collinear" in _physics({"name": "c", "beacons": {"positions": [[0, 0], [1, 1], [2, 2]]}})
    assert "duplicate" in _physics({"name": "d", "beacons": {"positions": [[0, 0], [0, 0], [1, 0], [0, 1]]}})
    assert "uniqueness" in _physics({"name": "e", "beacons": {"positions": [[0, 0], [1, 0], [0, 1]],
                                                              "weights": [5, 1, 1]}})
    sine = {"kind": "sinusoid", "offset": [0, 0], "amp": [1, 1], "freq": 1.0, "eta": 1.0}
    doc = minimal(law={"kind": "smc_si", "beta": 1.0})
    doc["beacons"]["motion"] = sine
    assert "beta" in _physics(doc)
    doc = minimal(law={"kind": "smc_si", "beta": 2.0})
    doc["beacons"]["motion"] = dict(sine, eta=0.5)
    assert "eta" in _physics(doc)
    assert "agent" in _physics(minimal(law={"kind": "pd_di"}, agent="single"))
    assert "guard" in _physics(minimal(initial={"p": [1.0, 1.0]}))


def test_unknown_preset_is_config_error():
    with pytest.raises(ConfigError):
        load_scenario("no-such-preset")


def test_random_initial_positions():
    sc = load_preset("sim1a-finite")
    R = sc.beacons.ball_radius(sc.ball_margin)
    for seed in range(20):
        p = replace(sc, seed=seed).initial_position()
        assert np.linalg.norm(p - sc.beacons.optimum) < R
    box = load_preset("sim1a-gradient")
    pts = np.array([replace(box, seed=s).initial_position() for s in range(20)])
    assert np.all(np.abs(pts) <= 3.0)
    np.testing.assert_array_equal(box.initial_position(), box.initial_position())


def test_csv_header_and_format(tmp_path):
    sc = replace(load_preset("sim1c-adaptive"), horizon=0.05)
    res = run_scenario(sc, tmp_path)
    raw = res.csv_path.read_bytes()
    assert b"\r" not in raw
    header = raw.split(b"\n", 1)[0].decode()
    assert header == "t,p0,p1,u0,u1,delta_norm,f,V,min_dist,beta"
    sc = replace(load_preset("sim2b"), horizon=0.05)
    header = trajectory_to_csv(sc.simulate()).split("\n", 1)[0]
    assert header == "t,p0,p1,p2,v0,v1,v2,u0,u1,u2,delta_norm,f,V,min_dist,vhat0,vhat1,vhat2"


def test_csv_round_trip_is_exact(tmp_path):
    sc = replace(load_preset("sim1b"), horizon=0.5)
    tr = sc.simulate()
    back = read_trajectory_csv(scenarios.write_trajectory_csv(tr, tmp_path / "t.csv"), sc)
    for name in ("t", "p", "u", "delta_norm", "f", "V", "min_dist", "vhat"):
        assert np.array_equal(getattr(tr, name), getattr(back, name)), name
    assert not back.collided


def test_report_contents(tmp_path):
    sc = replace(load_preset("sim1c-smc"), horizon=2.0)
    res = run_scenario(sc, tmp_path)
    report = json.loads(res.report_path.read_text())
    assert report["scenario"] == scenario_to_dict(sc)
    assert report["certificate"]["theorem"] == 5
    assert report["exit_code"] == res.exit_code


def test_sliding_mode_report_has_bound_and_beta_trace(tmp_path):
    res = run_scenario(load_preset("sim1c-smc"), tmp_path)
    assert set(res.report["beta_trace"]["beta"]) == {2.0}
    assert res.report["certificate"]["ultimate_bound_observed"] is not None


def test_collision_exit_code(tmp_path):
    res = run_scenario(replace(load_preset("sim1b"), seed=1), tmp_path)
    assert res.exit_code == scenarios.EXIT_COLLISION
    back = read_trajectory_csv(res.csv_path, replace(load_preset("sim1b"), seed=1))
    assert back.collided


def test_certificate_failure_exit_code():
    res = run_scenario(replace(load_preset("sim1a-gradient"), horizon=1.0))
    assert res.exit_code == scenarios.EXIT_CERTIFICATE


def test_batch_ordering_and_parallel_determinism(tmp_path):
    serial = scenarios.batch("sim1*", tmp_path / "a", jobs=1, horizon=0.5)
    parallel = scenarios.batch("sim1*", tmp_path / "b", jobs=3, horizon=0.5)
    names = [r["name"] for r in serial]
    assert names == sorted(names) and len(names) == 6
    assert [r["name"] for r in parallel] == names
    for n in names:
        assert (tmp_path / "a" / f"{n}.csv").read_bytes() == (tmp_path / "b" / f"{n}.csv").read_bytes()


def test_batch_accepts_files(tmp_path):
    write_scenario(replace(load_preset("sim2a"), name="zeta", horizon=0.2), tmp_path / "zeta.json")
    write_scenario(replace(load_preset("sim2a"), name="alpha", horizon=0.2), tmp_path / "alpha.json")
    rows = scenarios.batch(str(tmp_path / "*.json"))
    assert [r["name"] for r in rows] == ["alpha", "zeta"]
