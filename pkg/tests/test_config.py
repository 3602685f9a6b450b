import json
import math
from importlib import resources

import pytest

from symmheat.config import DEFAULT_TIMES, dump_config, load_config, parse_config, parse_scenario
from symmheat.errors import ConfigError

BASE = {"name": "s", "domain": {"kind": "flat_rectangle", "resolution": [8, 8]}, "f": 1, "g": 0}


def scenario(**changes):
    raw = json.loads(json.dumps(BASE))
    raw.update(changes)
    return raw


def test_defaults_filled_in():
    cfg = parse_scenario(scenario())
    assert cfg.theta == 1.0 and cfg.kappa == 0.0 and cfg.n == 2
    assert cfg.times == DEFAULT_TIMES
    assert cfg.tolerance == 1e-2 and cfg.linear_solver == "direct"
    assert cfg.f.to_config() == {"preset": "constant", "c": 1.0}


def test_theta_derived_from_cone():
    cfg = parse_scenario(scenario(domain={"kind": "cone_polar", "angle": math.pi,
                                          "resolution": [8, 8]}))
    assert cfg.theta == 0.5


@pytest.mark.parametrize("changes, field", [
    ({"theta": 0.5}, "theta"),
    ({"kappa": 1.0}, "kappa"),
    ({"domain": {"kind": "sphere_latlong", "colat_max": 1.0, "resolution": [8, 8]}}, "kappa"),
    ({"domain": {"kind": "cone_polar", "angle": math.pi, "resolution": [8, 8]}, "theta": 1.0},
     "theta"),
    ({"n": 3}, "n"),
    ({"dt": 0}, "dt"),
    ({"dt": "fast"}, "dt"),
    ({"times": [0.1, 0.05]}, "times"),
    ({"times": []}, "times"),
    ({"tolerance": -1}, "tolerance"),
    ({"linear_solver": "gmres"}, "linear_solver"),
    ({"flags": {"equality_case": True}}, "flags.equality_case"),
    ({"flags": {"bogus": True}}, "flags"),
    ({"flags": {"equality_case": "yes"}}, "flags.equality_case"),
    ({"domain": {"kind": "hexagon", "resolution": [8, 8]}}, "domain.kind"),
    ({"domain": {"kind": "flat_rectangle", "resolution": [2, 8]}}, "domain.resolution"),
    ({"domain": {"kind": "flat_rectangle", "resolution": 8}}, "domain.resolution"),
    ({"g": "x +"}, ".g"),
    ({"f": {"preset": "sawtooth"}}, ".f"),
    ({"f": True}, ".f"),
    ({"symmetrized_resolution": 2}, "symmetrized_resolution"),
    ({"sweep_levels": 1.5}, "sweep_levels"),
    ({"perturbation": {"seed": 1, "size": 2}}, "perturbation"),
    ({"colour": "blue"}, "colour"),
    ({"name": ""}, "name"),
])
def test_validation_names_the_field(changes, field):
    with pytest.raises(ConfigError) as info:
        parse_scenario(scenario(**changes))
    assert field in str(info.value)


def test_equality_case_allowed_on_disc_and_cap():
    disc = parse_scenario(scenario(domain={"kind": "polar_disc", "resolution": [8, 8]},
                                   flags={"equality_case": True}))
    assert disc.flags.equality_case
    cap = parse_scenario(scenario(domain={"kind": "sphere_latlong", "colat_max": 1.0,
                                          "resolution": [8, 8]}, kappa=1.0,
                                  flags={"equality_case": True}))
    assert cap.kappa == 1.0


def test_defaults_and_duplicates():
    cfgs = parse_config({"defaults": {"dt": 0.01, "f": 2},
                         "scenarios": [scenario(name="a"), {**scenario(name="b"), "dt": 0.02}]})
    assert [c.dt for c in cfgs] == [0.01, 0.02]
    with pytest.raises(ConfigError, match="duplicate"):
        parse_config({"scenarios": [scenario(), scenario()]})
    with pytest.raises(ConfigError, match="scenarios"):
        parse_config({"scenarios": []})
    with pytest.raises(ConfigError, match="unknown top-level"):
        parse_config({"scenarios": [scenario()], "extra": 1})


def test_round_trip_is_exact():
    cfgs = parse_config({"scenarios": [
        scenario(name="a", g={"preset": "gaussian", "center": [0.3, 0.4], "width": 0.15},
                 times=[0.01, 0.02], perturbation={"seed": 3, "amplitude": 0.1}),
        scenario(name="b", f="1 + x*y", domain={"kind": "cone_polar", "angle": 2.0,
                                                 "resolution": [8, 8]}),
    ]})
    again = parse_config(json.loads(dump_config(cfgs)))
    assert again == cfgs
    assert dump_config(again) == dump_config(cfgs)


@pytest.mark.parametrize("name", ["suite.json", "sweep.json", "equality.json"])
def test_bundled_configs_parse_and_round_trip(name):
    with resources.as_file(resources.files("symmheat").joinpath("configs", name)) as path:
        cfgs = load_config(path)
    assert cfgs and parse_config(json.loads(dump_config(cfgs))) == cfgs


def test_load_reports_json_position(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{"name": "x",\n  "dt": }')
    with pytest.raises(ConfigError, match="line 2, column 9"):
        load_config(p)
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "missing.json")


def test_refined_levels():
    cfg = parse_scenario(scenario(dt=0.016, symmetrized_resolution=64))
    lv = cfg.refined(2)
    assert lv.domain.resolution == (32, 32)
    assert lv.dt == pytest.approx(0.001)
    assert lv.symmetrized_resolution == 256
    assert cfg.refined(1, scale_dt=False).dt == 0.016
