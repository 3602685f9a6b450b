import numpy as np
import pytest

from symmheat.config import parse_scenario
from symmheat.pipeline import perturb_surface, run_scenario, run_sweep, shrink_ok
from symmheat.symmetrized import VSurface


def small(**changes):
    raw = {"name": "t", "domain": {"kind": "polar_annulus", "r_in": 0.5, "r_out": 1.0,
                                   "resolution": [8, 16]},
           "f": 1, "g": {"preset": "gaussian", "center": [0, 0.75], "width": 0.2},
           "dt": 0.01, "times": [0.01, 0.02, 0.05, 0.1, 0.2], "symmetrized_resolution": 64}
    raw.update(changes)
    return parse_scenario(raw)


def test_scenario_checks_all_pass():
    res = run_scenario(small())
    assert res.passed, res.failures()
    assert set(res.checks) == {"comparison", "lp_corollary", "two_route", "initial_identity",
                               "maximum_principle", "maximum_principle_ball", "shape"}
    # the ball solution dominates: V - U >= 0 up to discretization error
    assert res.report.global_max_gap <= 1e-2 * res.report.max_V
    assert res.u_scan.values.shape == (5, 65)
    assert len(res.report.lp_gaps) == 15


def test_equality_check_attached_for_disc():
    cfg = small(domain={"kind": "polar_disc", "resolution": [16, 16]},
                g={"preset": "radial_poly", "coeffs": [1, 0, -1]},
                flags={"equality_case": True})
    res = run_scenario(cfg)
    assert "equality_gap" in res.checks and res.checks["equality_gap"][0]


@pytest.mark.parametrize("values, ok", [
    ([4.0, 2.0, 1.0], True),
    ([4.0, 3.0, 1.0], False),
    ([0.0, 0.0, 0.0], True),
    ([1.0, 0.0, 0.0], True),
    ([0.0, 1.0, 0.1], False),
])
def test_shrink_rule(values, ok):
    assert shrink_ok(values, 1.5, floor=1e-12) is ok


def test_perturbation_is_seeded():
    s = VSurface(np.linspace(0, 1, 5), np.array([0.1]), np.ones((1, 5)))
    a = perturb_surface(s, 3, 0.1)
    b = perturb_surface(s, 3, 0.1)
    assert np.array_equal(a.values, b.values) and not np.array_equal(a.values, s.values)


def test_sweep_levels_refine():
    cfg = small(flags={"refinement_sweep": True}, dt=0.016, sweep_levels=2)
    levels, ok = run_sweep(cfg)
    assert [lv.level for lv in levels] == [0, 1]
    assert levels[1].h == pytest.approx(levels[0].h / 2)
    assert levels[1].dt == pytest.approx(levels[0].dt / 4)
