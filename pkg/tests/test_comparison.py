import math

import numpy as np
import pytest

from symmheat.comparison import (
    LpGap,
    UScan,
    compare,
    compute_U,
    equality_case_check,
    lp_gap,
    shape_defects,
)
from symmheat.domain import DomainSpec, build_domain
from symmheat.errors import ConfigError, DomainError
from symmheat.heat import FieldSnapshot
from symmheat.rearrangement import WeightedField
from symmheat.symmetrized import VSurface


def brute_U(volumes, values, theta, a):
    """Greedy fill of the highest cells up to volume theta * a."""
    order = np.argsort(-values)
    remaining, total = theta * a, 0.0
    for i in order:
        take = min(volumes[i], remaining)
        total += take * values[i]
        remaining -= take
        if remaining <= 0:
            break
    return total / theta


@pytest.mark.parametrize("theta", [1.0, 0.5])
def test_compute_U_against_greedy_fill(theta):
    m = build_domain(DomainSpec("cone_polar", {"angle": 2 * math.pi * theta}, (6, 10)))
    rng = np.random.default_rng(5)
    vals = np.round(rng.random(m.size), 1)
    a_grid = np.linspace(0, m.total_volume / theta, 37)
    scan = compute_U([FieldSnapshot(0.1, vals)], m, theta, a_grid)
    expected = [brute_U(m.volumes, vals, theta, a) for a in a_grid]
    np.testing.assert_allclose(scan.values[0], expected, rtol=1e-12, atol=1e-15)
    with pytest.raises(DomainError):
        compute_U([FieldSnapshot(0.1, vals)], m, theta, a_grid * 1.1)


def surfaces(u, v, a=(0.0, 0.5, 1.0), t=(0.1, 0.2)):
    a, t = np.array(a), np.array(t)
    return UScan(a, t, np.array(u, float)), VSurface(a, t, np.array(v, float))


def test_compare_locates_worst_point_and_skips_origin():
    u, v = surfaces([[5.0, 1.0, 2.0], [0.0, 3.0, 2.5]], [[0.0, 1.0, 2.0], [0.0, 2.0, 3.0]])
    rep = compare(u, v, tolerance=0.1)
    assert rep.global_max_gap == 1.0
    assert rep.worst == (0.5, 0.2)
    np.testing.assert_array_equal(rep.max_gap_per_time, [0.0, 1.0])
    assert rep.max_V == 3.0
    assert rep.tolerance == pytest.approx(0.3)
    assert rep.verdict == "fail" and rep.status == "fail"
    loose = compare(u, v, tolerance=0.5)
    assert loose.status == "pass-with-margin"
    clean = compare(*surfaces([[0, 1, 1], [0, 1, 1]], [[0, 1, 2], [0, 2, 2]]), tolerance=0.01)
    assert clean.status == "pass" and clean.global_max_gap == 0.0


def test_compare_lp_verdict():
    u, v = surfaces([[0, 1, 1], [0, 1, 1]], [[0, 1, 2], [0, 2, 2]])
    bad = LpGap(0.1, 2.0, lhs=1.1, rhs=1.0)
    assert bad.gap == pytest.approx(0.1)
    assert compare(u, v, 0.01, [bad]).verdict == "fail"
    assert compare(u, v, 0.01, [LpGap(0.1, 2.0, 1.005, 1.0)]).verdict == "pass"


def test_compare_refuses_mismatched_grids():
    u, _ = surfaces([[0, 1, 1]], [[0, 1, 1]], t=(0.1,))
    _, v = surfaces([[0, 1, 1]], [[0, 1, 1]], a=(0.0, 0.4, 1.0), t=(0.1,))
    with pytest.raises(ConfigError):
        compare(u, v, 0.01)
    _, v = surfaces([[0, 1, 1]], [[0, 1, 1]], t=(0.2,))
    with pytest.raises(ConfigError):
        compare(u, v, 0.01)


def test_lp_gap_values():
    m = build_domain(DomainSpec("flat_rectangle", {"x1": 2.0}, (2, 1)))
    snap = FieldSnapshot(0.5, np.array([1.0, 3.0]))
    ball = WeightedField([1.0, 1.0], [2.0, 2.0])
    g1 = lp_gap(snap, m, ball, 1.0, 1)
    assert (g1.lhs, g1.rhs, g1.time) == (4.0, 4.0, 0.5)
    g2 = lp_gap(snap, m, ball, 0.5, 2)
    assert g2.lhs == pytest.approx(math.sqrt(20.0)) and g2.rhs == pytest.approx(math.sqrt(8.0))
    ginf = lp_gap(snap, m, ball, 1.0, math.inf)
    assert (ginf.lhs, ginf.rhs) == (3.0, 2.0)
    with pytest.raises(DomainError):
        lp_gap(snap, m, ball, 1.0, 0.5)


def test_equality_check_requires_ball():
    u, v = surfaces([[0, 1, 2]], [[0, 1.5, 2]], t=(0.1,))
    disc = build_domain(DomainSpec("polar_disc", {}, (4, 4)))
    assert equality_case_check(u, v, disc) == 0.5
    square = build_domain(DomainSpec("flat_rectangle", {}, (4, 4)))
    with pytest.raises(ConfigError):
        equality_case_check(u, v, square)
    cone = build_domain(DomainSpec("cone_polar", {"angle": math.pi}, (4, 4)))
    with pytest.raises(ConfigError):
        equality_case_check(u, v, cone)


def test_shape_defects():
    assert shape_defects([0.0, 1.0, 1.5, 1.75], 1.0) <= (0.0, 0.0)
    dec, conv = shape_defects([0.0, 1.0, 0.5, 2.0], 2.0)
    assert dec == pytest.approx(0.25) and conv == pytest.approx(1.0)
    assert shape_defects([0.0, 1.0], 1.0) == (0.0, 0.0)
