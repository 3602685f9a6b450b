import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from symmheat.acceptance import brute_force_ball_distribution, brute_force_rearrangement
from symmheat.errors import DomainError
from symmheat.geometry import ModelSpace, SymmetrizationTarget
from symmheat.rearrangement import (
    StepFunction,
    WeightedField,
    concentration,
    decreasing_rearrangement,
    distribution_function,
    hardy_littlewood_pair,
    rearrangement_value,
    schwarz_profile,
    step_product_integral,
    truncated_concentration_bound,
)


@st.composite
def fields(draw, n=None, ties=True):
    size = draw(st.integers(1, 40)) if n is None else n
    vols = draw(hnp.arrays(float, size, elements=st.floats(0.01, 3.0)))
    if ties:
        # small integer grid so that equal values occur often
        vals = draw(hnp.arrays(float, size, elements=st.integers(0, 6).map(float)))
    else:
        vals = draw(hnp.arrays(float, size, elements=st.floats(0.0, 5.0)))
    return WeightedField(vols, vals)


@st.composite
def field_pairs(draw):
    n = draw(st.integers(1, 30))
    vol = draw(st.floats(0.05, 2.0))
    f = draw(hnp.arrays(float, n, elements=st.floats(0.0, 4.0)))
    g = draw(hnp.arrays(float, n, elements=st.floats(0.0, 4.0)))
    return WeightedField(np.full(n, vol), f), WeightedField(np.full(n, vol), g)


def test_known_small_rearrangement():
    h = WeightedField.from_pairs([(1.0, 2.0), (0.5, 5.0), (2.0, 2.0), (1.0, 0.0)])
    star = decreasing_rearrangement(h)
    np.testing.assert_array_equal(star.breaks, [0.0, 0.5, 3.5, 4.5])
    np.testing.assert_array_equal(star.values, [5.0, 2.0, 0.0])
    assert rearrangement_value(star, 0.0) == 5.0
    assert star(0.5) == 2.0
    assert star.integral(1.0) == 3.5
    assert star.distribution(2.0) == 0.5
    assert star.distribution(1.0) == 3.5
    assert concentration(star, 2.0, theta=0.5) == pytest.approx(3.5 / 0.5)


@settings(max_examples=150, deadline=None)
@given(fields(), st.floats(0.0, 1.0))
def test_inf_formula_matches_brute_force(h, frac):
    star = decreasing_rearrangement(h)
    s = frac * h.total_volume
    assert star(s) == brute_force_rearrangement(h.volumes, h.values, s)[0]


@settings(max_examples=150, deadline=None)
@given(fields(), st.sampled_from([1.0, 2.0, 3.0, 0.5]))
def test_equimeasurable(h, p):
    star = decreasing_rearrangement(h)
    assert star.power_integral(p) == pytest.approx(h.power_integral(p), rel=1e-12, abs=1e-300)
    assert star.total_volume == pytest.approx(h.total_volume, rel=1e-12)


@settings(max_examples=150, deadline=None)
@given(fields(), st.floats(0.0, 7.0))
def test_distribution_identity(h, level):
    star = decreasing_rearrangement(h)
    assert star.distribution(level) == pytest.approx(distribution_function(h, level), rel=1e-12,
                                                     abs=1e-12)


@settings(max_examples=150, deadline=None)
@given(fields())
def test_rearrangement_nonincreasing_and_nonnegative(h):
    star = decreasing_rearrangement(h)
    s = np.linspace(0, h.total_volume, 101)
    v = star(s)
    assert np.all(np.diff(v) <= 0) and np.all(v >= 0)
    integral = star.integral(s)
    # concentration is nondecreasing and concave
    assert np.all(np.diff(integral) >= -1e-12)
    assert np.all(np.diff(integral, 2) <= 1e-12 * max(1.0, integral[-1]))


@settings(max_examples=100, deadline=None)
@given(fields(), st.sampled_from([1.0, 0.5, 0.25]), st.floats(0.0, 6.5))
def test_schwarz_measure_identity(h, theta, level):
    target = SymmetrizationTarget(ModelSpace(0.0, 2), theta)
    prof = schwarz_profile(h, target)
    mu = distribution_function(h, level)
    assert theta * prof.distribution(level) == pytest.approx(mu, rel=1e-12, abs=1e-12)
    shells = brute_force_ball_distribution(prof, level, shells=50)
    assert theta * shells == pytest.approx(mu, rel=1e-10, abs=1e-10)


def test_schwarz_profile_on_sphere():
    h = WeightedField([1.0, 2.0, 3.0], [3.0, 1.0, 2.0])
    prof = schwarz_profile(h, SymmetrizationTarget(ModelSpace(1.0, 2), 1.0))
    # cap of area 6: radius arccos(1 - 6 / (2 pi))
    assert prof.radius == pytest.approx(math.acos(1 - 6 / (2 * math.pi)), rel=1e-12)
    assert prof(0.0) == 3.0
    assert prof(prof.radius) == 1.0
    with pytest.raises(DomainError):
        schwarz_profile(WeightedField([20.0], [1.0]),
                        SymmetrizationTarget(ModelSpace(1.0, 2), 1.0))


def test_rearranged_profile_rescales_volumes():
    h = WeightedField([1.0, 1.0], [2.0, 1.0])
    prof = schwarz_profile(h, SymmetrizationTarget(ModelSpace(0.0, 2), 0.5))
    r = prof.rearranged()
    np.testing.assert_array_equal(r.breaks, [0.0, 2.0, 4.0])
    assert prof.radius == pytest.approx(math.sqrt(4 / math.pi))


@settings(max_examples=150, deadline=None)
@given(field_pairs())
def test_hardy_littlewood(pair):
    f, g = pair
    lhs, rhs = hardy_littlewood_pair(f, g)
    assert lhs <= rhs * (1 + 1e-12) + 1e-300
    # with equal cell volumes the bound is the sorted dot product
    vol = f.volumes[0]
    assert rhs == pytest.approx(vol * np.dot(np.sort(f.values), np.sort(g.values)), rel=1e-12,
                                abs=1e-300)


@settings(max_examples=150, deadline=None)
@given(field_pairs(), st.floats(0.0, 4.0))
def test_truncated_bound(pair, level):
    f, h = pair
    lhs, rhs = truncated_concentration_bound(f, h, level)
    assert lhs <= rhs * (1 + 1e-12) + 1e-300


def test_truncated_bound_tight_when_sets_align():
    f = WeightedField([1.0, 1.0, 1.0], [3.0, 2.0, 1.0])
    lhs, rhs = truncated_concentration_bound(f, f, 1.5)
    assert lhs == rhs == 5.0


def test_step_product_integral():
    a = StepFunction([0.0, 1.0, 3.0], [2.0, 1.0])
    b = StepFunction([0.0, 2.0, 3.0], [4.0, 0.0])
    assert step_product_integral(a, b) == 2 * 4 + 1 * 4


@pytest.mark.parametrize("vols, vals", [
    ([1.0, -1.0], [1.0, 1.0]),
    ([1.0], [-0.5]),
    ([1.0], [math.nan]),
    ([1.0, 2.0], [1.0]),
    ([], []),
])
def test_weighted_field_rejects_bad_input(vols, vals):
    with pytest.raises(DomainError):
        WeightedField(vols, vals)


def test_step_function_validation_and_range():
    with pytest.raises(DomainError):
        StepFunction([0.0, 1.0, 2.0], [1.0, 1.0])
    star = StepFunction([0.0, 1.0], [1.0])
    with pytest.raises(DomainError):
        star(1.5)
    with pytest.raises(DomainError):
        star.integral(-0.1)
    with pytest.raises(DomainError):
        concentration(star, 3.0, theta=0.5)
    with pytest.raises(DomainError):
        concentration(star, 0.5, theta=0.0)


def test_mismatched_cells_rejected():
    with pytest.raises(DomainError):
        hardy_littlewood_pair(WeightedField([1.0], [1.0]), WeightedField([2.0], [1.0]))
    with pytest.raises(DomainError):
        truncated_concentration_bound(WeightedField([1.0], [1.0]), WeightedField([1.0], [1.0]), -1)
