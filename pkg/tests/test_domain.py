import math

import numpy as np
import pytest
import scipy.sparse as sp

from symmheat.domain import DomainSpec, build_domain
from symmheat.errors import DomainError
from symmheat.heat import heat_step, FieldSnapshot


def mesh(kind, res, **params):
    return build_domain(DomainSpec(kind, params, res))


ALL_MESHES = [
    ("flat_rectangle", (8, 6), {}),
    ("flat_lshape", (8, 8), {}),
    ("flat_mask", (16, 12), {"shape": "ellipse", "semi_axes": [1.0, 0.6]}),
    ("flat_mask", (16, 16), {"shape": "annulus", "r_in": 0.3, "r_out": 1.0}),
    ("polar_disc", (6, 12), {}),
    ("polar_annulus", (6, 12), {"r_in": 0.5, "r_out": 1.0}),
    ("polar_annulus", (6, 12), {"r_in": 0.5, "r_out": 1.0, "inner_dirichlet": False}),
    ("cone_polar", (6, 10), {"angle": math.pi}),
    ("sphere_latlong", (6, 12), {"region": "cap", "colat_max": 1.0}),
    ("sphere_latlong", (6, 12), {"region": "band", "colat_min": 0.5, "colat_max": 2.0}),
    ("sphere_latlong", (16, 16), {"region": "mask", "center": [1.2, 0.5], "radius": 0.8}),
]


@pytest.mark.parametrize("kind, res, params", ALL_MESHES)
def test_stiffness_is_symmetric_m_matrix(kind, res, params):
    m = mesh(kind, res, **params)
    L = m.stiffness.tocsr()
    assert abs(L - L.T).max() <= 1e-14 * abs(L).max()
    off = L - sp.diags(L.diagonal())
    assert off.min() >= 0
    assert np.all(L.diagonal() < 0)
    rows = np.asarray(L.sum(axis=1)).ravel()
    assert np.all(rows <= 1e-12 * abs(L.diagonal()).max())
    # -L is positive definite: every cell reaches the Dirichlet boundary
    assert np.linalg.eigvalsh(-L.toarray()).min() > 0
    assert m.dirichlet_mask.any()


@pytest.mark.parametrize("kind, res, params, area", [
    ("flat_rectangle", (7, 5), {"x1": 2.0, "y1": 3.0}, 6.0),
    ("flat_lshape", (8, 8), {"size": 2.0}, 3.0),
    ("polar_disc", (5, 7), {"radius": 2.0}, 4 * math.pi),
    ("polar_annulus", (5, 7), {"r_in": 0.5, "r_out": 1.0}, 0.75 * math.pi),
    ("cone_polar", (5, 7), {"angle": math.pi}, 0.5 * math.pi),
    ("sphere_latlong", (5, 7), {"colat_max": 1.0}, 2 * math.pi * (1 - math.cos(1.0))),
    ("sphere_latlong", (5, 7), {"region": "band", "colat_min": 0.5, "colat_max": 2.0},
     2 * math.pi * (math.cos(0.5) - math.cos(2.0))),
])
def test_volumes_are_exact(kind, res, params, area):
    assert mesh(kind, res, **params).total_volume == pytest.approx(area, rel=1e-14)


def test_masked_ellipse_area_converges():
    errs = [abs(mesh("flat_mask", (n, n), shape="ellipse", semi_axes=[1.0, 0.6]).total_volume
                - 0.6 * math.pi) for n in (32, 64, 128)]
    assert errs[2] < errs[0] and errs[2] < 2e-2


def test_sphere_cap_of_curved_sphere():
    m = build_domain(DomainSpec("sphere_latlong", {"colat_max": 1.0}, (4, 8)), kappa=0.25)
    assert m.total_volume == pytest.approx(8 * math.pi * (1 - math.cos(1.0)), rel=1e-14)
    with pytest.raises(DomainError):
        build_domain(DomainSpec("sphere_latlong", {"colat_max": 1.0}, (4, 8)), kappa=0.0)


def test_five_point_stencil():
    n = 8
    m = mesh("flat_rectangle", (n, n))
    lap = m.laplacian.toarray() / n ** 2
    grid = np.arange(n * n).reshape(n, n)
    interior = grid[3, 4]
    assert lap[interior, interior] == pytest.approx(-4.0)
    for nb in (grid[2, 4], grid[4, 4], grid[3, 3], grid[3, 5]):
        assert lap[interior, nb] == pytest.approx(1.0)
    # one Dirichlet face at half a cell: 3 neighbors plus 2 for the face
    edge = grid[0, 4]
    assert lap[edge, edge] == pytest.approx(-5.0)
    corner = grid[0, 0]
    assert lap[corner, corner] == pytest.approx(-6.0)


def test_single_cell_decay_factor():
    # one cell of width 1/3 with four Dirichlet faces: eigenvalue 8 / h^2 = 72
    m = build_domain(DomainSpec("flat_rectangle", {"x1": 1 / 3, "y1": 1 / 3}, (1, 1)))
    dt = 0.01
    u = heat_step(m, FieldSnapshot(0.0, np.array([1.0])), np.zeros(1), dt)
    assert u.values[0] == pytest.approx(1 / (1 + 72 * dt), rel=1e-14)


def test_polar_laplacian_of_radial_quadratic():
    # u = 1 - r^2 has Laplacian -4; cells away from the boundary see it exactly
    m = mesh("polar_disc", (16, 8))
    u = 1 - m.coords["r"] ** 2
    lap = m.laplacian @ u
    inner = m.coords["r"] < 0.9
    np.testing.assert_allclose(lap[inner], -4.0, rtol=1e-12)


def test_sphere_laplacian_of_first_harmonic():
    # cos(colat) is an eigenfunction with eigenvalue 2 on the unit sphere
    m = mesh("sphere_latlong", (200, 8), colat_max=2.5)
    u = np.cos(m.coords["q1"])
    lap = m.laplacian @ u
    inner = m.coords["q1"] < 2.3
    np.testing.assert_allclose(lap[inner], -2 * u[inner], atol=1e-4)


def test_lshape_removes_upper_right_quarter():
    m = mesh("flat_lshape", (8, 8))
    assert m.size == 48
    assert not np.any((m.coords["x"] > 0.5) & (m.coords["y"] > 0.5))
    grid = m.to_grid(np.ones(m.size))
    assert np.isnan(grid[7, 7]) and grid[0, 0] == 1.0


def test_geodesic_distance_on_cone_and_sphere():
    cone = mesh("cone_polar", (4, 8), angle=math.pi)
    d = cone.geodesic_distance([0.0, 0.0])
    np.testing.assert_allclose(d, cone.coords["r"])
    # unrolled sector of angle pi: two points a quarter turn apart on r = 1
    r, phi = cone.coords["q1"], cone.coords["q2"]
    i = np.flatnonzero((phi == phi.min()))[0]
    dist = cone.geodesic_distance([r[i], phi[i] + math.pi / 2])[i]
    assert dist == pytest.approx(math.sqrt(2) * r[i])
    # 3/4 of the way round is 1/4 the other way
    dist = cone.geodesic_distance([r[i], phi[i] + 0.75 * math.pi])[i]
    assert dist == pytest.approx(2 * r[i] * math.sin(math.pi / 8))

    cap = mesh("sphere_latlong", (4, 8), colat_max=1.0)
    np.testing.assert_allclose(cap.geodesic_distance([0.0, 0.0]), cap.coords["q1"], atol=1e-7)


def test_theta_and_refinement():
    spec = DomainSpec("cone_polar", {"angle": math.pi / 2}, (4, 4))
    assert build_domain(spec).theta == 0.25
    assert spec.refined(2).resolution == (8, 8)
    assert DomainSpec("polar_disc", {}, (4, 4)).is_ball
    assert DomainSpec("sphere_latlong", {"colat_max": 1.0}, (4, 4)).is_ball
    assert not DomainSpec("polar_annulus", {"r_in": 0.5, "r_out": 1}, (4, 4)).is_ball


@pytest.mark.parametrize("kind, params", [
    ("flat_rectangle", {"x1": -1.0}),
    ("polar_annulus", {"r_in": 1.0, "r_out": 0.5}),
    ("polar_annulus", {"r_out": 1.0}),
    ("cone_polar", {"angle": 7.0}),
    ("flat_mask", {"shape": "hexagon"}),
    ("flat_mask", {"shape": "disc", "radius": "big"}),
    ("sphere_latlong", {"region": "torus"}),
    ("sphere_latlong", {"region": "band", "colat_min": 2.0, "colat_max": 1.0}),
])
def test_bad_parameters(kind, params):
    with pytest.raises(DomainError):
        build_domain(DomainSpec(kind, params, (4, 4)))


def test_bad_spec():
    with pytest.raises(DomainError):
        DomainSpec("hexagon", {}, (4, 4))
    with pytest.raises(DomainError):
        DomainSpec("flat_rectangle", {}, (0, 4))
    with pytest.raises(DomainError):
        build_domain(DomainSpec("flat_rectangle", {}, (4, 4)), kappa=1.0)
