"""Structured finite-volume meshes for flat, conical and spherical domains.

Every domain kind is a logically rectangular grid in coordinates (q1, q2):
Cartesian (x, y), polar (r, phi) with period 2*pi or the cone angle, or
colatitude/longitude on a sphere of radius 1/sqrt(kappa). Cells outside the
domain are masked out; faces between an active cell and the outside carry a
homogeneous Dirichlet condition placed on the face itself.

The discrete Laplacian is ``diag(1/vol) @ L`` where ``L`` is a symmetric
matrix with nonnegative off-diagonals and zero-or-negative row sums.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
import scipy.sparse as sp

from .errors import DomainError
from .geometry import theta_for_cone

KINDS = (
    "flat_rectangle",
    "flat_lshape",
    "flat_mask",
    "polar_disc",
    "polar_annulus",
    "cone_polar",
    "sphere_latlong",
)


@dataclass(frozen=True)
class DomainSpec:
    """Domain kind, its geometric parameters and cell counts (q1, q2)."""

    kind: str
    params: dict = field(default_factory=dict)
    resolution: tuple = (32, 32)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown domain kind {self.kind!r}; expected one of {KINDS}")
        res = tuple(int(n) for n in self.resolution)
        if len(res) != 2 or min(res) < 1:
            raise DomainError(f"resolution must be two positive cell counts, got {self.resolution!r}")
        object.__setattr__(self, "resolution", res)
        object.__setattr__(self, "params", dict(self.params))

    def refined(self, factor: int) -> "DomainSpec":
        return DomainSpec(self.kind, self.params, tuple(n * factor for n in self.resolution))

    @property
    def is_ball(self) -> bool:
        """True for meshes of a geodesic ball of the model space itself."""
        if self.kind == "polar_disc":
            return True
        return self.kind == "sphere_latlong" and self.params.get("region", "cap") == "cap"

    def default_theta(self) -> float:
        if self.kind == "cone_polar":
            return theta_for_cone(float(self.params.get("angle", 2 * math.pi)))
        return 1.0


@dataclass(eq=False)
class MeshedDomain:
    """Active cells of a structured grid with their metric data."""

    spec: DomainSpec
    theta: float
    kappa: float
    shape: tuple            # (n1, n2) of the full grid
    active: np.ndarray      # bool (n1, n2)
    volumes: np.ndarray     # (N,) active cell volumes
    coords: dict            # "x", "y", "r", "q1", "q2" at active cell centers
    h: float                # characteristic cell size
    faces: dict             # raw face data used by assemble_operator
    stiffness: Any = None   # L, symmetric (N, N)
    dirichlet_mask: Any = None

    @property
    def size(self) -> int:
        return int(self.volumes.size)

    @property
    def total_volume(self) -> float:
        return float(np.sum(self.volumes))

    @property
    def laplacian(self):
        return sp.diags(1.0 / self.volumes) @ self.stiffness

    def to_grid(self, values, fill=np.nan):
        """Scatter per-cell values back onto the full (n1, n2) grid."""
        out = np.full(self.shape, fill, dtype=float)
        out[self.active] = values
        return out

    def geodesic_distance(self, center):
        """Distance from every active cell center to ``center`` (native coords)."""
        kind = self.spec.kind
        q1, q2 = self.coords["q1"], self.coords["q2"]
        c1, c2 = float(center[0]), float(center[1])
        if kind == "cone_polar":
            alpha = float(self.spec.params.get("angle", 2 * math.pi))
            d = np.mod(np.abs(q2 - c2), alpha)
            d = np.minimum(d, alpha - d)
            straight = np.sqrt(np.maximum(q1 ** 2 + c1 ** 2 - 2 * q1 * c1 * np.cos(d), 0.0))
            return np.where(d < math.pi, straight, q1 + c1)
        if kind == "sphere_latlong":
            rho = 1.0 / math.sqrt(self.kappa)
            cosd = np.cos(q1) * math.cos(c1) + np.sin(q1) * math.sin(c1) * np.cos(q2 - c2)
            return rho * np.arccos(np.clip(cosd, -1.0, 1.0))
        return np.hypot(self.coords["x"] - c1, self.coords["y"] - c2)


def _uniform_edges(lo, hi, n):
    return np.linspace(lo, hi, n + 1)


def _flat_grid(x0, x1, y0, y1, nx, ny):
    ex, ey = _uniform_edges(x0, x1, nx), _uniform_edges(y0, y1, ny)
    hx, hy = (x1 - x0) / nx, (y1 - y0) / ny
    xc, yc = 0.5 * (ex[:-1] + ex[1:]), 0.5 * (ey[:-1] + ey[1:])
    X, Y = np.meshgrid(xc, yc, indexing="ij")
    shape = (nx, ny)
    grid = dict(
        vol=np.full(shape, hx * hy),
        len1=np.full((nx + 1, ny), hy), half1=np.full(shape, 0.5 * hx),
        len2=np.full((nx, ny + 1), hx), half2=np.full(shape, 0.5 * hy),
        q1=X, q2=Y, x=X, y=Y, r=np.hypot(X, Y), h=max(hx, hy),
    )
    return grid


def _polar_grid(r0, r1, period, nr, nphi):
    er = _uniform_edges(r0, r1, nr)
    dr, dphi = (r1 - r0) / nr, period / nphi
    rc = 0.5 * (er[:-1] + er[1:])
    phic = (np.arange(nphi) + 0.5) * dphi
    R, P = np.meshgrid(rc, phic, indexing="ij")
    shape = (nr, nphi)
    vol = np.outer(0.5 * (er[1:] ** 2 - er[:-1] ** 2) * dphi, np.ones(nphi))
    return dict(
        vol=vol,
        len1=np.outer(er * dphi, np.ones(nphi)), half1=np.full(shape, 0.5 * dr),
        len2=np.full((nr, nphi + 1), dr), half2=0.5 * R * dphi,
        q1=R, q2=P, x=R * np.cos(P), y=R * np.sin(P), r=R, h=dr,
    )


def _sphere_grid(l0, l1, rho, nl, nphi):
    el = _uniform_edges(l0, l1, nl)
    dl, dphi = (l1 - l0) / nl, 2 * math.pi / nphi
    lc = 0.5 * (el[:-1] + el[1:])
    phic = (np.arange(nphi) + 0.5) * dphi
    L, P = np.meshgrid(lc, phic, indexing="ij")
    shape = (nl, nphi)
    # exact spherical-zone areas
    vol = np.outer(rho ** 2 * (np.cos(el[:-1]) - np.cos(el[1:])) * dphi, np.ones(nphi))
    return dict(
        vol=vol,
        len1=np.outer(rho * np.sin(el) * dphi, np.ones(nphi)), half1=np.full(shape, 0.5 * rho * dl),
        len2=np.full((nl, nphi + 1), rho * dl), half2=0.5 * rho * np.sin(L) * dphi,
        q1=L, q2=P, x=rho * np.sin(L) * np.cos(P), y=rho * np.sin(L) * np.sin(P), r=rho * L,
        h=rho * dl,
    )


def _require(params, key, default=None, positive=False):
    if key not in params and default is None:
        raise DomainError(f"missing domain parameter {key!r}")
    value = params.get(key, default)
    try:
        if isinstance(value, (list, tuple)):
            value = [float(v) for v in value]
        else:
            value = float(value)
    except (TypeError, ValueError):
        raise DomainError(f"domain parameter {key!r} must be numeric, got {value!r}") from None
    if positive and np.any(np.asarray(value) <= 0):
        raise DomainError(f"domain parameter {key!r} must be > 0, got {value!r}")
    return value


def build_domain(spec: DomainSpec, theta: float | None = None,
                 kappa: float | None = None) -> MeshedDomain:
    """Mesh the domain and assemble its Dirichlet Laplacian."""
    p = spec.params
    n1, n2 = spec.resolution
    kind = spec.kind
    periodic = False
    bc1 = ("dirichlet", "dirichlet")
    bc2 = ("dirichlet", "dirichlet")
    if kind == "sphere_latlong":
        kappa = 1.0 if kappa is None else float(kappa)
        if kappa <= 0:
            raise DomainError("spherical domains need kappa > 0")
    else:
        kappa = 0.0 if kappa is None else float(kappa)
        if kappa != 0.0:
            raise DomainError(f"{kind} is a flat domain; kappa must be 0")

    if kind == "flat_rectangle":
        x0, x1 = _require(p, "x0", 0.0), _require(p, "x1", 1.0)
        y0, y1 = _require(p, "y0", 0.0), _require(p, "y1", 1.0)
        if x1 <= x0 or y1 <= y0:
            raise DomainError("rectangle needs x1 > x0 and y1 > y0")
        g = _flat_grid(x0, x1, y0, y1, n1, n2)
        active = np.ones((n1, n2), bool)
    elif kind == "flat_lshape":
        size = _require(p, "size", 1.0, positive=True)
        g = _flat_grid(0.0, size, 0.0, size, n1, n2)
        active = ~((g["x"] > 0.5 * size) & (g["y"] > 0.5 * size))
    elif kind == "flat_mask":
        g, active = _flat_mask(p, n1, n2)
    elif kind in ("polar_disc", "polar_annulus", "cone_polar"):
        periodic = True
        if kind == "polar_annulus":
            r0 = _require(p, "r_in", positive=True)
            r1 = _require(p, "r_out", positive=True)
            if r1 <= r0:
                raise DomainError("annulus needs r_out > r_in")
            inner = "dirichlet" if p.get("inner_dirichlet", True) else "natural"
            period = 2 * math.pi
        else:
            r0, r1 = 0.0, _require(p, "radius", 1.0, positive=True)
            inner = "natural"  # apex: the face has zero length
            period = _require(p, "angle", 2 * math.pi, positive=True) if kind == "cone_polar" else 2 * math.pi
            if period > 2 * math.pi * (1 + 1e-15):
                raise DomainError("cone angle must lie in (0, 2*pi]")
        g = _polar_grid(r0, r1, period, n1, n2)
        active = np.ones((n1, n2), bool)
        bc1 = (inner, "dirichlet")
    else:  # sphere_latlong
        periodic = True
        rho = 1.0 / math.sqrt(kappa)
        region = p.get("region", "cap")
        if region == "cap":
            l0, l1 = 0.0, _require(p, "colat_max", positive=True)
            bc1 = ("natural", "dirichlet" if l1 < math.pi else "natural")
        elif region == "band":
            l0, l1 = _require(p, "colat_min", positive=True), _require(p, "colat_max", positive=True)
            bc1 = ("dirichlet", "dirichlet")
        elif region == "mask":
            l0, l1 = 0.0, math.pi
            bc1 = ("natural", "natural")
        else:
            raise DomainError(f"unknown sphere region {region!r}; expected cap, band or mask")
        if not (0 <= l0 < l1 <= math.pi + 1e-15):
            raise DomainError("need 0 <= colat_min < colat_max <= pi")
        g = _sphere_grid(l0, min(l1, math.pi), rho, n1, n2)
        if region == "mask":
            c = _require(p, "center")
            rad = _require(p, "radius", positive=True)
            cosd = (np.cos(g["q1"]) * math.cos(c[0])
                    + np.sin(g["q1"]) * math.sin(c[0]) * np.cos(g["q2"] - c[1]))
            active = rho * np.arccos(np.clip(cosd, -1, 1)) < rad
        else:
            active = np.ones((n1, n2), bool)

    if not active.any():
        raise DomainError("domain has no interior cells at this resolution")
    if theta is None:
        theta = spec.default_theta()
    theta = float(theta)
    if not (0 < theta <= 1):
        raise DomainError(f"theta must lie in (0, 1], got {theta}")

    coords = {k: g[k][active] for k in ("x", "y", "r", "q1", "q2")}
    faces = dict(len1=g["len1"], half1=g["half1"], len2=g["len2"], half2=g["half2"],
                 bc1=bc1, bc2=bc2, periodic=periodic)
    mesh = MeshedDomain(spec=spec, theta=theta, kappa=kappa, shape=(n1, n2), active=active,
                        volumes=g["vol"][active], coords=coords, h=float(g["h"]), faces=faces)
    assemble_operator(mesh)
    return mesh


def _flat_mask(p, n1, n2):
    shape = p.get("shape", "disc")
    cx, cy = _require(p, "center", [0.0, 0.0])
    if shape == "disc":
        a = b = _require(p, "radius", 1.0, positive=True)
    elif shape == "ellipse":
        a, b = _require(p, "semi_axes", [1.0, 0.5], positive=True)
    elif shape == "annulus":
        a = b = _require(p, "r_out", 1.0, positive=True)
        r_in = _require(p, "r_in", positive=True)
        if r_in >= a:
            raise DomainError("annulus needs r_out > r_in")
    else:
        raise DomainError(f"unknown mask shape {shape!r}; expected disc, ellipse or annulus")
    g = _flat_grid(cx - a, cx + a, cy - b, cy + b, n1, n2)
    X, Y = g["x"] - cx, g["y"] - cy
    active = (X / a) ** 2 + (Y / b) ** 2 < 1.0
    if shape == "annulus":
        active &= np.hypot(X, Y) > r_in
    return g, active


def assemble_operator(mesh: MeshedDomain):
    """Build the symmetric stiffness ``L`` (Laplacian times cell volume).

    Interior faces couple the two cells with weight length/center-distance;
    a face between an active cell and the exterior adds length/half-width to
    that cell's diagonal only.
    """
    n1, n2 = mesh.shape
    f = mesh.faces
    active = mesh.active
    index = np.full(mesh.shape, -1, dtype=np.int64)
    index[active] = np.arange(active.sum())
    len1, half1, len2, half2 = f["len1"], f["half1"], f["len2"], f["half2"]

    rows, cols, vals = [], [], []
    diag = np.zeros(mesh.size)

    def couple(a_idx, b_idx, length, ha, hb):
        a_on, b_on = a_idx >= 0, b_idx >= 0
        both = a_on & b_on
        w = length[both] / (ha[both] + hb[both])
        rows.extend([a_idx[both], b_idx[both]])
        cols.extend([b_idx[both], a_idx[both]])
        vals.extend([w, w])
        np.add.at(diag, a_idx[both], -w)
        np.add.at(diag, b_idx[both], -w)
        only_a = a_on & ~b_on
        np.add.at(diag, a_idx[only_a], -length[only_a] / ha[only_a])
        only_b = b_on & ~a_on
        np.add.at(diag, b_idx[only_b], -length[only_b] / hb[only_b])

    # direction 1, interior faces i = 1..n1-1
    couple(index[:-1, :], index[1:, :], len1[1:-1, :], half1[:-1, :], half1[1:, :])
    # direction 1, grid boundary faces
    for side, bc in zip((0, -1), f["bc1"]):
        if bc == "dirichlet":
            idx = index[side, :]
            on = idx >= 0
            np.add.at(diag, idx[on], -len1[side, :][on] / half1[side, :][on])
    # direction 2
    couple(index[:, :-1], index[:, 1:], len2[:, 1:-1], half2[:, :-1], half2[:, 1:])
    if f["periodic"]:
        if n2 > 1:
            couple(index[:, -1], index[:, 0], len2[:, 0], half2[:, -1], half2[:, 0])
    else:
        for side, bc in zip((0, -1), f["bc2"]):
            if bc == "dirichlet":
                idx = index[:, side]
                on = idx >= 0
                np.add.at(diag, idx[on], -len2[:, side][on] / half2[:, side][on])

    off = sp.coo_matrix((np.concatenate(vals) if vals else np.zeros(0),
                         (np.concatenate(rows) if rows else np.zeros(0, int),
                          np.concatenate(cols) if cols else np.zeros(0, int))),
                        shape=(mesh.size, mesh.size)).tocsr()
    row_sum_off = np.asarray(off.sum(axis=1)).ravel()
    mesh.stiffness = (off + sp.diags(diag)).tocsr()
    mesh.dirichlet_mask = (-diag - row_sum_off) > 1e-14 * np.abs(diag)
    return mesh.stiffness

