"""Concentration of the domain solution and its comparison with the ball."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .domain import MeshedDomain
from .errors import ConfigError, DomainError
from .heat import FieldSnapshot, field_as_weighted
from .rearrangement import WeightedField, decreasing_rearrangement
from .symmetrized import VSurface


@dataclass(frozen=True, eq=False)
class UScan:
    """``values[j, i] = (1/theta) int_0^{theta a_i} u*(s, t_j) ds``."""

    a_grid: np.ndarray
    times: np.ndarray
    values: np.ndarray


@dataclass(frozen=True)
class LpGap:
    time: float
    p: float
    lhs: float
    rhs: float

    @property
    def gap(self) -> float:
        return self.lhs - self.rhs


@dataclass(eq=False)
class ComparisonReport:
    times: np.ndarray
    max_gap_per_time: np.ndarray      # max over a > 0 of U - V
    global_max_gap: float
    worst: tuple                      # (a, t) where the global max is attained
    max_V: float
    tolerance_rel: float
    lp_gaps: list = field(default_factory=list)
    equality_gap: float | None = None

    @property
    def tolerance(self) -> float:
        """Absolute tolerance on U - V."""
        return self.tolerance_rel * self.max_V

    @property
    def lp_ok(self) -> bool:
        return all(g.gap <= self.tolerance_rel * g.rhs for g in self.lp_gaps)

    @property
    def verdict(self) -> str:
        return "pass" if self.global_max_gap <= self.tolerance and self.lp_ok else "fail"

    @property
    def status(self) -> str:
        """``pass``, ``pass-with-margin`` (0 < gap <= tolerance) or ``fail``."""
        if self.verdict == "fail":
            return "fail"
        return "pass-with-margin" if self.global_max_gap > 0 else "pass"


def compute_U(snapshots, mesh: MeshedDomain, theta: float, a_grid) -> UScan:
    """Rearrange each snapshot and integrate it up to ``theta * a``."""
    a_grid = np.asarray(a_grid, dtype=float)
    total = mesh.total_volume
    if theta * a_grid[-1] > total * (1 + 1e-12):
        raise DomainError("a-grid extends beyond |Omega| / theta")
    rows = []
    for snap in snapshots:
        star = decreasing_rearrangement(field_as_weighted(snap, mesh))
        s = np.minimum(theta * a_grid, star.total_volume)
        rows.append(star.integral(s) / theta)
    times = np.array([s.time for s in snapshots], dtype=float)
    values = np.array(rows, dtype=float).reshape(len(snapshots), a_grid.size)
    return UScan(a_grid, times, values)


def _check_grids(u_scan, v_surface):
    if u_scan.a_grid.shape != v_surface.a_grid.shape or not np.array_equal(
            u_scan.a_grid, v_surface.a_grid):
        raise ConfigError("U and V live on different a-grids; refusing to interpolate")
    if not np.array_equal(u_scan.times, v_surface.times):
        raise ConfigError("U and V have different snapshot times; refusing to interpolate")


def compare(u_scan: UScan, v_surface: VSurface, tolerance: float, lp_gaps=()) -> ComparisonReport:
    """Grid maxima of ``U - V`` over ``a > 0``; ``tolerance`` is relative to max V."""
    _check_grids(u_scan, v_surface)
    diff = u_scan.values - v_surface.values
    inner = diff[:, 1:] if diff.shape[1] > 1 else diff
    per_time = inner.max(axis=1) if inner.size else np.zeros(0)
    if inner.size:
        j, i = np.unravel_index(np.argmax(inner), inner.shape)
        worst = (float(u_scan.a_grid[i + (1 if diff.shape[1] > 1 else 0)]),
                 float(u_scan.times[j]))
        gmax = float(inner[j, i])
    else:
        worst, gmax = (math.nan, math.nan), 0.0
    return ComparisonReport(
        times=u_scan.times.copy(),
        max_gap_per_time=per_time,
        global_max_gap=gmax,
        worst=worst,
        max_V=v_surface.max_value,
        tolerance_rel=float(tolerance),
        lp_gaps=list(lp_gaps),
    )


def _lp_norm(volumes, values, p, scale=1.0):
    values = np.maximum(np.asarray(values, float), 0.0)
    if math.isinf(p):
        return float(values.max()) if values.size else 0.0
    return float((np.sum(volumes * values ** p) / scale) ** (1.0 / p))


def lp_gap(snapshot_u: FieldSnapshot, mesh: MeshedDomain, v_ball: WeightedField,
           theta: float, p: float, time: float | None = None) -> LpGap:
    """``((1/theta) int u^p)^(1/p)`` against ``(int_ball v^p)^(1/p)``."""
    p = float(p)
    if not p >= 1:
        raise DomainError(f"p must lie in [1, inf], got {p}")
    lhs = _lp_norm(mesh.volumes, snapshot_u.values, p, scale=theta)
    rhs = _lp_norm(v_ball.volumes, v_ball.values, p)
    return LpGap(snapshot_u.time if time is None else time, p, lhs, rhs)


def equality_case_check(u_scan: UScan, v_surface: VSurface, mesh: MeshedDomain) -> float:
    """``max |U - V|`` for a ball scenario with theta = 1."""
    if not mesh.spec.is_ball or mesh.theta != 1.0:
        raise ConfigError("equality check needs a polar-disc or spherical-cap mesh with theta = 1",
                          "flags.equality_case")
    _check_grids(u_scan, v_surface)
    return float(np.max(np.abs(u_scan.values - v_surface.values))) if u_scan.values.size else 0.0


def shape_defects(values, scale):
    """Worst violations of monotonicity and concavity in ``a`` (both <= 0 when fine)."""
    values = np.asarray(values, float)
    if values.shape[-1] < 3:
        return 0.0, 0.0
    scale = max(float(scale), 1e-300)
    decrease = float(np.max(-np.diff(values, axis=-1))) / scale
    convexity = float(np.max(np.diff(values, n=2, axis=-1))) / scale
    return decrease, convexity
