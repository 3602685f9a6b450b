"""The symmetrized ball problem, solved two independent ways.

Route A solves the radial heat equation on the model ball in the geodesic
radius with a vertex-centred finite-volume scheme, then integrates the
decreasing rearrangement of the radial profile. Route B evolves the
concentration ``V(a, t)`` directly through

    V_t = Phi(a)^2 V'' + F(a),   V(0, t) = 0,   V'(A, t) = 0,

where ``Phi`` is the isoperimetric profile of the model space and ``F`` is
the concentration of the symmetrized source.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DomainError, SolverError
from .geometry import (
    SymmetrizationTarget,
    ball_radius,
    ball_volume,
    isoperimetric_profile,
    sphere_area,
)
from .heat import check_schedule, substeps
from .rearrangement import (
    StepFunction,
    WeightedField,
    decreasing_rearrangement,
    schwarz_profile,
)


@dataclass(frozen=True, eq=False)
class SymmetrizedProblem:
    """Ball volume ``A`` and the rearranged symmetrized data on ``[0, A]``."""

    target: SymmetrizationTarget
    A: float
    f_sharp_star: StepFunction
    g_sharp_star: StepFunction

    def __post_init__(self):
        if self.A > self.target.capacity * (1 + 1e-12):
            raise DomainError("ball volume exceeds the model capacity")
        for name in ("f_sharp_star", "g_sharp_star"):
            step = getattr(self, name)
            if not np.isclose(step.total_volume, self.A, rtol=1e-12, atol=0):
                raise DomainError(f"{name} must be defined on [0, A] with A = {self.A}")

    @classmethod
    def from_fields(cls, f: WeightedField, g: WeightedField, target: SymmetrizationTarget):
        """Symmetrize discrete data ``f`` and ``g`` living on the same domain."""
        if not np.isclose(f.total_volume, g.total_volume, rtol=1e-12, atol=0):
            raise DomainError("f and g must live on the same domain")
        fs = schwarz_profile(f, target).rearranged()
        gs = schwarz_profile(g, target).rearranged()
        A = fs.total_volume
        # equal up to summation order; align to one interval
        gs = StepFunction(np.append(gs.breaks[:-1], A), gs.values)
        return cls(target, A, fs, gs)

    @property
    def model(self):
        return self.target.model

    @property
    def radius(self) -> float:
        return float(ball_radius(self.model, self.A))


def _check_range(problem, a):
    a = np.asarray(a, dtype=float)
    if np.any(a < 0) or np.any(a > problem.A * (1 + 1e-12)):
        raise DomainError(f"volume coordinate must lie in [0, {problem.A}]")
    return np.minimum(a, problem.A)


def source_concentration(problem: SymmetrizedProblem, a):
    """``F(a) = int_0^a (f#)*(s) ds``."""
    return problem.f_sharp_star.integral(_check_range(problem, a))


def initial_V(problem: SymmetrizedProblem, a):
    """``V(a, 0) = int_0^a (g#)*(s) ds``."""
    return problem.g_sharp_star.integral(_check_range(problem, a))


@dataclass(frozen=True, eq=False)
class VSurface:
    """``values[j, i] = V(a_grid[i], times[j])``."""

    a_grid: np.ndarray
    times: np.ndarray
    values: np.ndarray

    @property
    def max_value(self) -> float:
        return float(np.max(self.values)) if self.values.size else 0.0


def a_grid_for(problem: SymmetrizedProblem, resolution: int) -> np.ndarray:
    return np.linspace(0.0, problem.A, int(resolution) + 1)


@dataclass(frozen=True, eq=False)
class RadialSolution:
    """Route-A output: nodal radial profiles and their dual-shell volumes."""

    problem: SymmetrizedProblem
    r: np.ndarray            # nodes 0 = r_0 < ... < r_K = R
    volumes: np.ndarray      # dual-shell volumes, summing to A
    times: np.ndarray
    values: np.ndarray       # (len(times), K + 1); last column is the boundary zero

    def weighted(self, j: int) -> WeightedField:
        return WeightedField(self.volumes, np.maximum(self.values[j], 0.0))

    def star(self, j: int) -> StepFunction:
        return decreasing_rearrangement(self.weighted(j))

    def surface(self, a_grid) -> VSurface:
        a_grid = np.asarray(a_grid, dtype=float)
        vals = np.array([self.star(j).integral(np.minimum(a_grid, self.star(j).total_volume))
                         for j in range(self.times.size)]).reshape(self.times.size, a_grid.size)
        return VSurface(a_grid, self.times.copy(), vals)

    def is_radially_nonincreasing(self, rtol: float = 1e-12) -> bool:
        scale = max(float(np.abs(self.values).max()), 1e-300)
        return bool(np.all(np.diff(self.values, axis=1) <= rtol * scale))


def _shell_averages(step: StepFunction, s_lo, s_hi):
    return (step.integral(s_hi) - step.integral(s_lo)) / (s_hi - s_lo)


def solve_v_radial(problem: SymmetrizedProblem, schedule, resolution: int, dt: float):
    """Route A: implicit Euler for the radial heat equation on the model ball."""
    times = check_schedule(schedule)
    K = int(resolution)
    if K < 2:
        raise DomainError("radial resolution must be >= 2")
    model = problem.model
    R = problem.radius
    r = np.linspace(0.0, R, K + 1)
    dr = R / K
    lo = np.maximum(r - 0.5 * dr, 0.0)
    hi = np.minimum(r + 0.5 * dr, R)
    s_lo, s_hi = ball_volume(model, lo), ball_volume(model, hi)
    s_hi[-1] = problem.A
    vol = s_hi - s_lo
    flux = sphere_area(model, r[:-1] + 0.5 * dr) / dr   # faces between node j and j+1

    f_bar = _shell_averages(problem.f_sharp_star, s_lo[:-1], s_hi[:-1])
    v = _shell_averages(problem.g_sharp_star, s_lo[:-1], s_hi[:-1])
    m = vol[:-1]
    w_left = np.concatenate(([0.0], flux[:-1]))

    cache = {}

    def banded(step):
        if step not in cache:
            ab = np.zeros((2, K))
            ab[0, 1:] = -step * flux[:-1]
            ab[1] = m + step * (w_left + flux)
            cache[step] = ab
        return cache[step]

    out = np.zeros((times.size, K + 1))
    t = 0.0
    for j, target in enumerate(times):
        n, step = substeps(target - t, dt)
        for _ in range(n):
            try:
                v = scipy.linalg.solveh_banded(banded(step), m * (v + step * f_bar))
            except np.linalg.LinAlgError as exc:
                raise SolverError(f"radial solve failed: {exc}") from exc
        t = float(target)
        out[j, :K] = v
    return RadialSolution(problem, r, vol, times.copy(), out)


def solve_V_direct(problem: SymmetrizedProblem, schedule, resolution: int, dt: float) -> VSurface:
    """Route B: implicit Euler for the degenerate concentration equation."""
    times = check_schedule(schedule)
    K = int(resolution)
    if K < 2:
        raise DomainError("volume-coordinate resolution must be >= 2")
    a = a_grid_for(problem, K)
    da = problem.A / K
    phi2 = np.asarray(isoperimetric_profile(problem.model, a[1:])) ** 2
    F = np.asarray(source_concentration(problem, a[1:]))
    V = np.asarray(initial_V(problem, a[1:]))

    cache = {}

    def banded(step):
        if step not in cache:
            c = step * phi2 / da ** 2
            ab = np.zeros((3, K))
            ab[1] = 1.0 + 2.0 * c
            ab[0, 1:] = -c[:-1]          # super-diagonal: row i couples to i+1
            ab[2, :-1] = -c[1:]          # sub-diagonal: row i+1 couples to i
            ab[2, K - 2] = -2.0 * c[-1]  # mirrored ghost at a = A
            cache[step] = ab
        return cache[step]

    out = np.zeros((times.size, K + 1))
    t = 0.0
    for j, target in enumerate(times):
        n, step = substeps(target - t, dt)
        for _ in range(n):
            try:
                V = scipy.linalg.solve_banded((1, 1), banded(step), V + step * F)
            except (np.linalg.LinAlgError, ValueError) as exc:
                raise SolverError(f"concentration solve failed: {exc}") from exc
        t = float(target)
        out[j, 1:] = V
    if not np.all(np.isfinite(out)):
        raise SolverError("concentration solve produced non-finite values")
    return VSurface(a, times.copy(), out)
