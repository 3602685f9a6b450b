"""End-to-end scenario runs: mesh, solve, rearrange, symmetrize, compare."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .comparison import (
    ComparisonReport,
    UScan,
    compare,
    compute_U,
    equality_case_check,
    lp_gap,
    shape_defects,
)
from .config import ScenarioConfig
from .domain import MeshedDomain, build_domain
from .geometry import ModelSpace, SymmetrizationTarget
from .heat import NEGATIVE_TOL, FieldSnapshot, min_relative_value, solve_heat
from .rearrangement import WeightedField
from .sources import evaluate_source
from .symmetrized import (
    RadialSolution,
    SymmetrizedProblem,
    VSurface,
    a_grid_for,
    initial_V,
    solve_V_direct,
    solve_v_radial,
)

log = logging.getLogger(__name__)

LP_EXPONENTS = (1.0, 2.0, math.inf)
SHAPE_TOL = 1e-10
T0_TOL = 1e-12


@dataclass(eq=False)
class ScenarioResult:
    config: ScenarioConfig
    mesh: MeshedDomain
    snapshots: list
    problem: SymmetrizedProblem
    radial: RadialSolution
    v_surface: VSurface          # route A, the reference
    v_direct: VSurface           # route B
    u_scan: UScan
    report: ComparisonReport
    route_gap: float             # sup |V_direct - V_radial| / max V
    checks: dict = field(default_factory=dict)   # name -> (ok, value)
    elapsed: float = 0.0

    @property
    def passed(self) -> bool:
        return all(ok for ok, _ in self.checks.values())

    def failures(self):
        return [f"{k} ({v:.3e})" for k, (ok, v) in self.checks.items() if not ok]


def perturb_surface(surface: VSurface, seed: int, amplitude: float) -> VSurface:
    """Seeded multiplicative noise; a fault-injection hook for self-tests."""
    rng = np.random.default_rng(seed)
    noise = 1.0 + amplitude * rng.standard_normal(surface.values.shape)
    return VSurface(surface.a_grid, surface.times, surface.values * noise)


def run_scenario(cfg: ScenarioConfig) -> ScenarioResult:
    start = time.perf_counter()
    mesh = build_domain(cfg.domain, cfg.theta, cfg.kappa)
    fv = evaluate_source(cfg.f, mesh, f"{cfg.name}.f")
    gv = evaluate_source(cfg.g, mesh, f"{cfg.name}.g")
    snapshots = solve_heat(mesh, fv, gv, cfg.times, cfg.dt, cfg.linear_solver)

    target = SymmetrizationTarget(ModelSpace(cfg.kappa, cfg.n), cfg.theta)
    problem = SymmetrizedProblem.from_fields(
        WeightedField(mesh.volumes, fv), WeightedField(mesh.volumes, gv), target)
    K = cfg.symmetrized_resolution
    a_grid = a_grid_for(problem, K)
    radial = solve_v_radial(problem, cfg.times, K, cfg.dt)
    v_surface = radial.surface(a_grid)
    v_direct = solve_V_direct(problem, cfg.times, K, cfg.dt)
    if cfg.perturbation and cfg.perturbation.get("amplitude", 0.0) > 0:
        v_direct = perturb_surface(v_direct, cfg.perturbation["seed"],
                                   cfg.perturbation["amplitude"])

    u_scan = compute_U(snapshots, mesh, cfg.theta, a_grid)
    gaps = [lp_gap(snap, mesh, radial.weighted(j), cfg.theta, p)
            for j, snap in enumerate(snapshots) for p in LP_EXPONENTS]
    report = compare(u_scan, v_surface, cfg.tolerance, gaps)

    vmax = max(v_surface.max_value, 1e-300)
    route_gap = float(np.max(np.abs(v_direct.values - v_surface.values))) / vmax
    checks = {
        "comparison": (report.global_max_gap <= report.tolerance,
                       report.global_max_gap / vmax),
        "lp_corollary": (report.lp_ok, max((g.gap / max(g.rhs, 1e-300) for g in gaps),
                                           default=0.0)),
        "two_route": (route_gap <= cfg.route_tolerance, route_gap),
    }

    # t = 0: U(a, 0) from g on the domain against the symmetrized initial data
    u0 = compute_U([FieldSnapshot(0.0, gv)], mesh, cfg.theta, a_grid).values[0]
    v0 = np.asarray(initial_V(problem, a_grid))
    t0_gap = float(np.max(np.abs(u0 - v0))) / max(float(np.max(np.abs(v0))), 1e-300)
    checks["initial_identity"] = (t0_gap <= T0_TOL, t0_gap)

    dmp = min(min_relative_value(s.values) for s in snapshots)
    checks["maximum_principle"] = (dmp >= -NEGATIVE_TOL, dmp)
    dmp_ball = min_relative_value(radial.values)
    checks["maximum_principle_ball"] = (dmp_ball >= -NEGATIVE_TOL, dmp_ball)

    worst_shape = max(max(shape_defects(s.values, vmax))
                      for s in (u_scan, v_surface, v_direct))
    checks["shape"] = (worst_shape <= SHAPE_TOL, worst_shape)

    if cfg.flags.equality_case:
        report.equality_gap = equality_case_check(u_scan, v_surface, mesh)
        checks["equality_gap"] = (report.equality_gap <= cfg.tolerance * vmax,
                                  report.equality_gap / vmax)

    result = ScenarioResult(cfg, mesh, snapshots, problem, radial, v_surface, v_direct,
                            u_scan, report, route_gap, checks)
    result.elapsed = time.perf_counter() - start
    log.info("%s: %s, max(U-V)/maxV = %.3e, route gap %.3e, %.1fs", cfg.name,
             "pass" if result.passed else "FAIL", report.global_max_gap / vmax,
             route_gap, result.elapsed)
    return result


@dataclass
class SweepLevel:
    level: int
    h: float
    dt: float
    max_gap_pos: float
    equality_gap: float | None
    max_V: float
    result: ScenarioResult | None = None


def shrink_ok(values, factor: float = 1.5, floor: float = 0.0) -> bool:
    """Each value is at least ``factor`` times smaller than the previous one.

    Values at or below ``floor`` count as fully resolved: a resolved level may
    only be followed by another resolved level.
    """
    for prev, nxt in zip(values, values[1:]):
        if nxt <= floor:
            continue
        if prev <= floor or prev / nxt < factor:
            return False
    return True


SWEEP_FACTOR = 1.5
SWEEP_FLOOR_REL = 1e-10


def run_sweep(cfg: ScenarioConfig, keep_results: bool = False):
    """Run levels h, h/2, ... with dt ~ h^2; return (levels, passed)."""
    levels = []
    for k in range(cfg.sweep_levels):
        res = run_scenario(cfg.refined(k))
        rep = res.report
        levels.append(SweepLevel(
            level=k, h=res.mesh.h, dt=res.config.dt,
            max_gap_pos=max(rep.global_max_gap, 0.0),
            equality_gap=rep.equality_gap, max_V=rep.max_V,
            result=res if keep_results else None))
    floor = SWEEP_FLOOR_REL * max(lv.max_V for lv in levels)
    ok = shrink_ok([lv.max_gap_pos for lv in levels], SWEEP_FACTOR, floor)
    if cfg.flags.equality_case:
        ok &= shrink_ok([lv.equality_gap for lv in levels], SWEEP_FACTOR, floor)
    return levels, ok
