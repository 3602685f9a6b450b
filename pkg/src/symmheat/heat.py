"""Implicit Euler time stepping for ``u_t - Δu = f`` with zero Dirichlet data.

Each step solves the symmetric positive definite system

    (V - dt L) u_new = V (u + dt f)

where ``V`` holds the cell volumes and ``L`` is the mesh stiffness. The
matrix is an M-matrix, so nonnegative data stay nonnegative.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .domain import MeshedDomain
from .errors import DomainError, SolverError
from .rearrangement import WeightedField
from .sources import SourceSpec, evaluate_source

log = logging.getLogger(__name__)

SOLVERS = ("direct", "pcg", "cg")
CG_RTOL = 1e-10
NEGATIVE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class FieldSnapshot:
    time: float
    values: np.ndarray


def conjugate_gradient(A, b, x0=None, rtol=CG_RTOL, maxiter=None, inv_diag=None):
    """Solve ``A x = b`` for SPD ``A``; ``inv_diag`` enables Jacobi preconditioning.

    Returns ``(x, iterations)``. Raises SolverError when the relative residual
    does not reach ``rtol`` within ``maxiter`` (default 10 * N) iterations.
    """
    n = b.size
    maxiter = 10 * n if maxiter is None else maxiter
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros(n), 0
    r = b - A @ x
    z = r * inv_diag if inv_diag is not None else r
    p = z.copy()
    rz = r @ z
    for k in range(1, maxiter + 1):
        if np.linalg.norm(r) <= rtol * bnorm:
            return x, k - 1
        Ap = A @ p
        alpha = rz / (p @ Ap)
        x += alpha * p
        r -= alpha * Ap
        z = r * inv_diag if inv_diag is not None else r
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    if np.linalg.norm(r) <= rtol * bnorm:
        return x, maxiter
    raise SolverError(
        f"conjugate gradient did not converge in {maxiter} iterations "
        f"(relative residual {np.linalg.norm(r) / bnorm:.3e})")


class ImplicitEuler:
    """Cached implicit-Euler system solves on one mesh.

    ``solver`` is ``"direct"`` (sparse LU with diagonal pivots, factorized once
    per step size), ``"pcg"`` (Jacobi-preconditioned CG) or ``"cg"``.
    """

    def __init__(self, mesh: MeshedDomain, solver: str = "direct"):
        if solver not in SOLVERS:
            raise DomainError(f"unknown linear solver {solver!r}; expected one of {SOLVERS}")
        self.mesh = mesh
        self.solver = solver
        self._cache = {}
        self.iterations = 0

    def _system(self, dt):
        key = float(dt)
        if key not in self._cache:
            A = (sp.diags(self.mesh.volumes) - dt * self.mesh.stiffness).tocsc()
            if self.solver == "direct":
                lu = spla.splu(A, permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
                               options={"SymmetricMode": True})
                self._cache[key] = (A, lu)
            else:
                A = A.tocsr()
                self._cache[key] = (A, 1.0 / A.diagonal())
        return self._cache[key]

    def step(self, u, f, dt):
        if not dt > 0:
            raise DomainError(f"time step must be > 0, got {dt}")
        vol = self.mesh.volumes
        b = vol * (u + dt * f)
        A, aux = self._system(dt)
        if self.solver == "direct":
            x = aux.solve(b)
            if not np.all(np.isfinite(x)):
                raise SolverError("direct solve produced non-finite values")
            return x
        x, its = conjugate_gradient(A, b, x0=u, inv_diag=aux if self.solver == "pcg" else None)
        self.iterations += its
        return x


def heat_step(mesh: MeshedDomain, u: FieldSnapshot, f, dt: float,
              solver: str = "direct") -> FieldSnapshot:
    """Advance one implicit-Euler step of size ``dt``."""
    f = np.broadcast_to(np.asarray(f, dtype=float), (mesh.size,))
    stepper = ImplicitEuler(mesh, solver)
    return FieldSnapshot(u.time + dt, stepper.step(np.asarray(u.values, float), f, dt))


def substeps(gap: float, dt: float):
    """Split ``gap`` into ``m`` equal steps no longer than ``dt``; return (m, step)."""
    m = max(1, int(np.ceil(gap / dt - 1e-9)))
    step = gap / m
    if abs(step - dt) <= 1e-12 * dt:
        step = dt
    return m, step


def check_schedule(schedule):
    times = np.asarray(schedule, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise DomainError("schedule must be a nonempty list of times")
    if times[0] <= 0 or np.any(np.diff(times) <= 0):
        raise DomainError("schedule must be strictly increasing and start after 0")
    return times


def solve_heat(mesh: MeshedDomain, f, g, schedule, dt: float, solver: str = "direct"):
    """Snapshots of ``u`` at each time in ``schedule``.

    ``f`` and ``g`` are SourceSpecs or per-cell arrays. Steps are shortened
    where needed so that every snapshot time is hit exactly.
    """
    times = check_schedule(schedule)
    if not dt > 0:
        raise DomainError(f"time step must be > 0, got {dt}")
    fv = evaluate_source(f, mesh, "f") if isinstance(f, SourceSpec) else np.asarray(f, float)
    gv = evaluate_source(g, mesh, "g") if isinstance(g, SourceSpec) else np.asarray(g, float)
    stepper = ImplicitEuler(mesh, solver)
    u = gv.copy()
    t = 0.0
    out = []
    for target in times:
        m, step = substeps(target - t, dt)
        for _ in range(m):
            u = stepper.step(u, fv, step)
        t = float(target)
        out.append(FieldSnapshot(t, u.copy()))
    log.debug("solve_heat: %d snapshots, %d cells, solver=%s", len(out), mesh.size, solver)
    return out


def min_relative_value(values) -> float:
    """``min(values) / max|values|`` (0 for an all-zero field)."""
    values = np.asarray(values, float)
    scale = np.max(np.abs(values)) if values.size else 0.0
    return 0.0 if scale == 0 else float(values.min() / scale)


def field_as_weighted(snapshot: FieldSnapshot, mesh: MeshedDomain) -> WeightedField:
    """Pair each cell volume with ``max(value, 0)``."""
    values = np.asarray(snapshot.values, float)
    if values.shape != (mesh.size,):
        raise DomainError("snapshot does not belong to this mesh")
    if min_relative_value(values) < -NEGATIVE_TOL:
        warnings.warn(
            f"clamping negative values (min/max = {min_relative_value(values):.3e}) "
            f"at t = {snapshot.time}", RuntimeWarning, stacklevel=2)
    return WeightedField(mesh.volumes, np.maximum(values, 0.0))
