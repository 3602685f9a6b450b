"""Metric quantities of the model spaces: Euclidean space and round spheres.

All functions accept scalars or numpy arrays for the radius/volume argument
and return the same shape.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

# Gauss-Legendre rule for the sphere volume integral (n >= 3); the integrand
# sin^m is entire, so 64 nodes reach round-off on [0, pi].
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(64)

_BISECTION_TOL = 1e-13
_BISECTION_MAXITER = 200


def unit_ball_volume(n: int) -> float:
    """Volume of the unit ball in R^n, by the recurrence w_n = 2*pi/n * w_{n-2}."""
    if n < 0 or int(n) != n:
        raise DomainError(f"dimension must be a nonnegative integer, got {n!r}")
    n = int(n)
    w = 1.0 if n % 2 == 0 else 2.0
    for k in range(2 + n % 2, n + 1, 2):
        w *= 2.0 * math.pi / k
    return w


@dataclass(frozen=True)
class ModelSpace:
    """Space form of constant curvature ``kappa >= 0`` and dimension ``n``."""

    kappa: float = 0.0
    n: int = 2

    def __post_init__(self):
        if not (self.kappa >= 0.0) or not math.isfinite(self.kappa):
            raise DomainError(f"kappa must be finite and >= 0, got {self.kappa!r}")
        if int(self.n) != self.n or self.n < 2:
            raise DomainError(f"dimension must be an integer >= 2, got {self.n!r}")

    @property
    def omega(self) -> float:
        return unit_ball_volume(self.n)

    @property
    def max_radius(self) -> float:
        """Largest admissible geodesic radius (pi/sqrt(kappa) on the sphere)."""
        if self.kappa == 0.0:
            return math.inf
        return math.pi / math.sqrt(self.kappa)

    @property
    def total_volume(self) -> float:
        if self.kappa == 0.0:
            return math.inf
        return float(ball_volume(self, self.max_radius))


@dataclass(frozen=True)
class SymmetrizationTarget:
    """Model space together with the volume ratio ``theta`` in (0, 1]."""

    model: ModelSpace
    theta: float = 1.0

    def __post_init__(self):
        if not (0.0 < self.theta <= 1.0):
            raise DomainError(f"theta must lie in (0, 1], got {self.theta!r}")

    @property
    def capacity(self) -> float:
        return self.model.total_volume

    def ball_volume_for(self, domain_volume: float) -> float:
        """Volume of the symmetrized ball for a domain of the given volume."""
        A = domain_volume / self.theta
        if A > self.capacity * (1 + 1e-12):
            raise DomainError(
                f"symmetrized volume {A} exceeds model capacity {self.capacity}")
        return min(A, self.capacity)


def _check_radius(model: ModelSpace, r):
    r = np.asarray(r, dtype=float)
    if np.any(~np.isfinite(r)) or np.any(r < 0):
        raise DomainError("radius must be finite and >= 0")
    if model.kappa > 0 and np.any(r > model.max_radius * (1 + 1e-14)):
        raise DomainError(
            f"radius exceeds pi/sqrt(kappa) = {model.max_radius} on the sphere")
    return r


def _sin_power_integral(m: int, x: np.ndarray) -> np.ndarray:
    """int_0^x sin(t)^m dt for 0 <= x <= pi."""
    if m == 0:
        return x.copy()
    if m == 1:
        return 2.0 * np.sin(0.5 * x) ** 2
    # map the Gauss nodes onto [0, x] for every x at once
    t = 0.5 * x[..., None] * (_GL_NODES + 1.0)
    return 0.5 * x * np.sum(_GL_WEIGHTS * np.sin(t) ** m, axis=-1)


def ball_volume(model: ModelSpace, r):
    """Volume of the geodesic ball of radius ``r`` in the model space."""
    r = _check_radius(model, r)
    n = model.n
    if model.kappa == 0.0:
        out = model.omega * r ** n
    else:
        s = math.sqrt(model.kappa)
        out = n * model.omega / s ** n * _sin_power_integral(n - 1, s * r)
    return out if out.ndim else float(out)


def sphere_area(model: ModelSpace, r):
    """(n-1)-dimensional area of the geodesic sphere of radius ``r``."""
    r = _check_radius(model, r)
    n = model.n
    if model.kappa == 0.0:
        out = n * model.omega * r ** (n - 1)
    else:
        s = math.sqrt(model.kappa)
        out = n * model.omega * (np.sin(s * r) / s) ** (n - 1)
    return out if out.ndim else float(out)


def ball_radius(model: ModelSpace, v):
    """Geodesic radius of the ball with volume ``v`` (inverse of ball_volume).

    Closed form in flat space, vectorized bisection on the sphere.
    """
    v = np.asarray(v, dtype=float)
    cap = model.total_volume
    if np.any(~np.isfinite(v)) or np.any(v < 0):
        raise DomainError("volume must be finite and >= 0")
    if np.any(v > cap * (1 + 1e-12)):
        raise DomainError(f"volume exceeds the model capacity {cap}")
    if model.kappa == 0.0:
        out = (v / model.omega) ** (1.0 / model.n)
        return out if out.ndim else float(out)

    v = np.minimum(v, cap)
    lo = np.zeros_like(v)
    hi = np.full_like(v, model.max_radius)
    for _ in range(_BISECTION_MAXITER):
        mid = 0.5 * (lo + hi)
        below = np.asarray(ball_volume(model, mid)) < v
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        if np.all(hi - lo <= _BISECTION_TOL):
            break
    out = 0.5 * (lo + hi)
    out = np.where(v == 0, 0.0, out)
    return out if out.ndim else float(out)


def isoperimetric_profile(model: ModelSpace, s):
    """Boundary area of the model ball of volume ``s`` (the profile Phi)."""
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr <= 0):
        raise DomainError("profile is defined for volumes s > 0")
    if model.kappa == 0.0:
        n = model.n
        out = n * model.omega ** (1.0 / n) * s_arr ** ((n - 1) / n)
        return out if out.ndim else float(out)
    return sphere_area(model, ball_radius(model, s_arr))


def theta_for_cone(total_angle: float) -> float:
    """Volume ratio of a flat 2-D cone with the given total angle.

    A geodesic ball about the apex has area (alpha/2) r^2, so its ratio to
    the Euclidean disc area is alpha/(2 pi).
    """
    if not (0.0 < total_angle <= 2.0 * math.pi * (1 + 1e-15)):
        raise DomainError(f"cone angle must lie in (0, 2*pi], got {total_angle!r}")
    return min(total_angle / (2.0 * math.pi), 1.0)
