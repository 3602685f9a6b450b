"""Rearrangements of nonnegative fields given as (cell volume, cell value) pairs.

A discrete field is a step function on its cells, so its decreasing
rearrangement is again a step function and every identity below holds as
an exact finite sum.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .geometry import SymmetrizationTarget, ball_radius, ball_volume


@dataclass(frozen=True, eq=False)
class WeightedField:
    """Nonnegative values attached to cells of positive volume."""

    volumes: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        vol = np.asarray(self.volumes, dtype=float).ravel()
        val = np.asarray(self.values, dtype=float).ravel()
        if vol.shape != val.shape:
            raise DomainError("volumes and values must have equal length")
        if vol.size == 0:
            raise DomainError("a weighted field needs at least one cell")
        if not np.all(np.isfinite(vol)) or np.any(vol <= 0):
            raise DomainError("cell volumes must be finite and > 0")
        if not np.all(np.isfinite(val)) or np.any(val < 0):
            raise DomainError("cell values must be finite and >= 0")
        object.__setattr__(self, "volumes", vol)
        object.__setattr__(self, "values", val)

    @classmethod
    def from_pairs(cls, cells):
        cells = np.asarray(cells, dtype=float).reshape(-1, 2)
        return cls(cells[:, 0], cells[:, 1])

    @property
    def total_volume(self) -> float:
        return float(np.sum(self.volumes))

    def __len__(self):
        return self.volumes.size

    def power_integral(self, p: float) -> float:
        return float(np.sum(self.volumes * self.values ** p))


@dataclass(frozen=True, eq=False)
class StepFunction:
    """Nonincreasing step function: ``values[i]`` on ``[breaks[i], breaks[i+1])``."""

    breaks: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.breaks, dtype=float).ravel()
        v = np.asarray(self.values, dtype=float).ravel()
        if b.size != v.size + 1 or v.size == 0:
            raise DomainError("need len(breaks) == len(values) + 1 >= 2")
        if b[0] != 0.0 or np.any(np.diff(b) <= 0):
            raise DomainError("breaks must start at 0 and increase strictly")
        if np.any(np.diff(v) >= 0) or v[-1] < 0:
            raise DomainError("plateau values must decrease strictly and be >= 0")
        object.__setattr__(self, "breaks", b)
        object.__setattr__(self, "values", v)
        # cumulative integral at each break
        object.__setattr__(self, "_cum", np.concatenate(([0.0], np.cumsum(v * np.diff(b)))))

    @property
    def total_volume(self) -> float:
        return float(self.breaks[-1])

    def _index(self, s):
        idx = np.searchsorted(self.breaks, s, side="right") - 1
        return np.clip(idx, 0, self.values.size - 1)

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        if np.any(s < 0) or np.any(s > self.total_volume * (1 + 1e-12)):
            raise DomainError(f"s must lie in [0, {self.total_volume}]")
        out = self.values[self._index(s)]
        return out if out.ndim else float(out)

    def integral(self, a):
        """Exact ``int_0^a h*(s) ds``."""
        a = np.asarray(a, dtype=float)
        if np.any(a < 0) or np.any(a > self.total_volume * (1 + 1e-12)):
            raise DomainError(f"a must lie in [0, {self.total_volume}]")
        a = np.minimum(a, self.total_volume)
        i = self._index(a)
        out = self._cum[i] + self.values[i] * (a - self.breaks[i])
        return out if out.ndim else float(out)

    def power_integral(self, p: float) -> float:
        return float(np.sum(np.diff(self.breaks) * self.values ** p))

    def distribution(self, s):
        """Measure of ``{h* > s}``."""
        s = np.asarray(s, dtype=float)
        # values are decreasing: count plateaus above s
        k = np.searchsorted(-self.values, -s, side="left")
        out = self.breaks[k]
        return out if out.ndim else float(out)


def distribution_function(h: WeightedField, s):
    """Total volume of the cells whose value exceeds ``s``."""
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr < 0):
        raise DomainError("level s must be >= 0")
    out = np.sum(h.volumes * (h.values > s_arr[..., None]), axis=-1)
    return out if out.ndim else float(out)


def decreasing_rearrangement(h: WeightedField) -> StepFunction:
    """Sort cells by decreasing value, merging equal values into one plateau."""
    if len(h) == 0:
        raise DomainError("empty field")
    order = np.argsort(-h.values, kind="stable")
    vals = h.values[order]
    vols = h.volumes[order]
    start = np.flatnonzero(np.concatenate(([True], vals[1:] != vals[:-1])))
    plateau_vol = np.add.reduceat(vols, start)
    breaks = np.concatenate(([0.0], np.cumsum(plateau_vol)))
    return StepFunction(breaks, vals[start])


def rearrangement_value(h_star: StepFunction, s):
    """Plateau lookup ``h*(s)``; ``s = 0`` gives the maximum."""
    return h_star(s)


def concentration(h_star: StepFunction, a, theta: float = 1.0):
    """``(1/theta) * int_0^{theta a} h*(s) ds``."""
    if not (0.0 < theta <= 1.0):
        raise DomainError(f"theta must lie in (0, 1], got {theta!r}")
    a = np.asarray(a, dtype=float)
    if np.any(a < 0) or np.any(theta * a > h_star.total_volume * (1 + 1e-12)):
        raise DomainError("theta * a must lie in [0, total volume]")
    out = np.asarray(h_star.integral(theta * a)) / theta
    return out if out.ndim else float(out)


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """Schwarz rearrangement ``r -> h*(theta * |B_r|)`` on the model ball."""

    target: SymmetrizationTarget
    star: StepFunction

    @property
    def ball_volume(self) -> float:
        return self.star.total_volume / self.target.theta

    @property
    def radius(self) -> float:
        return float(ball_radius(self.target.model, self.ball_volume))

    def __call__(self, r):
        vol = np.asarray(ball_volume(self.target.model, r))
        if np.any(vol > self.ball_volume * (1 + 1e-12)):
            raise DomainError("radius outside the symmetrized ball")
        s = np.minimum(self.target.theta * vol, self.star.total_volume)
        return self.star(s)

    def of_volume(self, b):
        """Profile value at the sphere enclosing model volume ``b``."""
        b = np.asarray(b, dtype=float)
        s = np.minimum(self.target.theta * b, self.star.total_volume)
        return self.star(s)

    def distribution(self, s):
        """Model volume of ``{h# > s}``; equals mu_h(s) / theta."""
        return np.asarray(self.star.distribution(s)) / self.target.theta

    def rearranged(self) -> StepFunction:
        """Decreasing rearrangement of the profile itself, ``s -> h*(theta s)``."""
        th = self.target.theta
        return StepFunction(self.star.breaks / th, self.star.values)


def schwarz_profile(h: WeightedField, target: SymmetrizationTarget) -> RadialProfile:
    total = h.total_volume
    if total / target.theta > target.capacity * (1 + 1e-12):
        raise DomainError("symmetrized ball would exceed the model capacity")
    return RadialProfile(target, decreasing_rearrangement(h))


def _check_same_cells(f: WeightedField, g: WeightedField):
    if len(f) != len(g) or not np.array_equal(f.volumes, g.volumes):
        raise DomainError("fields must share an identical cell-volume sequence")


def step_product_integral(f_star: StepFunction, g_star: StepFunction) -> float:
    """Exact integral of the product of two step functions on a common interval."""
    if not np.isclose(f_star.total_volume, g_star.total_volume, rtol=1e-12, atol=0):
        raise DomainError("step functions live on different intervals")
    b = np.union1d(f_star.breaks, g_star.breaks)
    b = b[b <= min(f_star.total_volume, g_star.total_volume)]
    mid = 0.5 * (b[:-1] + b[1:])
    return float(np.sum(np.diff(b) * f_star(mid) * g_star(mid)))


def hardy_littlewood_pair(f: WeightedField, g: WeightedField):
    """Return ``(int f g, int f* g*)``; the first never exceeds the second."""
    _check_same_cells(f, g)
    lhs = float(np.sum(f.volumes * f.values * g.values))
    rhs = step_product_integral(decreasing_rearrangement(f), decreasing_rearrangement(g))
    return lhs, rhs


def truncated_concentration_bound(f: WeightedField, h: WeightedField, s: float):
    """``(int over {h > s} of f, int_0^{mu_h(s)} f*)``."""
    _check_same_cells(f, h)
    if s < 0:
        raise DomainError("level s must be >= 0")
    mask = h.values > s
    lhs = float(np.sum(f.volumes[mask] * f.values[mask]))
    mu = float(np.sum(h.volumes[mask]))
    rhs = float(decreasing_rearrangement(f).integral(mu))
    return lhs, rhs
