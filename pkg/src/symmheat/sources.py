"""Source and initial data: expressions or named presets evaluated on a mesh."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .domain import MeshedDomain
from .errors import ConfigError, ExpressionError
from .expr import Expression

PRESETS = {
    "constant": "c (default 1): the same value in every cell",
    "gaussian": "exp(-d^2 / (2 width^2)) * amplitude, d = geodesic distance to center",
    "eigenmode": "principal Dirichlet eigenvector of the mesh Laplacian, max = amplitude",
    "radial_poly": "sum_k coeffs[k] * r^k with r the radial coordinate of the mesh",
    "indicator": "amplitude on a region (geodesic disc {center, radius} or {expression} > 0)",
}


@dataclass(frozen=True)
class SourceSpec:
    """Either an ``expression`` string or a ``preset`` name with parameters."""

    expression: str | None = None
    preset: str | None = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if (self.expression is None) == (self.preset is None):
            raise ConfigError("give exactly one of an expression or a preset")
        if self.preset is not None and self.preset not in PRESETS:
            raise ConfigError(f"unknown preset {self.preset!r}; expected one of {', '.join(PRESETS)}")
        if self.expression is not None:
            Expression(self.expression)  # syntax check
        object.__setattr__(self, "params", dict(self.params))

    @classmethod
    def constant(cls, c: float = 1.0):
        return cls(preset="constant", params={"c": float(c)})

    @classmethod
    def from_config(cls, value, field_name: str = "source"):
        """Accept a number, an expression string or ``{"preset": ..., ...}``."""
        try:
            if isinstance(value, bool):
                raise ConfigError("expected a number, expression or preset object")
            if isinstance(value, (int, float)):
                return cls.constant(float(value))
            if isinstance(value, str):
                return cls(expression=value)
            if isinstance(value, dict):
                if "expression" in value:
                    return cls(expression=str(value["expression"]))
                if "preset" not in value:
                    raise ConfigError("object needs a 'preset' or 'expression' key")
                params = {k: v for k, v in value.items() if k != "preset"}
                return cls(preset=value["preset"], params=params)
            raise ConfigError("expected a number, expression or preset object")
        except ConfigError as exc:
            msg = str(exc)
            raise (ExpressionError if isinstance(exc, ExpressionError) else ConfigError)(
                msg, field_name) from None

    def to_config(self):
        if self.expression is not None:
            return {"expression": self.expression}
        return {"preset": self.preset, **self.params}

    @property
    def is_zero(self) -> bool:
        return self.preset == "constant" and float(self.params.get("c", 1.0)) == 0.0


def principal_eigenmode(mesh: MeshedDomain):
    """Return ``(lambda_1, phi_1)`` of ``-Δ_h`` with ``phi_1 > 0`` and ``max phi_1 = 1``."""
    K = -mesh.stiffness
    if mesh.size <= 400:
        w, v = scipy.linalg.eigh(K.toarray(), np.diag(mesh.volumes))
        lam, vec = w[0], v[:, 0]
    else:
        w, v = spla.eigsh(K.tocsc(), k=1, M=sp.diags(mesh.volumes).tocsc(), sigma=0.0, which="LM")
        lam, vec = w[0], v[:, 0]
    vec = np.abs(vec)
    return float(lam), vec / vec.max()


def evaluate_source(spec: SourceSpec, mesh: MeshedDomain, field_name: str = "source"):
    """Values at cell centers; negative or non-finite results are config errors."""
    c = mesh.coords
    p = spec.params
    try:
        if spec.expression is not None:
            values = Expression(spec.expression)(c["x"], c["y"], c["r"])
        elif spec.preset == "constant":
            values = np.full(mesh.size, float(p.get("c", 1.0)))
        elif spec.preset == "gaussian":
            center = p.get("center", [0.0, 0.0])
            width = float(p.get("width", 0.2))
            if width <= 0:
                raise ConfigError("gaussian width must be > 0")
            d = mesh.geodesic_distance(center)
            values = float(p.get("amplitude", 1.0)) * np.exp(-0.5 * (d / width) ** 2)
        elif spec.preset == "eigenmode":
            values = float(p.get("amplitude", 1.0)) * principal_eigenmode(mesh)[1]
        elif spec.preset == "radial_poly":
            coeffs = [float(a) for a in p.get("coeffs", [1.0])]
            values = np.polynomial.polynomial.polyval(c["r"], coeffs)
        elif spec.preset == "indicator":
            region = p.get("region", {})
            if "expression" in region:
                inside = Expression(region["expression"])(c["x"], c["y"], c["r"]) > 0
            else:
                inside = mesh.geodesic_distance(region.get("center", [0.0, 0.0])) \
                    < float(region.get("radius", 0.5))
            values = np.where(inside, float(p.get("amplitude", 1.0)), 0.0)
        else:  # pragma: no cover - guarded in SourceSpec
            raise ConfigError(f"unknown preset {spec.preset!r}")
    except ConfigError as exc:
        raise type(exc)(str(exc), field_name) from None
    except (TypeError, ValueError, KeyError, IndexError) as exc:
        raise ConfigError(f"bad preset parameters: {exc}", field_name) from None
    values = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(values)):
        raise ConfigError("evaluates to a non-finite value at some cell center", field_name)
    if np.any(values < 0):
        i = int(np.argmin(values))
        raise ConfigError(
            f"evaluates to a negative value {values[i]:.6g} at cell center "
            f"(x={c['x'][i]:.6g}, y={c['y'][i]:.6g})", field_name)
    return values

