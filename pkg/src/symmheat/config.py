"""JSON scenario configuration: parsing, validation and normalization.

A config file holds either one scenario object or ``{"scenarios": [...]}``
with an optional ``"defaults"`` object merged into every scenario. Scenario
fields::

    name                    str, unique within the file
    domain                  {"kind": ..., "resolution": [n1, n2], ...kind parameters}
    theta                   optional; derived from the domain (cone angle / 2 pi, else 1)
    kappa                   curvature of the model space (0, or > 0 for sphere domains)
    n                       dimension, must be 2
    f, g                    number | expression string | {"preset": name, ...}
    dt                      time step
    times                   strictly increasing snapshot times (> 0)
    tolerance               allowed max(U - V) as a fraction of max V
    route_tolerance         allowed |V_direct - V_radial| as a fraction of max V
    symmetrized_resolution  cells in the radius / volume coordinate of the ball solves
    linear_solver           "direct" | "pcg" | "cg"
    flags                   {"equality_case": bool, "refinement_sweep": bool}
    sweep_levels            number of refinement levels (h, h/2, ...)
    perturbation            test hook: {"seed": int, "amplitude": float} adds seeded
                            relative noise to the route-B surface
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from .domain import KINDS, DomainSpec
from .errors import ConfigError, DomainError
from .heat import SOLVERS
from .sources import SourceSpec

DEFAULT_TIMES = tuple(0.005 * 2 ** k for k in range(10))  # 0.005 ... 2.56


@dataclass(frozen=True)
class Flags:
    equality_case: bool = False
    refinement_sweep: bool = False


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    domain: DomainSpec
    f: SourceSpec
    g: SourceSpec
    theta: float = 1.0
    kappa: float = 0.0
    n: int = 2
    dt: float = 1e-3
    times: tuple = DEFAULT_TIMES
    tolerance: float = 1e-2
    route_tolerance: float = 1e-3
    symmetrized_resolution: int = 512
    linear_solver: str = "direct"
    flags: Flags = field(default_factory=Flags)
    sweep_levels: int = 3
    perturbation: dict | None = None

    def to_dict(self) -> dict:
        d = {
            "name": self.name,
            "domain": {"kind": self.domain.kind, "resolution": list(self.domain.resolution),
                       **self.domain.params},
            "theta": self.theta,
            "kappa": self.kappa,
            "n": self.n,
            "f": self.f.to_config(),
            "g": self.g.to_config(),
            "dt": self.dt,
            "times": list(self.times),
            "tolerance": self.tolerance,
            "route_tolerance": self.route_tolerance,
            "symmetrized_resolution": self.symmetrized_resolution,
            "linear_solver": self.linear_solver,
            "flags": asdict(self.flags),
            "sweep_levels": self.sweep_levels,
        }
        if self.perturbation is not None:
            d["perturbation"] = dict(self.perturbation)
        return d

    def refined(self, level: int, scale_dt: bool = True) -> "ScenarioConfig":
        """Level ``k`` of a refinement sweep: cells x 2^k, dt / 4^k (or dt kept)."""
        k = 2 ** level
        return replace(self, name=f"{self.name}@L{level}", domain=self.domain.refined(k),
                       dt=self.dt / k ** 2 if scale_dt else self.dt,
                       symmetrized_resolution=self.symmetrized_resolution * k)


_SCENARIO_KEYS = {
    "name", "domain", "theta", "kappa", "n", "f", "g", "dt", "times", "tolerance",
    "route_tolerance", "symmetrized_resolution", "linear_solver", "flags", "sweep_levels",
    "perturbation",
}


def _number(d, key, where, default, positive=False, integer=False, minimum=None):
    value = d.get(key, default)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"expected a number, got {value!r}", f"{where}.{key}")
    if not math.isfinite(value):
        raise ConfigError("must be finite", f"{where}.{key}")
    if integer:
        if int(value) != value:
            raise ConfigError(f"expected an integer, got {value!r}", f"{where}.{key}")
        value = int(value)
    if positive and value <= 0:
        raise ConfigError(f"must be > 0, got {value!r}", f"{where}.{key}")
    if minimum is not None and value < minimum:
        raise ConfigError(f"must be >= {minimum}, got {value!r}", f"{where}.{key}")
    return value


def parse_scenario(raw: dict, where: str = "scenario") -> ScenarioConfig:
    """Validate one scenario object and return its normalized form."""
    if not isinstance(raw, dict):
        raise ConfigError("scenario must be a JSON object", where)
    unknown = set(raw) - _SCENARIO_KEYS
    if unknown:
        raise ConfigError(f"unknown field(s) {sorted(unknown)}", where)
    name = raw.get("name")
    if not isinstance(name, str) or not name or "/" in name:
        raise ConfigError("name must be a nonempty string without '/'", f"{where}.name")
    where = f"{where}[{name}]" if where == "scenario" else where

    dom = raw.get("domain")
    if not isinstance(dom, dict):
        raise ConfigError("domain must be an object with a 'kind'", f"{where}.domain")
    kind = dom.get("kind")
    if kind not in KINDS:
        raise ConfigError(f"unknown kind {kind!r}; expected one of {', '.join(KINDS)}",
                          f"{where}.domain.kind")
    res = dom.get("resolution")
    if (not isinstance(res, list) or len(res) != 2
            or not all(isinstance(v, int) and not isinstance(v, bool) for v in res)):
        raise ConfigError("resolution must be a list of two integers", f"{where}.domain.resolution")
    if min(res) < 4:
        raise ConfigError("at least 4 cells per axis are required", f"{where}.domain.resolution")
    params = {k: v for k, v in dom.items() if k not in ("kind", "resolution")}
    try:
        domain = DomainSpec(kind, params, tuple(res))
    except DomainError as exc:
        raise ConfigError(str(exc), f"{where}.domain") from None

    kappa = float(_number(raw, "kappa", where, 0.0, minimum=0.0))
    if kind == "sphere_latlong" and kappa <= 0:
        raise ConfigError("sphere domains need kappa > 0", f"{where}.kappa")
    if kind != "sphere_latlong" and kappa != 0:
        raise ConfigError(f"kappa > 0 is only valid with sphere domains, not {kind}",
                          f"{where}.kappa")
    n = _number(raw, "n", where, 2, integer=True)
    if n != 2:
        raise ConfigError("the solver is two-dimensional; n must be 2", f"{where}.n")

    try:
        derived = domain.default_theta()
    except DomainError as exc:
        raise ConfigError(str(exc), f"{where}.domain.angle") from None
    theta = float(_number(raw, "theta", where, derived, positive=True))
    if abs(theta - derived) > 1e-12:
        what = "cone angle / (2 pi)" if kind == "cone_polar" else "1 for this domain"
        raise ConfigError(f"theta {theta} is inconsistent with the domain ({what} = {derived})",
                          f"{where}.theta")

    f = SourceSpec.from_config(raw.get("f", 0.0), f"{where}.f")
    g = SourceSpec.from_config(raw.get("g", 0.0), f"{where}.g")

    times = raw.get("times", list(DEFAULT_TIMES))
    if (not isinstance(times, list) or not times
            or not all(isinstance(t, (int, float)) and not isinstance(t, bool) for t in times)):
        raise ConfigError("times must be a nonempty list of numbers", f"{where}.times")
    if times[0] <= 0 or any(b <= a for a, b in zip(times, times[1:])):
        raise ConfigError("times must be strictly increasing and > 0", f"{where}.times")

    solver = raw.get("linear_solver", "direct")
    if solver not in SOLVERS:
        raise ConfigError(f"expected one of {SOLVERS}, got {solver!r}", f"{where}.linear_solver")

    flags_raw = raw.get("flags", {})
    if not isinstance(flags_raw, dict) or set(flags_raw) - {"equality_case", "refinement_sweep"}:
        raise ConfigError("flags may contain equality_case and refinement_sweep only",
                          f"{where}.flags")
    for k, v in flags_raw.items():
        if not isinstance(v, bool):
            raise ConfigError("must be true or false", f"{where}.flags.{k}")
    flags = Flags(**flags_raw)
    if flags.equality_case and (not domain.is_ball or theta != 1.0):
        raise ConfigError("equality_case needs a polar_disc or spherical cap domain",
                          f"{where}.flags.equality_case")

    pert = raw.get("perturbation")
    if pert is not None:
        if not isinstance(pert, dict) or set(pert) - {"seed", "amplitude"}:
            raise ConfigError("perturbation takes 'seed' and 'amplitude'", f"{where}.perturbation")
        pert = {"seed": _number(pert, "seed", f"{where}.perturbation", 0, integer=True),
                "amplitude": float(_number(pert, "amplitude", f"{where}.perturbation", 0.0,
                                           minimum=0.0))}

    return ScenarioConfig(
        name=name, domain=domain, f=f, g=g, theta=theta, kappa=kappa, n=n,
        dt=float(_number(raw, "dt", where, 1e-3, positive=True)),
        times=tuple(float(t) for t in times),
        tolerance=float(_number(raw, "tolerance", where, 1e-2, positive=True)),
        route_tolerance=float(_number(raw, "route_tolerance", where, 1e-3, positive=True)),
        symmetrized_resolution=_number(raw, "symmetrized_resolution", where, 512,
                                       integer=True, minimum=4),
        linear_solver=solver, flags=flags,
        sweep_levels=_number(raw, "sweep_levels", where, 3, integer=True, minimum=2),
        perturbation=pert,
    )


def parse_config(data) -> list[ScenarioConfig]:
    """Parse decoded JSON into a list of scenarios."""
    if isinstance(data, dict) and "scenarios" in data:
        extra = set(data) - {"scenarios", "defaults"}
        if extra:
            raise ConfigError(f"unknown top-level field(s) {sorted(extra)}", "config")
        defaults = data.get("defaults", {})
        if not isinstance(defaults, dict):
            raise ConfigError("defaults must be an object", "defaults")
        items = data["scenarios"]
        if not isinstance(items, list) or not items:
            raise ConfigError("must be a nonempty list", "scenarios")
        scenarios = [parse_scenario({**defaults, **item} if isinstance(item, dict) else item,
                                    f"scenarios[{i}]") for i, item in enumerate(items)]
    else:
        scenarios = [parse_scenario(data)]
    names = [s.name for s in scenarios]
    dup = {n for n in names if names.count(n) > 1}
    if dup:
        raise ConfigError(f"duplicate scenario name(s) {sorted(dup)}", "scenarios")
    return scenarios


def load_config(path) -> list[ScenarioConfig]:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", str(path)) from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}",
                          str(path)) from None
    return parse_config(data)


def dump_config(scenarios) -> str:
    return json.dumps({"scenarios": [s.to_dict() for s in scenarios]}, indent=2)
