"""Control paths ``lam(t)`` through parameter space.

A :class:`PathSpec` is an immutable description (family name, parameters,
duration, grid size). Position and velocity are evaluated from the family's
closed form, except at ``t = 0`` and ``t = T`` where the stored exact
endpoints are returned, so endpoints never carry rounding from the formula.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Mapping

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import ConfigError, NonpositiveDuration, ObjectiveEvaluationFailed, OutOfDomain

DEFAULT_GRID_STEPS = 2000

# Calibrated laser settings for the Rydberg scenario, units of 2*pi*MHz.
CALIBRATED_RYDBERG = {
    "Omega13": 10.0,
    "Delta13": 5.0,
    "Omega12": 8.0,
    "Delta12": -3.0,
    "Omega23": 6.0,
    "Delta23": 4.0,
}


def _freeze(value):
    if isinstance(value, Mapping):
        return tuple(sorted((k, _freeze(v)) for k, v in value.items()))
    if isinstance(value, (list, tuple, np.ndarray)):
        return tuple(_freeze(v) for v in value)
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    return value


def _thaw(value):
    if isinstance(value, tuple):
        return [_thaw(v) for v in value]
    return value


@dataclass(frozen=True)
class _Family:
    # profile(params, s) -> (n, d) positions, derivative(params, s) -> (n, d) d/ds
    profile: Callable[[dict, np.ndarray], np.ndarray]
    derivative: Callable[[dict, np.ndarray], np.ndarray]
    endpoints: Callable[[dict], tuple[np.ndarray, np.ndarray]]


def bezier3(t):
    """Cubic smoothing profile ``3t(1-t)^2 + 3t^2(1-t) + t^3``, i.e. ``1 - (1-t)^3``."""
    arr = np.asarray(t, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr < 0.0) or np.any(arr > 1.0):
        raise OutOfDomain("bezier3 is defined on [0, 1]")
    u = 1.0 - arr
    out = 3 * arr * u * u + 3 * arr * arr * u + arr**3
    return float(out) if np.ndim(t) == 0 else out


def bezier3_derivative(t):
    return 3.0 * (1.0 - np.asarray(t, dtype=float)) ** 2


def _vec(params, key):
    return np.asarray(params[key], dtype=float)


def _linear_profile(p, s):
    a, b = _vec(p, "start"), _vec(p, "end")
    return a + np.multiply.outer(s, b - a)


def _linear_derivative(p, s):
    a, b = _vec(p, "start"), _vec(p, "end")
    return np.broadcast_to(b - a, np.shape(s) + a.shape).copy()


def _polyline_knots(p):
    verts = np.asarray(p["vertices"], dtype=float)
    seg = np.linalg.norm(np.diff(verts, axis=0), axis=1)
    total = seg.sum()
    if total == 0:
        knots = np.linspace(0.0, 1.0, len(verts))
    else:
        knots = np.concatenate([[0.0], np.cumsum(seg) / total])
    return verts, knots


def _polyline_profile(p, s):
    verts, knots = _polyline_knots(p)
    return np.stack([np.interp(s, knots, verts[:, j]) for j in range(verts.shape[1])], axis=-1)


def _polyline_derivative(p, s):
    verts, knots = _polyline_knots(p)
    idx = np.clip(np.searchsorted(knots, s, side="right") - 1, 0, len(verts) - 2)
    span = np.diff(knots)
    slope = np.diff(verts, axis=0) / np.where(span > 0, span, 1.0)[:, None]
    return slope[idx]


def _kitaev_profile(p, s):
    mu = p["mu0"] + p["dmu"] * np.sin(np.pi * s)
    delta = p["Delta0"] + p["dDelta"] * (1 - np.cos(np.pi * s))
    return np.stack([mu, delta], axis=-1)


def _kitaev_derivative(p, s):
    return np.stack(
        [p["dmu"] * np.pi * np.cos(np.pi * s), p["dDelta"] * np.pi * np.sin(np.pi * s)], axis=-1
    )


def _ring_profile(p, s):
    om = p["Omega12"] * np.sin(np.pi * s) + p["Omega23"] * np.sin(2 * np.pi * s)
    de = p["Delta12"] * np.cos(np.pi * s) + p["Delta23"] * np.cos(2 * np.pi * s)
    return np.stack([om, de], axis=-1)


def _ring_derivative(p, s):
    om = np.pi * (p["Omega12"] * np.cos(np.pi * s) + 2 * p["Omega23"] * np.cos(2 * np.pi * s))
    de = -np.pi * (p["Delta12"] * np.sin(np.pi * s) + 2 * p["Delta23"] * np.sin(2 * np.pi * s))
    return np.stack([om, de], axis=-1)


def _ladder_profile(p, s):
    di = p.get("intermediate_detuning", 0.0)
    return np.stack(
        [
            p["Omega12"] * np.sin(np.pi * s),
            p["Omega23"] * np.sin(2 * np.pi * s),
            p["Delta12"] * np.cos(np.pi * s) + di,
            p["Delta23"] * np.cos(2 * np.pi * s) - di,
        ],
        axis=-1,
    )


def _ladder_derivative(p, s):
    return np.stack(
        [
            np.pi * p["Omega12"] * np.cos(np.pi * s),
            2 * np.pi * p["Omega23"] * np.cos(2 * np.pi * s),
            -np.pi * p["Delta12"] * np.sin(np.pi * s),
            -2 * np.pi * p["Delta23"] * np.sin(2 * np.pi * s),
        ],
        axis=-1,
    )


def _bezier_profile(p, s):
    return _vec(p, "start") + np.multiply.outer(1.0 - (1.0 - s) ** 3, _vec(p, "delta"))


def _bezier_derivative(p, s):
    return np.multiply.outer(bezier3_derivative(s), _vec(p, "delta"))


def _spline(p):
    pts = np.asarray(p["points"], dtype=float)
    knots = np.linspace(0.0, 1.0, len(pts))
    return CubicSpline(knots, pts, axis=0, bc_type="natural")


def _spline_profile(p, s):
    return _spline(p)(s)


def _spline_derivative(p, s):
    return _spline(p)(s, 1)


def _circle_profile(p, s):
    ang = p["start_angle"] + p["sweep"] * s
    c = _vec(p, "center")
    return c + p["radius"] * np.stack([np.cos(ang), np.sin(ang)], axis=-1)


def _circle_derivative(p, s):
    ang = p["start_angle"] + p["sweep"] * s
    return p["radius"] * p["sweep"] * np.stack([-np.sin(ang), np.cos(ang)], axis=-1)


def _circle_endpoints(p):
    start = _circle_profile(p, np.array(0.0))
    turns = p["sweep"] / (2 * np.pi)
    if turns != 0 and float(turns).is_integer():
        return start, start.copy()
    return start, _circle_profile(p, np.array(1.0))


def _endpoints_from(start_fn, end_fn):
    return lambda p: (np.asarray(start_fn(p), dtype=float), np.asarray(end_fn(p), dtype=float))


FAMILIES: dict[str, _Family] = {
    "linear": _Family(
        _linear_profile, _linear_derivative, _endpoints_from(lambda p: p["start"], lambda p: p["end"])
    ),
    "polyline": _Family(
        _polyline_profile,
        _polyline_derivative,
        _endpoints_from(lambda p: p["vertices"][0], lambda p: p["vertices"][-1]),
    ),
    "sinusoidal_kitaev": _Family(
        _kitaev_profile,
        _kitaev_derivative,
        _endpoints_from(
            lambda p: (p["mu0"], p["Delta0"]), lambda p: (p["mu0"], p["Delta0"] + 2 * p["dDelta"])
        ),
    ),
    "rydberg_ring": _Family(
        _ring_profile,
        _ring_derivative,
        _endpoints_from(
            lambda p: (0.0, p["Delta12"] + p["Delta23"]), lambda p: (0.0, -p["Delta12"] + p["Delta23"])
        ),
    ),
    "rydberg_ladder_ring": _Family(
        _ladder_profile,
        _ladder_derivative,
        _endpoints_from(
            lambda p: (
                0.0,
                0.0,
                p["Delta12"] + p.get("intermediate_detuning", 0.0),
                p["Delta23"] - p.get("intermediate_detuning", 0.0),
            ),
            lambda p: (
                0.0,
                0.0,
                -p["Delta12"] + p.get("intermediate_detuning", 0.0),
                p["Delta23"] - p.get("intermediate_detuning", 0.0),
            ),
        ),
    ),
    "bezier": _Family(
        _bezier_profile,
        _bezier_derivative,
        _endpoints_from(
            lambda p: p["start"], lambda p: np.asarray(p["start"], float) + np.asarray(p["delta"], float)
        ),
    ),
    "control_points": _Family(
        _spline_profile,
        _spline_derivative,
        _endpoints_from(lambda p: p["points"][0], lambda p: p["points"][-1]),
    ),
    "circle": _Family(_circle_profile, _circle_derivative, _circle_endpoints),
}


@dataclass(frozen=True)
class PathSpec:
    family: str
    parameters: tuple = field(repr=False)
    T: float
    grid_steps: int = DEFAULT_GRID_STEPS

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown path family {self.family!r}")
        if not (isinstance(self.T, (int, float)) and math.isfinite(self.T) and self.T > 0):
            raise NonpositiveDuration(f"path duration must be positive, got {self.T!r}")
        if int(self.grid_steps) != self.grid_steps or self.grid_steps < 1:
            raise ConfigError("grid_steps must be a positive integer")
        object.__setattr__(self, "T", float(self.T))
        object.__setattr__(self, "grid_steps", int(self.grid_steps))
        if not isinstance(self.parameters, tuple):
            object.__setattr__(self, "parameters", _freeze(self.parameters))
        start, end = self.endpoints
        if not (np.all(np.isfinite(start)) and np.all(np.isfinite(end))):
            raise ConfigError("path endpoints must be finite")

    @property
    def params(self) -> dict:
        return {k: _thaw(v) for k, v in self.parameters}

    @property
    def endpoints(self) -> tuple[np.ndarray, np.ndarray]:
        return FAMILIES[self.family].endpoints(self.params)

    @property
    def start(self) -> np.ndarray:
        return self.endpoints[0]

    @property
    def end(self) -> np.ndarray:
        return self.endpoints[1]

    @property
    def dim_params(self) -> int:
        return int(self.start.size)

    @property
    def grid(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.grid_steps + 1)

    def position(self, t) -> np.ndarray:
        t_arr = np.asarray(t, dtype=float)
        out = np.asarray(FAMILIES[self.family].profile(self.params, t_arr / self.T), dtype=float)
        start, end = self.endpoints
        out = np.where((t_arr == 0.0)[..., None], start, out)
        out = np.where((t_arr == self.T)[..., None], end, out)
        return out

    def velocity(self, t) -> np.ndarray:
        t_arr = np.asarray(t, dtype=float)
        return np.asarray(FAMILIES[self.family].derivative(self.params, t_arr / self.T), dtype=float) / self.T

    def scale(self) -> float:
        return float(np.max(np.linalg.norm(self.position(self.grid), axis=-1)))

    def length(self) -> float:
        pts = self.position(self.grid)
        return float(np.sum(np.linalg.norm(np.diff(pts, axis=0), axis=-1)))

    def to_dict(self) -> dict:
        return {"family": self.family, "parameters": self.params, "T": self.T, "grid_steps": self.grid_steps}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def path_from_dict(doc: Mapping[str, Any]) -> PathSpec:
    extra = set(doc) - {"family", "parameters", "T", "grid_steps"}
    if extra:
        raise ConfigError(f"unknown path fields: {sorted(extra)}")
    try:
        return PathSpec(
            doc["family"], doc["parameters"], doc["T"], doc.get("grid_steps", DEFAULT_GRID_STEPS)
        )
    except KeyError as exc:
        raise ConfigError(f"path is missing field {exc}") from None


def path_from_json(text: str) -> PathSpec:
    return path_from_dict(json.loads(text))


def with_duration(path: PathSpec, T: float) -> PathSpec:
    return replace(path, T=T)


def with_grid(path: PathSpec, grid_steps: int) -> PathSpec:
    return replace(path, grid_steps=grid_steps)


def _as_list(v) -> list[float]:
    return [float(x) for x in np.atleast_1d(np.asarray(v, dtype=float))]


def linear_path(start, end, T: float, grid_steps: int = DEFAULT_GRID_STEPS) -> PathSpec:
    return PathSpec("linear", {"start": _as_list(start), "end": _as_list(end)}, T, grid_steps)


def polyline_path(vertices, T: float, grid_steps: int = DEFAULT_GRID_STEPS) -> PathSpec:
    """Piecewise-linear path at constant speed through ``vertices``."""
    verts = [_as_list(v) for v in vertices]
    if len(verts) < 2:
        raise ConfigError("a polyline needs at least two vertices")
    return PathSpec("polyline", {"vertices": verts}, T, grid_steps)


def sinusoidal_kitaev_path(mu0, dmu, Delta0, dDelta, T, grid_steps: int = DEFAULT_GRID_STEPS) -> PathSpec:
    """``mu = mu0 + dmu sin(pi s)``, ``Delta = Delta0 + dDelta (1 - cos(pi s))`` with ``s = t/T``."""
    p = {"mu0": float(mu0), "dmu": float(dmu), "Delta0": float(Delta0), "dDelta": float(dDelta)}
    return PathSpec("sinusoidal_kitaev", p, T, grid_steps)


def rydberg_ring_path(Omega12, Omega23, Delta12, Delta23, T, grid_steps: int = DEFAULT_GRID_STEPS) -> PathSpec:
    """Two-harmonic loop in the effective (Omega, Delta) plane."""
    p = {"Omega12": float(Omega12), "Omega23": float(Omega23), "Delta12": float(Delta12), "Delta23": float(Delta23)}
    return PathSpec("rydberg_ring", p, T, grid_steps)


def rydberg_ladder_ring_path(
    Omega12, Omega23, Delta12, Delta23, T, intermediate_detuning: float = 0.0,
    grid_steps: int = DEFAULT_GRID_STEPS,
) -> PathSpec:
    """Per-laser lift of :func:`rydberg_ring_path` onto the three-level ladder.

    Each ring harmonic is carried by one laser: ``Omega12 sin(pi s)`` on the lower
    transition, ``Omega23 sin(2 pi s)`` on the upper one, and likewise for the
    detunings. ``intermediate_detuning`` shifts the intermediate level while
    leaving the two-photon detuning ``Delta12 + Delta23`` untouched.
    """
    p = {
        "Omega12": float(Omega12),
        "Omega23": float(Omega23),
        "Delta12": float(Delta12),
        "Delta23": float(Delta23),
        "intermediate_detuning": float(intermediate_detuning),
    }
    return PathSpec("rydberg_ladder_ring", p, T, grid_steps)


def bezier_path(start, delta, T, grid_steps: int = DEFAULT_GRID_STEPS) -> PathSpec:
    """Each component moves as ``start + delta * bezier3(t/T)``."""
    return PathSpec("bezier", {"start": _as_list(start), "delta": _as_list(delta)}, T, grid_steps)


def control_point_path(points, T, grid_steps: int = DEFAULT_GRID_STEPS) -> PathSpec:
    """Natural cubic spline through ``points`` at uniformly spaced knots."""
    pts = [_as_list(p) for p in points]
    if len(pts) < 3:
        raise ConfigError("a control-point path needs at least three points")
    return PathSpec("control_points", {"points": pts}, T, grid_steps)


def circle_path(center, radius, T, start_angle=0.0, sweep=2 * np.pi, grid_steps: int = DEFAULT_GRID_STEPS) -> PathSpec:
    p = {"center": _as_list(center), "radius": float(radius), "start_angle": float(start_angle), "sweep": float(sweep)}
    return PathSpec("circle", p, T, grid_steps)


@dataclass(frozen=True)
class CriticalRegion:
    center: tuple[float, float]
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ConfigError("critical region radius must be positive")


CALIBRATED_REGION = CriticalRegion(
    (CALIBRATED_RYDBERG["Omega13"], CALIBRATED_RYDBERG["Delta13"]), 0.5 * CALIBRATED_RYDBERG["Omega13"]
)


def mass_term(Omega, Delta, region: CriticalRegion):
    """Signed distance from the disk boundary: negative inside, positive outside."""
    dist = np.hypot(np.asarray(Omega) - region.center[0], np.asarray(Delta) - region.center[1])
    out = dist - region.radius
    return float(out) if np.ndim(out) == 0 else out


def update_reference_path(
    ref: PathSpec,
    eta: float,
    objective: Callable[[PathSpec], float],
    step: float | None = None,
) -> PathSpec:
    """One gradient-ascent step on the interior control points of ``ref``.

    The gradient of ``objective`` is estimated by central differences with
    step ``1e-3 * scale`` where ``scale = max(1, max |point|)``. Endpoints are
    copied through untouched.
    """
    if ref.family != "control_points":
        raise ConfigError("update_reference_path needs a control_points path")
    if not eta >= 0:
        raise ConfigError("step size eta must be non-negative")
    pts = np.asarray(ref.params["points"], dtype=float)
    if eta == 0:
        return ref
    if step is None:
        step = 1e-3 * max(1.0, float(np.max(np.abs(pts))))

    def evaluate(candidate: np.ndarray) -> float:
        trial = PathSpec("control_points", {"points": candidate.tolist()}, ref.T, ref.grid_steps)
        try:
            value = float(objective(trial))
        except Exception as exc:
            raise ObjectiveEvaluationFailed(f"objective raised {exc!r}") from exc
        if not math.isfinite(value):
            raise ObjectiveEvaluationFailed(f"objective returned {value!r}")
        return value

    grad = np.zeros_like(pts)
    for i in range(1, len(pts) - 1):
        for j in range(pts.shape[1]):
            up, down = pts.copy(), pts.copy()
            up[i, j] += step
            down[i, j] -= step
            grad[i, j] = (evaluate(up) - evaluate(down)) / (2 * step)
    new = pts + eta * grad
    # Keep the original endpoint values bit for bit.
    new[0], new[-1] = pts[0], pts[-1]
    return PathSpec("control_points", {"points": new.tolist()}, ref.T, ref.grid_steps)
