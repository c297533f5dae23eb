"""Berry connection and curvature, the geometric/dynamical action split, and the
relative invariant ``nu_qua`` for open paths.

Sign conventions: the connection is ``A = i<psi|d psi>``, so a link overlap
``<psi(a)|psi(b)>`` is approximately ``exp(-i int_a^b A)``. Link phases and
plaquette fluxes are therefore taken with a minus sign, which keeps
``int A`` along a boundary equal to the enclosed flux.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .agp import align_to_pivot, transport_phases
from .core import eigh_fixed
from .errors import (
    ConfigError,
    DegenerateSpectrum,
    EndpointMismatch,
    GaugeDiscontinuity,
    OpenLoop,
    OriginSingularity,
)
from .models import ModelSpec
from .paths import PathSpec

FD_STEP = 1e-5
MIN_OVERLAP = 0.5
DEGENERACY_TOL = 1e-12
QUANTIZATION_THRESHOLD = 0.05


def band_states(model: ModelSpec, lam, band: int) -> tuple[np.ndarray, np.ndarray]:
    """Phase-fixed eigenvectors of one band at a stack of points.

    Returns ``(states (..., d), energies (...))``. Raises
    :class:`DegenerateSpectrum` if the band touches a neighbour anywhere.
    """
    if not 0 <= band < model.dim:
        raise ConfigError(f"band {band} out of range for dimension {model.dim}")
    h = model.H(lam)
    evals, evecs = eigh_fixed(0.5 * (h + np.swapaxes(h, -1, -2).conj()))
    scale = np.maximum(1.0, np.max(np.abs(evals), axis=-1))
    gaps = []
    if band > 0:
        gaps.append(evals[..., band] - evals[..., band - 1])
    if band < model.dim - 1:
        gaps.append(evals[..., band + 1] - evals[..., band])
    for g in gaps:
        if np.any(g < DEGENERACY_TOL * scale):
            raise DegenerateSpectrum(f"band {band} is degenerate somewhere on the sampled set")
    return evecs[..., band], evals[..., band]


def berry_connection(model: ModelSpec, lam, band: int, mu: int, h: float = FD_STEP):
    """``A_mu = i<psi|d_mu psi>`` by central differences.

    The neighbours are rephased onto the centre's pivot component, which is
    the local continuation of the deterministic eigenvector gauge. Works on
    stacks of points.
    """
    lam = np.asarray(lam, dtype=float)
    if not 0 <= mu < model.n_params:
        raise ConfigError(f"component {mu} out of range for {model.name}")
    psi, _ = band_states(model, lam, band)
    pivot = np.argmax(np.abs(psi), axis=-1)
    step = np.zeros(lam.shape)
    step[..., mu] = h
    plus = align_to_pivot(band_states(model, lam + step, band)[0], pivot)
    minus = align_to_pivot(band_states(model, lam - step, band)[0], pivot)
    for nb in (plus, minus):
        if np.any(np.abs(np.sum(psi.conj() * nb, axis=-1)) < MIN_OVERLAP):
            raise GaugeDiscontinuity("neighbour overlap below 0.5; reduce the step")
    value = 1j * np.sum(psi.conj() * (plus - minus), axis=-1) / (2 * h)
    if np.max(np.abs(value.imag), initial=0.0) > 1e-8:
        raise GaugeDiscontinuity("connection has an imaginary residual above 1e-8")
    return float(value.real) if value.ndim == 0 else value.real


def link_phases(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Normalised overlaps ``<a|b>/|<a|b>|`` along the last axis."""
    ov = np.sum(a.conj() * b, axis=-1)
    mag = np.abs(ov)
    if np.any(mag < 1e-12):
        raise GaugeDiscontinuity("orthogonal neighbouring states; refine the grid")
    return ov / mag


def plaquette_flux(states: np.ndarray) -> np.ndarray:
    """Flux through each cell of a grid of states ``(nx, ny, d)``.

    ``-arg(U_x(i,j) U_y(i+1,j) U_x(i,j+1)^* U_y(i,j)^*)``, each value in
    ``(-pi, pi]``. The result is invariant under any per-site phase change.
    """
    ux = link_phases(states[:-1, :], states[1:, :])
    uy = link_phases(states[:, :-1], states[:, 1:])
    loop = ux[:, :-1] * uy[1:, :] * ux[:, 1:].conj() * uy[:-1, :].conj()
    return -np.angle(loop)


@dataclass(frozen=True)
class CurvatureGrid:
    """Per-plaquette curvature on a rectangular window.

    ``x``/``y`` are plaquette centres; ``F[i, j]`` is the curvature of the cell
    centred at ``(x[i], y[j])`` and ``flux = F * cell_area``.
    """

    x: np.ndarray
    y: np.ndarray
    F: np.ndarray
    flux: np.ndarray

    @property
    def total_flux(self) -> float:
        return float(np.sum(self.flux))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["lambda1", "lambda2", "F"])
        for i, xv in enumerate(self.x):
            for j, yv in enumerate(self.y):
                writer.writerow([_fmt(xv), _fmt(yv), _fmt(self.F[i, j])])
        return buf.getvalue()


def _fmt(v: float) -> str:
    return "%.17g" % v


def _embed(model: ModelSpec, coords: np.ndarray, axes: Sequence[int], base) -> np.ndarray:
    """Place 2D window coordinates into the full parameter vector."""
    if model.n_params == 2 and tuple(axes) == (0, 1):
        return coords
    full = np.broadcast_to(
        np.asarray(model.defaults if base is None else base, dtype=float),
        coords.shape[:-1] + (model.n_params,),
    ).copy()
    full[..., axes[0]] = coords[..., 0]
    full[..., axes[1]] = coords[..., 1]
    return full


def berry_curvature_fd(
    model: ModelSpec,
    window,
    grid: tuple[int, int],
    band: int,
    *,
    axes: Sequence[int] = (0, 1),
    base=None,
    periodic: tuple[bool, bool] = (False, False),
    gauge: Optional[Callable[[np.ndarray], np.ndarray]] = None,
) -> CurvatureGrid:
    """Link-phase curvature over ``window = ((x0, x1), (y0, y1))``.

    ``grid = (nx, ny)`` counts sample points per side. For a periodic axis the
    last sample row reuses the first row's states, which closes the surface so
    the total flux is an exact multiple of 2*pi. ``gauge`` optionally rephases
    every sampled state by ``exp(i gauge(lam))`` (a diagnostic; the result is
    gauge invariant).
    """
    (x0, x1), (y0, y1) = window
    nx, ny = grid
    if nx < 2 or ny < 2:
        raise ConfigError("curvature grid needs at least 2 points per axis")
    xs = np.linspace(x0, x1, nx)
    ys = np.linspace(y0, y1, ny)
    coords = np.stack(np.meshgrid(xs, ys, indexing="ij"), axis=-1)
    lam = _embed(model, coords, axes, base)
    states, _ = band_states(model, lam, band)
    if gauge is not None:
        states = states * np.exp(1j * np.asarray(gauge(lam), dtype=float))[..., None]
    if periodic[0]:
        states[-1] = states[0]
    if periodic[1]:
        states[:, -1] = states[:, 0]
    flux = plaquette_flux(states)
    area = (xs[1] - xs[0]) * (ys[1] - ys[0])
    return CurvatureGrid(0.5 * (xs[1:] + xs[:-1]), 0.5 * (ys[1:] + ys[:-1]), flux / area, flux)


def berry_curvature_eq34(Omega, Delta):
    """Closed-form curvature ``Omega Delta / (2 (Omega^2 + Delta^2)^{3/2})`` of the (Omega, Delta) plane."""
    om = np.asarray(Omega, dtype=float)
    de = np.asarray(Delta, dtype=float)
    r2 = om * om + de * de
    if np.any(r2 == 0):
        raise OriginSingularity("the closed form is singular at Omega = Delta = 0")
    out = 0.5 * om * de / r2**1.5
    return float(out) if out.ndim == 0 else out


def geometric_action(states: np.ndarray) -> float:
    """Discrete line integral ``-sum_k arg<psi_k|psi_{k+1}>`` over a state sequence."""
    return float(-np.sum(np.angle(link_phases(states[:-1], states[1:]))))


def smooth_path_states(model: ModelSpec, path: PathSpec, band: int):
    """Band states along the path in a smooth gauge that matches the fixed gauge at both ends.

    States are parallel transported from the phase-fixed start state, then the
    leftover phase mismatch with the phase-fixed end state is spread linearly
    over the grid. Returns ``(states, energies, lam)``.
    """
    lam = path.position(path.grid)
    fixed, energies = band_states(model, lam, band)
    alpha = transport_phases(fixed)
    transported = fixed * np.exp(1j * alpha)[:, None]
    beta = np.angle(np.vdot(transported[-1], fixed[-1]))
    ramp = np.linspace(0.0, 1.0, lam.shape[0])
    states = transported * np.exp(1j * beta * ramp)[:, None]
    states[0], states[-1] = fixed[0], fixed[-1]
    return states, energies, lam


def action_split(model: ModelSpec, path: PathSpec, band: int) -> tuple[float, float]:
    """``(S_geo, S_dyn)`` for the band along ``path``.

    ``S_geo`` integrates the connection in the smooth gauge of
    :func:`smooth_path_states`, so it is gauge-fixed at both endpoints.
    ``S_dyn = -int E_band dt``.
    """
    states, energies, _ = smooth_path_states(model, path, band)
    s_geo = geometric_action(states)
    s_dyn = -float(np.trapezoid(energies, path.grid))
    return s_geo, s_dyn


@dataclass(frozen=True)
class GaugeTransform:
    theta: Callable[[np.ndarray], np.ndarray]

    def __call__(self, lam):
        return np.asarray(self.theta(np.asarray(lam, dtype=float)), dtype=float)


def apply_gauge(states: np.ndarray, lam: np.ndarray, g: GaugeTransform):
    """Rephase ``states[k]`` by ``exp(i theta(lam[k]))``.

    Returns ``(new_states, new_S_geo, predicted_shift)``; with ``A = i<psi|d psi>``
    the predicted shift of ``S_geo`` is ``-(theta(end) - theta(start))``.
    """
    theta = g(lam)
    if not np.all(np.isfinite(theta)):
        raise ConfigError("gauge function must be finite at every sample")
    new = np.asarray(states) * np.exp(1j * theta)[:, None]
    return new, geometric_action(new), -float(theta[-1] - theta[0])


def ruled_surface_states(model, path: PathSpec, ref_path: PathSpec, band: int, mesh: tuple[int, int]):
    """States on the strip ``q(s, u) = p(s) + u (r(s) - p(s))`` between two paths.

    Both paths are sampled at the same ``mesh[0] + 1`` equally spaced fractions
    of their durations; the strip has ``mesh[1] + 1`` rungs across.
    """
    n_s, n_u = mesh
    s = np.linspace(0.0, 1.0, n_s + 1)
    p = path.position(s * path.T)
    r = ref_path.position(s * ref_path.T)
    p[0], p[-1] = path.start, path.end
    r[0], r[-1] = ref_path.start, ref_path.end
    u = np.linspace(0.0, 1.0, n_u + 1)
    q = p[:, None, :] + u[None, :, None] * (r - p)[:, None, :]
    return band_states(model, q, band)[0], q


@dataclass(frozen=True)
class GeometryReport:
    connection_samples: np.ndarray  # (n_grid, n_params) along the path
    curvature_grid: Optional[CurvatureGrid]
    S_geo: float
    S_dyn: float
    S_geo_ref: float
    nu_qua: float
    nu_qua_raw: float
    nu_qua_rounded: int
    quantization_residual: float
    quantized: bool
    enclosed_flux: float
    stokes_residual: float
    notes: tuple[str, ...] = field(default=())

    def to_dict(self) -> dict:
        doc = {
            k: v
            for k, v in asdict(self).items()
            if k not in ("connection_samples", "curvature_grid", "notes")
        }
        doc["connection_samples"] = np.asarray(self.connection_samples).tolist()
        doc["notes"] = list(self.notes)
        if self.curvature_grid is not None:
            doc["curvature_total_flux"] = self.curvature_grid.total_flux
        return doc

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, allow_nan=True)


def _connection_along(model: ModelSpec, lam: np.ndarray, band: int) -> np.ndarray:
    try:
        cols = [berry_connection(model, lam, band, mu) for mu in range(model.n_params)]
    except GaugeDiscontinuity:
        return np.full(lam.shape, np.nan)
    return np.stack(cols, axis=-1)


def nu_qua(
    model: ModelSpec,
    path: PathSpec,
    ref_path: PathSpec,
    band: int,
    *,
    mesh: tuple[int, int] = (200, 200),
    curvature_window=None,
    curvature_grid_size: tuple[int, int] = (41, 41),
    gauge: Optional[GaugeTransform] = None,
) -> GeometryReport:
    """Relative invariant ``(S_geo(path) - S_geo(ref)) / 2 pi`` with a flux cross-check.

    The action difference fixes ``nu`` only modulo 1; the branch is chosen
    closest to the link-phase flux through the ruled strip between the two
    paths, and both the raw and the resolved values are reported.
    """
    for a, b, label in ((path.start, ref_path.start, "start"), (path.end, ref_path.end, "end")):
        if a.shape != b.shape or not np.array_equal(a, b):
            raise EndpointMismatch(f"paths differ at the {label} point: {a} vs {b}")
    states_c, energies, lam = smooth_path_states(model, path, band)
    states_r, _, lam_r = smooth_path_states(model, ref_path, band)
    if gauge is not None:
        states_c = apply_gauge(states_c, lam, gauge)[0]
        states_r = apply_gauge(states_r, lam_r, gauge)[0]
    s_geo = geometric_action(states_c)
    s_ref = geometric_action(states_r)
    s_dyn = -float(np.trapezoid(energies, path.grid))

    nu_raw = (s_geo - s_ref) / (2 * math.pi)
    strip, _ = ruled_surface_states(model, path, ref_path, band, mesh)
    flux = float(np.sum(plaquette_flux(strip)))
    # Orientation: the strip runs from path to reference, so its boundary is path then reversed reference.
    nu_flux = flux / (2 * math.pi)
    nu = nu_raw + round(nu_flux - nu_raw)
    rounded = int(round(nu))
    residual = abs(nu - rounded)

    notes = []
    grid_obj = None
    if curvature_window is None and model.n_params == 2:
        both = np.concatenate([lam, lam_r])
        lo, hi = both.min(axis=0), both.max(axis=0)
        pad = 0.05 * np.maximum(hi - lo, 1e-3)
        curvature_window = ((lo[0] - pad[0], hi[0] + pad[0]), (lo[1] - pad[1], hi[1] + pad[1]))
    if curvature_window is not None:
        try:
            grid_obj = berry_curvature_fd(model, curvature_window, curvature_grid_size, band)
        except (DegenerateSpectrum, GaugeDiscontinuity) as exc:
            notes.append(f"curvature grid skipped: {exc}")
    return GeometryReport(
        connection_samples=_connection_along(model, lam, band),
        curvature_grid=grid_obj,
        S_geo=s_geo,
        S_dyn=s_dyn,
        S_geo_ref=s_ref,
        nu_qua=nu,
        nu_qua_raw=nu_raw,
        nu_qua_rounded=rounded,
        quantization_residual=residual,
        quantized=residual < QUANTIZATION_THRESHOLD,
        enclosed_flux=flux,
        stokes_residual=abs(nu - nu_flux),
        notes=tuple(notes),
    )


def compensating_field_check(kappa, loop: PathSpec, tol: float = 1e-12) -> float:
    """Trapezoid loop integral of a vector field around a closed path.

    ``kappa`` is either a callable mapping points ``(n, d)`` to vectors
    ``(n, d)`` or an array of samples on ``loop.grid``.
    """
    start, end = loop.endpoints
    scale = max(1.0, float(np.max(np.abs(start))))
    if np.max(np.abs(start - end)) > tol * scale:
        raise OpenLoop("compensating-field check needs a closed loop")
    pts = loop.position(loop.grid)
    field_vals = kappa(pts) if callable(kappa) else np.asarray(kappa, dtype=float)
    field_vals = np.broadcast_to(np.asarray(field_vals, dtype=float), pts.shape)
    mid = 0.5 * (field_vals[1:] + field_vals[:-1])
    return float(np.sum(mid * np.diff(pts, axis=0)))
