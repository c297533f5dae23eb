"""Counterdiabatic gauge potential and residual non-adiabatic transitions.

In the instantaneous eigenbasis the gauge potential has matrix elements
``<m|A_mu|n> = -i <m|dH/dlam_mu|n> / (E_m - E_n)`` for ``m != n`` and zero on the
diagonal. All builders here work on stacks of parameter points, so a whole
path (or a Monte Carlo batch of paths) is handled with one batched ``eigh``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import eigh_fixed
from .errors import ConfigError, DegenerateSpectrum, GaugeDiscontinuity
from .models import ModelSpec
from .paths import PathSpec

DEGENERACY_TOL = 1e-12
# Matrix elements below this (relative to the spectral scale) count as uncoupled.
COUPLING_TOL = 1e-10
FD_STEP = 1e-5


@dataclass(frozen=True)
class AgpOptions:
    """``gap_threshold`` drops pairs with ``|E_m - E_n| <= gap_threshold``.

    ``second_order_weight`` multiplies the optional third-inverse-power term;
    ``None`` means "square of the path velocity" inside
    :func:`effective_hamiltonian` and 1 inside :func:`build_agp`.
    """

    gap_threshold: float = 0.0
    include_second_order: bool = False
    second_order_weight: Optional[float] = None

    def __post_init__(self):
        if not (np.isfinite(self.gap_threshold) and self.gap_threshold >= 0):
            raise ConfigError("gap_threshold must be a finite non-negative number")

    @classmethod
    def truncated(cls, min_gap: float, fraction: float = 0.1, **kw) -> "AgpOptions":
        """Preset that discards pairs closer than ``fraction * min_gap``."""
        return cls(gap_threshold=fraction * min_gap, **kw)


EXACT = AgpOptions()


def _scale(evals: np.ndarray) -> np.ndarray:
    return np.maximum(1.0, np.max(np.abs(evals), axis=-1))[..., None, None]


def _pair_masks(evals: np.ndarray, elements: np.ndarray, opts: AgpOptions):
    """Return (energy differences, keep mask) and raise on coupled degenerate pairs.

    ``elements`` is ``(..., n_comp, d, d)``: derivative matrix elements in the
    eigenbasis for every component.
    """
    diff = evals[..., :, None] - evals[..., None, :]
    d = evals.shape[-1]
    offdiag = ~np.eye(d, dtype=bool)
    scale = _scale(evals)
    degenerate = np.abs(diff) < DEGENERACY_TOL * scale
    dropped = np.abs(diff) <= opts.gap_threshold if opts.gap_threshold > 0 else np.zeros_like(degenerate)
    coupled = np.any(np.abs(elements) > COUPLING_TOL * scale[..., None, :, :], axis=-3)
    bad = offdiag & degenerate & coupled & ~dropped
    if np.any(bad):
        raise DegenerateSpectrum("gauge potential undefined: coupled degenerate levels")
    keep = offdiag & ~degenerate & ~dropped
    return diff, keep


def _derivative_elements(model: ModelSpec, lam: np.ndarray, evecs: np.ndarray) -> np.ndarray:
    """``V^+ dH_mu V`` for every component, shape ``(..., n_params, d, d)``."""
    vh = np.swapaxes(evecs, -1, -2).conj()
    out = [vh @ model.dH(lam, mu) @ evecs for mu in range(model.n_params)]
    return np.stack(out, axis=-3)


def agp_eigenbasis(model: ModelSpec, lam, opts: AgpOptions = EXACT):
    """Spectral data plus gauge-potential matrix elements in the eigenbasis.

    Returns ``(evals, evecs, dh_e, a1_e, a2_e)`` where ``a1_e[..., mu, m, n]``
    is ``<m|A_mu|n>`` and ``a2_e`` the unweighted second-order term (zeros if
    not requested).
    """
    lam = np.asarray(lam, dtype=float)
    h = model.H(lam)
    evals, evecs = eigh_fixed(0.5 * (h + np.swapaxes(h, -1, -2).conj()))
    dh_e = _derivative_elements(model, lam, evecs)
    diff, keep = _pair_masks(evals, dh_e, opts)
    safe = np.where(keep, diff, 1.0)[..., None, :, :]
    keep_c = keep[..., None, :, :]
    a1 = np.where(keep_c, -1j * dh_e / safe, 0.0)
    if opts.include_second_order:
        # The bare sum <m|dH|n>/(E_m-E_n)^3 is anti-Hermitian; -i makes it Hermitian.
        a2 = np.where(keep_c, -1j * dh_e / safe**3, 0.0)
    else:
        a2 = np.zeros_like(a1)
    return evals, evecs, dh_e, a1, a2


def build_agp(model: ModelSpec, lam, mu: int = 0, opts: AgpOptions = EXACT) -> np.ndarray:
    """Gauge potential ``A_mu`` at ``lam`` in the model's own basis."""
    if not 0 <= mu < model.n_params:
        raise ConfigError(f"component {mu} out of range for {model.name}")
    _, evecs, _, a1, a2 = agp_eigenbasis(model, lam, opts)
    op = a1[..., mu, :, :]
    if opts.include_second_order:
        w = 1.0 if opts.second_order_weight is None else opts.second_order_weight
        op = op + w * a2[..., mu, :, :]
    v = evecs
    return v @ op @ np.swapaxes(v, -1, -2).conj()


def effective_hamiltonian(model: ModelSpec, lam, lamdot, opts: AgpOptions = EXACT) -> np.ndarray:
    """``H(lam) + sum_mu lamdot^mu A_mu``; batched over leading axes of ``lam``."""
    lam = np.asarray(lam, dtype=float)
    lamdot = np.broadcast_to(np.asarray(lamdot, dtype=float), lam.shape)
    _, evecs, _, a1, a2 = agp_eigenbasis(model, lam, opts)
    drive = np.einsum("...m,...mij->...ij", lamdot, a1)
    if opts.include_second_order:
        w = lamdot**2 if opts.second_order_weight is None else opts.second_order_weight
        w = np.broadcast_to(np.asarray(w, dtype=float), lamdot.shape)
        drive = drive + np.einsum("...m,...mij->...ij", w, a2)
    # Adding the drive to H itself (not to the diagonalised H) keeps lamdot = 0 bit-exact.
    h = model.H(lam)
    h = 0.5 * (h + np.swapaxes(h, -1, -2).conj())
    cd = evecs @ drive @ np.swapaxes(evecs, -1, -2).conj()
    return h + 0.5 * (cd + np.swapaxes(cd, -1, -2).conj())


def _band_states(model: ModelSpec, lam: np.ndarray, band: int):
    h = model.H(lam)
    evals, evecs = eigh_fixed(0.5 * (h + np.swapaxes(h, -1, -2).conj()))
    return evals, evecs


def align_to_pivot(vecs: np.ndarray, pivot: np.ndarray) -> np.ndarray:
    """Rephase ``vecs (..., d)`` so component ``pivot (...)`` is real and non-negative.

    Using the centre point's pivot for its finite-difference neighbours keeps
    the neighbours in a gauge that is smooth through the centre.
    """
    comp = np.take_along_axis(vecs, pivot[..., None], axis=-1)
    mag = np.abs(comp)
    phase = np.where(mag > 0, comp / np.where(mag > 0, mag, 1.0), 1.0)
    return vecs * phase.conj()


def band_derivative_fd(model: ModelSpec, lam: np.ndarray, band: int, mu: int, h: float = FD_STEP):
    """Central-difference ``d|n>/dlam_mu`` in a gauge smooth through each point.

    Returns ``(psi, dpsi, psi_plus, psi_minus)``, each of shape ``(..., d)``.
    """
    lam = np.asarray(lam, dtype=float)
    _, vecs = _band_states(model, lam, band)
    psi = vecs[..., band]
    pivot = np.argmax(np.abs(psi), axis=-1)
    step = np.zeros(lam.shape)
    step[..., mu] = h
    _, vp = _band_states(model, lam + step, band)
    _, vm = _band_states(model, lam - step, band)
    plus = align_to_pivot(vp[..., band], pivot)
    minus = align_to_pivot(vm[..., band], pivot)
    return psi, (plus - minus) / (2 * h), plus, minus


def transport_phases(states: np.ndarray) -> np.ndarray:
    """Phases ``alpha_k`` such that ``exp(i alpha_k) states[k]`` is parallel transported.

    ``states`` is ``(n_points, d)``; consecutive transported states have real,
    positive overlap and ``alpha_0 = 0``.
    """
    overlaps = np.einsum("ki,ki->k", states[:-1].conj(), states[1:])
    if np.any(np.abs(overlaps) < 0.5):
        raise GaugeDiscontinuity("consecutive path states nearly orthogonal; refine the grid")
    return np.concatenate([[0.0], -np.cumsum(np.angle(overlaps))])


def _path_samples(path: PathSpec):
    t = path.grid
    return t, path.position(t), path.velocity(t)


def transition_amplitude(
    model: ModelSpec,
    path: PathSpec,
    n: int,
    m: int,
    with_agp: bool = True,
    opts: AgpOptions = EXACT,
    fd_step: float = FD_STEP,
) -> complex:
    """First-order amplitude leaked from band ``n`` into band ``m`` over the path.

    ``c_m(T) = int exp(i int (E_m - E_n)) sum_mu lamdot^mu (i<m|d_mu n> - <m|A_mu|n>) dt``
    by trapezoid quadrature on the path grid. The eigenvector derivative is
    taken by finite differences, independently of the spectral formula used
    for the gauge potential, so the ``with_agp`` cancellation is a genuine
    two-route comparison.
    """
    if m == n:
        raise ConfigError("transition amplitude needs distinct bands")
    if not (0 <= n < model.dim and 0 <= m < model.dim):
        raise ConfigError("band index out of range")
    t, lam, lamdot = _path_samples(path)
    evals, evecs, _, a1, _ = agp_eigenbasis(model, lam, opts)
    band_gap = np.abs(evals[:, m] - evals[:, n])
    if np.any(band_gap < DEGENERACY_TOL * _scale(evals)[:, 0, 0]):
        raise DegenerateSpectrum("bands touch along the path")
    bra_m = evecs[:, :, m].conj()
    geo = np.zeros(t.size, dtype=complex)
    for mu in range(model.n_params):
        if not np.any(lamdot[:, mu]):
            continue
        _, dpsi, _, _ = band_derivative_fd(model, lam, n, mu, fd_step)
        geo += lamdot[:, mu] * 1j * np.einsum("ti,ti->t", bra_m, dpsi)
    drive = geo
    if with_agp:
        drive = drive - np.einsum("tm,tm->t", lamdot, a1[:, :, m, n])
    # The per-point gauge flips sign where the pivot component changes; move the
    # integrand to the parallel-transport gauge of both bands so it is smooth.
    drive = drive * np.exp(1j * (transport_phases(evecs[:, :, n]) - transport_phases(evecs[:, :, m])))
    omega = evals[:, m] - evals[:, n]
    phase = np.concatenate([[0.0], np.cumsum(0.5 * (omega[1:] + omega[:-1]) * np.diff(t))])
    return complex(np.trapezoid(np.exp(1j * phase) * drive, t))


def adiabaticity_parameter(model: ModelSpec, path: PathSpec) -> float:
    """``max_t max_{m != n} |sum_mu lamdot^mu <m|d_mu H|n>| / (E_m - E_n)^2``."""
    _, lam, lamdot = _path_samples(path)
    evals, evecs, dh_e, _, _ = agp_eigenbasis(model, lam)
    num = np.abs(np.einsum("tm,tmij->tij", lamdot, dh_e))
    diff = evals[:, :, None] - evals[:, None, :]
    offdiag = ~np.eye(model.dim, dtype=bool)
    coupled = offdiag & (num > 0)
    if np.any(coupled & (np.abs(diff) < DEGENERACY_TOL * _scale(evals))):
        raise DegenerateSpectrum("degenerate levels along the path")
    ratio = np.where(coupled, num / np.where(coupled, diff, 1.0) ** 2, 0.0)
    return float(np.max(ratio, initial=0.0))
