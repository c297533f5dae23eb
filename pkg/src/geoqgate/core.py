"""Dense linear algebra and time propagation (hbar = 1).

All routines are pure functions of their inputs. Operators are plain complex
``numpy`` arrays; the small dataclasses below only bundle results.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import DimensionMismatch, NonHermitianInput, StepTooCoarse

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
IDENTITY_2 = np.eye(2, dtype=complex)

HERMITIAN_TOL = 1e-10
NORM_DRIFT_TOL = 1e-8


@dataclass(frozen=True)
class SpectralDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


@dataclass(frozen=True)
class EvolutionResult:
    times: np.ndarray
    states: np.ndarray  # (n_times, dim)
    band_populations: np.ndarray  # (n_times, dim), rows sum to 1
    total_phase: float

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]


def hermiticity_error(h: np.ndarray) -> float:
    h = np.asarray(h)
    return float(np.max(np.abs(h - np.swapaxes(h, -1, -2).conj()), initial=0.0))


def check_hermitian(h: np.ndarray, tol: float = HERMITIAN_TOL) -> np.ndarray:
    h = np.asarray(h, dtype=complex)
    if h.ndim < 2 or h.shape[-1] != h.shape[-2]:
        raise DimensionMismatch(f"expected square matrix, got shape {h.shape}")
    err = hermiticity_error(h)
    if err > tol:
        raise NonHermitianInput(f"matrix deviates from Hermitian by {err:.3e}")
    return h


def fix_phases(vecs: np.ndarray) -> np.ndarray:
    """Rotate every column so its largest-magnitude entry is real and >= 0.

    Works on stacks: the last two axes are (component, column).
    Ties in magnitude resolve to the lowest index, so the result is deterministic.
    """
    vecs = np.array(vecs, dtype=complex, copy=True)
    idx = np.argmax(np.abs(vecs), axis=-2)[..., None, :]
    pivot = np.take_along_axis(vecs, idx, axis=-2)
    mag = np.abs(pivot)
    phase = np.where(mag > 0, pivot / np.where(mag > 0, mag, 1.0), 1.0)
    vecs *= phase.conj()
    # Write the pivot back as an exact non-negative real number.
    np.put_along_axis(vecs, idx, mag.astype(complex), axis=-2)
    return vecs


def eigh_fixed(h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Batched ``eigh`` followed by the deterministic phase fix. No Hermiticity check."""
    evals, evecs = np.linalg.eigh(h)
    return evals, fix_phases(evecs)


def eig_hermitian(h: np.ndarray) -> SpectralDecomposition:
    h = check_hermitian(h)
    # Symmetrise so tiny non-Hermitian noise cannot leak into the eigenvectors.
    h = 0.5 * (h + h.conj().T)
    evals, evecs = eigh_fixed(h)
    return SpectralDecomposition(evals, evecs)


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape or a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"cannot commute shapes {a.shape} and {b.shape}")
    return a @ b - b @ a


def step_propagator(h: np.ndarray, dt) -> np.ndarray:
    """``exp(-i h dt)`` via eigendecomposition; accepts stacks of matrices.

    ``dt`` broadcasts against the stack shape ``h.shape[:-2]``.
    """
    evals, evecs = np.linalg.eigh(h)
    phases = np.exp(-1j * evals * np.asarray(dt, dtype=float)[..., None])
    return (evecs * phases[..., None, :]) @ np.swapaxes(evecs, -1, -2).conj()


def _band_populations(psi: np.ndarray, basis_h: np.ndarray) -> np.ndarray:
    _, vecs = np.linalg.eigh(basis_h)
    amps = vecs.conj().T @ psi
    pops = np.abs(amps) ** 2
    return pops / pops.sum()


def propagate(
    h_of_t: Callable[[float], np.ndarray],
    psi0: np.ndarray,
    grid: np.ndarray,
    *,
    basis_of_t: Optional[Callable[[float], np.ndarray]] = None,
    reference: Optional[np.ndarray] = None,
    substeps: int = 1,
) -> EvolutionResult:
    """Integrate ``i d/dt psi = H(t) psi`` with the midpoint exponential rule.

    Each grid interval is split into ``substeps`` equal steps; states and band
    populations are recorded on ``grid`` only. Populations are taken against the
    eigenbasis of ``basis_of_t`` (default: ``h_of_t`` itself), which lets callers
    evolve under a counterdiabatic Hamiltonian while measuring in the bare bands.
    ``total_phase`` is ``arg <reference|psi(T)>`` with ``reference`` defaulting
    to ``psi0``.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 1 or np.any(np.diff(grid) <= 0):
        raise ValueError("time grid must be one-dimensional and strictly increasing")
    psi = np.asarray(psi0, dtype=complex).copy()
    norm0 = np.linalg.norm(psi)
    if abs(norm0 - 1.0) > 1e-10:
        raise ValueError(f"initial state not normalised (norm {norm0:.12f})")
    if basis_of_t is None:
        basis_of_t = h_of_t

    states = np.empty((grid.size, psi.size), dtype=complex)
    pops = np.empty((grid.size, psi.size))
    states[0] = psi
    pops[0] = _band_populations(psi, basis_of_t(grid[0]))
    for k in range(grid.size - 1):
        t0, t1 = grid[k], grid[k + 1]
        dt = (t1 - t0) / substeps
        for j in range(substeps):
            tm = t0 + (j + 0.5) * dt
            h = np.asarray(h_of_t(tm))
            if hermiticity_error(h) > HERMITIAN_TOL * max(1.0, float(np.max(np.abs(h)))):
                raise NonHermitianInput(f"H(t) is not Hermitian at t={tm:.6g}")
            before = np.linalg.norm(psi)
            psi = step_propagator(h, dt) @ psi
            drift = abs(np.linalg.norm(psi) - before)
            if drift > NORM_DRIFT_TOL:
                raise StepTooCoarse(f"norm drift {drift:.2e} at t={tm:.6g}")
        states[k + 1] = psi
        pops[k + 1] = _band_populations(psi, basis_of_t(t1))

    ref = psi0 if reference is None else np.asarray(reference, dtype=complex)
    total_phase = float(np.angle(np.vdot(ref, psi)))
    return EvolutionResult(grid.copy(), states, pops, total_phase)


def propagate_batch(
    h_mid: np.ndarray,
    dt,
    psi0: np.ndarray,
    *,
    record: bool = False,
) -> np.ndarray:
    """Midpoint-rule evolution of a batch of independent trajectories.

    ``h_mid`` has shape ``(n_steps, batch, d, d)`` and holds the Hamiltonian at
    each step midpoint; ``dt`` broadcasts to ``(n_steps, batch)``. ``psi0`` is
    ``(d,)`` or ``(batch, d)``. Returns final states ``(batch, d)``, or with
    ``record`` the full history ``(n_steps + 1, batch, d)``.
    """
    h_mid = np.asarray(h_mid)
    n_steps, batch, d, _ = h_mid.shape
    psi = np.broadcast_to(np.asarray(psi0, dtype=complex), (batch, d)).copy()
    dt = np.broadcast_to(np.asarray(dt, dtype=float), (n_steps, batch))
    history = np.empty((n_steps + 1, batch, d), dtype=complex) if record else None
    if record:
        history[0] = psi
    # Chunk the exponentials to bound memory on long grids.
    chunk = max(1, 2_000_000 // max(1, batch * d * d))
    for start in range(0, n_steps, chunk):
        stop = min(n_steps, start + chunk)
        u = step_propagator(h_mid[start:stop], dt[start:stop])
        for k in range(stop - start):
            psi = np.einsum("bij,bj->bi", u[k], psi)
            if record:
                history[start + k + 1] = psi
    drift = np.max(np.abs(np.linalg.norm(psi, axis=-1) - 1.0))
    if drift > NORM_DRIFT_TOL * max(1, n_steps):
        raise StepTooCoarse(f"batch norm drift {drift:.2e}")
    return history if record else psi
