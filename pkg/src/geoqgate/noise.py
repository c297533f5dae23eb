"""Classical noise on control parameters and curvature-induced friction.

Random streams are counter based: each ``(seed, realization, component)``
triple owns an independent Philox generator, so any realization can be
regenerated in isolation and parallel execution order never matters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .errors import ConfigError, NonuniformGrid, ZeroTemperature

KINDS = ("white", "ornstein-uhlenbeck")


@dataclass(frozen=True)
class NoiseModel:
    kind: str = "ornstein-uhlenbeck"
    sigma: float = 0.0
    tau: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"noise kind must be one of {KINDS}, got {self.kind!r}")
        if not (math.isfinite(self.sigma) and self.sigma >= 0):
            raise ConfigError("noise amplitude sigma must be finite and non-negative")
        if self.kind == "ornstein-uhlenbeck" and not (math.isfinite(self.tau) and self.tau > 0):
            raise ConfigError("correlation time tau must be positive")
        if int(self.seed) != self.seed or not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")


def generator(seed: int, realization: int, component: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(realization), int(component)])))


def uniform_step(grid) -> float:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2:
        raise NonuniformGrid("need at least two grid points")
    steps = np.diff(grid)
    dt = (grid[-1] - grid[0]) / (grid.size - 1)
    if dt <= 0 or np.max(np.abs(steps - dt)) > 1e-9 * max(abs(dt), 1.0):
        raise NonuniformGrid("noise sampling needs a uniform, increasing grid")
    return float(dt)


def sample_noise(model: NoiseModel, grid, component: int = 0, realization: int = 0) -> np.ndarray:
    """One noise trace on ``grid``.

    White noise has per-sample variance ``sigma^2 / dt``. OU noise starts from
    its stationary law ``N(0, sigma^2)`` and uses the exact update
    ``x_{k+1} = a x_k + sigma sqrt(1 - a^2) g_k`` with ``a = exp(-dt/tau)``.
    """
    grid = np.asarray(grid, dtype=float)
    dt = uniform_step(grid)
    n = grid.size
    if model.sigma == 0:
        return np.zeros(n)
    g = generator(model.seed, realization, component).standard_normal(n)
    if model.kind == "white":
        return model.sigma / math.sqrt(dt) * g
    a = math.exp(-dt / model.tau)
    drive = model.sigma * math.sqrt(-math.expm1(-2 * dt / model.tau)) * g
    drive[0] = model.sigma * g[0]
    return lfilter([1.0], [1.0, -a], drive)


def sample_noise_batch(model: NoiseModel, grid, n_components: int, realizations) -> np.ndarray:
    """Stacked traces, shape ``(len(realizations), len(grid), n_components)``."""
    out = np.empty((len(realizations), np.size(grid), n_components))
    for i, r in enumerate(realizations):
        for c in range(n_components):
            out[i, :, c] = sample_noise(model, grid, c, r)
    return out


def topological_friction(F01, T_noise: float, mode: str = "point") -> float:
    """``gamma = eps^{mu nu} F_{mu nu} / (2 pi T) = F_01 / (pi T)`` with ``eps^{01} = +1``.

    ``mode="point"`` expects a single curvature value; ``"mean"`` averages
    the supplied samples first.
    """
    if not T_noise > 0:
        raise ZeroTemperature("noise strength must be positive")
    arr = np.asarray(F01, dtype=float)
    if mode == "point":
        if arr.size != 1:
            raise ConfigError("point mode needs a single curvature value")
        f = float(arr.reshape(()))
    elif mode == "mean":
        f = float(np.mean(arr))
    else:
        raise ConfigError(f"unknown friction mode {mode!r}")
    return f / (math.pi * T_noise)


@dataclass(frozen=True)
class LangevinTrajectory:
    times: np.ndarray
    position: np.ndarray
    velocity: np.ndarray


def langevin_simulate(gamma: float, noise: NoiseModel, lam0: float, v0: float, grid,
                      realization: int = 0, component: int = 0) -> LangevinTrajectory:
    """Integrate ``lam'' + gamma lam' = xi(t)`` with semi-implicit Euler-Maruyama.

    ``v_{k+1} = (v_k + xi_k dt) / (1 + gamma dt)``, ``lam_{k+1} = lam_k + v_{k+1} dt``.
    The forcing ``xi`` is drawn from ``noise`` on the same grid.
    """
    grid = np.asarray(grid, dtype=float)
    dt = uniform_step(grid)
    xi = sample_noise(noise, grid, component, realization)
    a = 1.0 / (1.0 + gamma * dt)
    # v_{k+1} - a v_k = a dt xi_k, with v_0 carried through the filter state.
    forcing = a * dt * xi[:-1]
    v_tail, _ = lfilter([1.0], [1.0, -a], forcing, zi=[a * v0])
    velocity = np.concatenate([[v0], v_tail])
    position = lam0 + np.concatenate([[0.0], np.cumsum(v_tail * dt)])
    return LangevinTrajectory(grid.copy(), position, velocity)


def stationary_velocity_variance(gamma: float, sigma: float, dt: float) -> float:
    """Exact stationary variance of the discrete velocity under white forcing of intensity ``sigma^2``."""
    return sigma**2 / (gamma * (2 + gamma * dt))
