"""Concrete parameterised Hamiltonian families.

A :class:`ModelSpec` maps a parameter vector ``lam`` (ordered as
``param_names``) to a Hermitian matrix. Builders are vectorised: ``lam`` may
carry leading batch axes, ``(..., n_params) -> (..., dim, dim)``. Every model
here except the monopole is affine in its parameters, so ``dH`` is exact.

Laser parameters of the Rydberg models are in units of 2*pi*MHz, which makes
time come out in microseconds with hbar = 1.
"""

from __future__ import annotations

import inspect
import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

from .core import SIGMA_X, SIGMA_Y, SIGMA_Z, propagate
from .errors import ConfigError, TooManySites

HBuilder = Callable[[np.ndarray], np.ndarray]
DHBuilder = Callable[[np.ndarray, int], np.ndarray]

FD_REL_STEP = 1e-6


@dataclass(frozen=True)
class ModelSpec:
    name: str
    param_names: tuple[str, ...]
    defaults: tuple[float, ...]
    dim: int
    h_builder: HBuilder = field(repr=False, compare=False)
    dh_builder: Optional[DHBuilder] = field(default=None, repr=False, compare=False)
    config: Mapping = field(default_factory=dict, compare=False)

    @property
    def n_params(self) -> int:
        return len(self.param_names)

    def _lam(self, lam) -> np.ndarray:
        if lam is None:
            return np.asarray(self.defaults, dtype=float)
        lam = np.asarray(lam, dtype=float)
        if lam.shape[-1:] != (self.n_params,):
            raise ConfigError(
                f"{self.name} expects {self.n_params} parameters {self.param_names}, "
                f"got shape {lam.shape}"
            )
        return lam

    def H(self, lam=None) -> np.ndarray:
        return self.h_builder(self._lam(lam))

    def dH(self, lam=None, mu: int = 0) -> np.ndarray:
        lam = self._lam(lam)
        if not 0 <= mu < self.n_params:
            raise ConfigError(f"parameter index {mu} out of range for {self.name}")
        if self.dh_builder is not None:
            return self.dh_builder(lam, mu)
        return self.dH_fd(lam, mu)

    def dH_fd(self, lam, mu: int) -> np.ndarray:
        """Central finite-difference derivative; the fallback for models without ``dh_builder``."""
        lam = self._lam(lam)
        scale = np.maximum(1.0, np.abs(lam[..., mu]))
        h = FD_REL_STEP * scale
        step = np.zeros(lam.shape)
        step[..., mu] = h
        return (self.h_builder(lam + step) - self.h_builder(lam - step)) / (2 * h)[..., None, None]

    def index(self, name: str) -> int:
        try:
            return self.param_names.index(name)
        except ValueError:
            raise ConfigError(f"{self.name} has no parameter {name!r}") from None

    def restrict(self, names: Sequence[str]) -> "ModelSpec":
        """Model over a subset of the parameters; the rest stay frozen at ``defaults``."""
        idx = [self.index(n) for n in names]
        base = np.asarray(self.defaults, dtype=float)
        parent = self

        def full(lam):
            lam = np.asarray(lam, dtype=float)
            out = np.broadcast_to(base, lam.shape[:-1] + base.shape).copy()
            out[..., idx] = lam
            return out

        def h(lam):
            return parent.h_builder(full(lam))

        def dh(lam, mu):
            return parent.dH(full(lam), idx[mu])

        return ModelSpec(
            name=self.name,
            param_names=tuple(names),
            defaults=tuple(base[idx]),
            dim=self.dim,
            h_builder=h,
            dh_builder=dh,
            config={**self.config, "controls": list(names)},
        )

    def project(self, basis: np.ndarray, name: Optional[str] = None) -> "ModelSpec":
        """Restrict the Hilbert space to the span of the orthonormal columns of ``basis``."""
        basis = np.asarray(basis)
        bh = basis.conj().T
        parent = self

        def h(lam):
            return bh @ parent.H(lam) @ basis

        def dh(lam, mu):
            return bh @ parent.dH(lam, mu) @ basis

        return ModelSpec(
            name=name or self.name,
            param_names=self.param_names,
            defaults=self.defaults,
            dim=basis.shape[1],
            h_builder=h,
            dh_builder=dh,
            config=self.config,
        )


def _affine(name, names, defaults, constant, operators, config) -> ModelSpec:
    """Model of the form ``constant + sum_i lam_i * operators[i]``."""
    ops = np.asarray(operators, dtype=complex)
    const = np.asarray(constant, dtype=complex)

    def h(lam):
        return const + np.tensordot(lam, ops, axes=([-1], [0]))

    def dh(lam, mu):
        return np.broadcast_to(ops[mu], np.shape(lam)[:-1] + ops.shape[1:]).copy()

    return ModelSpec(
        name=name,
        param_names=tuple(names),
        defaults=tuple(float(x) for x in defaults),
        dim=ops.shape[-1],
        h_builder=h,
        dh_builder=dh,
        config=config,
    )


def two_level(Omega: float = 0.0, Delta: float = 0.0) -> ModelSpec:
    """``H = Omega/2 sigma_x + Delta/2 sigma_z``; parameters ``(Omega, Delta)``."""
    return _affine(
        "two_level",
        ("Omega", "Delta"),
        (Omega, Delta),
        np.zeros((2, 2)),
        [SIGMA_X / 2, SIGMA_Z / 2],
        {"Omega": Omega, "Delta": Delta},
    )


def rydberg_ladder3(
    Omega12: float = 0.0, Omega23: float = 0.0, Delta12: float = 0.0, Delta23: float = 0.0
) -> ModelSpec:
    """Ground / intermediate / Rydberg ladder in the rotating frame.

    ``H = [[0, O12/2, 0], [O12/2, -D12, O23/2], [0, O23/2, -(D12 + D23)]]``.
    """
    e = np.zeros((4, 3, 3))
    e[0, 0, 1] = e[0, 1, 0] = 0.5
    e[1, 1, 2] = e[1, 2, 1] = 0.5
    e[2, 1, 1] = -1.0
    e[2, 2, 2] = -1.0
    e[3, 2, 2] = -1.0
    return _affine(
        "rydberg_ladder3",
        ("Omega12", "Omega23", "Delta12", "Delta23"),
        (Omega12, Omega23, Delta12, Delta23),
        np.zeros((3, 3)),
        e,
        {"Omega12": Omega12, "Omega23": Omega23, "Delta12": Delta12, "Delta23": Delta23},
    )


def _site_op(op: np.ndarray, site: int, n: int) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for j in range(n):
        out = np.kron(out, op if j == site else np.eye(2))
    return out


def rydberg_chain(Omega: Sequence[float], Delta: Sequence[float], C6: float, N: int) -> ModelSpec:
    """Interacting chain ``sum_i (O_i X_i + D_i Z_i) + sum_{i<j} C6/|i-j|^6 Z_i Z_j``.

    Parameters are ``Omega_0..Omega_{N-1}, Delta_0..Delta_{N-1}, C6``.
    """
    if N > 12:
        raise TooManySites(f"rydberg_chain supports at most 12 sites, got {N}")
    Omega = list(map(float, Omega))
    Delta = list(map(float, Delta))
    if len(Omega) != N or len(Delta) != N:
        raise ConfigError("Omega and Delta need one entry per site")
    dim = 2**N
    ops = [_site_op(SIGMA_X, i, N) for i in range(N)]
    ops += [_site_op(SIGMA_Z, i, N) for i in range(N)]
    zz = np.zeros((dim, dim), dtype=complex)
    for i, j in itertools.combinations(range(N), 2):
        zz += _site_op(SIGMA_Z, i, N) @ _site_op(SIGMA_Z, j, N) / abs(i - j) ** 6
    ops.append(zz)
    names = [f"Omega_{i}" for i in range(N)] + [f"Delta_{i}" for i in range(N)] + ["C6"]
    return _affine(
        "rydberg_chain",
        names,
        Omega + Delta + [C6],
        np.zeros((dim, dim)),
        ops,
        {"Omega": Omega, "Delta": Delta, "C6": C6, "N": N},
    )


def chain_coupling(C6: float, i: int, j: int) -> float:
    return C6 / abs(i - j) ** 6


def kitaev_k(mu: float = 0.0, t: float = 1.0, Delta: float = 1.0, k: float = 0.0) -> ModelSpec:
    """Bloch Hamiltonian of the Kitaev chain at fixed momentum ``k``.

    ``H(k) = [[-(mu + 2t cos k), i Delta sin k], [-i Delta sin k, mu + 2t cos k]]``
    with parameters ``(mu, Delta, t)``.
    """
    c, s = math.cos(k), math.sin(k)
    return _affine(
        "kitaev_k",
        ("mu", "Delta", "t"),
        (mu, Delta, t),
        np.zeros((2, 2)),
        [-SIGMA_Z, -s * SIGMA_Y, -2 * c * SIGMA_Z],
        {"mu": mu, "t": t, "Delta": Delta, "k": k},
    )


def kitaev_gap(mu, t, Delta, k):
    """Band splitting ``E_+ - E_-`` of :func:`kitaev_k`."""
    return 2 * np.sqrt((mu + 2 * t * np.cos(k)) ** 2 + (Delta * np.sin(k)) ** 2)


def kitaev_real(mu: float = 0.0, t: float = 1.0, Delta: float = 1.0, N: int = 20) -> ModelSpec:
    """Open Kitaev chain as a ``2N x 2N`` Bogoliubov-de Gennes matrix.

    Nambu ordering ``(c_1..c_N, c_1^+..c_N^+)``; ``H = 1/2 Psi^+ H_BdG Psi`` with
    ``H_BdG = [[h, D], [D^+, -h^T]]``, ``h = -mu - t(hops)`` and antisymmetric
    pairing ``D[j+1, j] = Delta``.
    """
    if N > 64:
        raise TooManySites(f"kitaev_real supports at most 64 sites, got {N}")
    hop = np.eye(N, k=1) + np.eye(N, k=-1)
    pair = np.eye(N, k=-1) - np.eye(N, k=1)
    z = np.zeros((N, N))
    d_mu = np.block([[-np.eye(N), z], [z, np.eye(N)]])
    d_t = np.block([[-hop, z], [z, hop.T]])
    d_delta = np.block([[z, pair], [pair.T, z]])
    return _affine(
        "kitaev_real",
        ("mu", "Delta", "t"),
        (mu, Delta, t),
        np.zeros((2 * N, 2 * N)),
        [d_mu, d_delta, d_t],
        {"mu": mu, "t": t, "Delta": Delta, "N": N},
    )


def _lattice_bonds(Lx: int, Ly: int) -> list[tuple[int, int]]:
    bonds = []
    for x in range(Lx):
        for y in range(Ly):
            i = x * Ly + y
            if x + 1 < Lx:
                bonds.append((i, (x + 1) * Ly + y))
            if y + 1 < Ly:
                bonds.append((i, i + 1))
    return bonds


def _lattice_symmetries(Lx: int, Ly: int) -> list[np.ndarray]:
    """Site permutations of the open rectangle (reflections, plus transposes if square)."""
    coords = [(x, y) for x in range(Lx) for y in range(Ly)]
    maps = [
        lambda x, y: (x, y),
        lambda x, y: (Lx - 1 - x, y),
        lambda x, y: (x, Ly - 1 - y),
        lambda x, y: (Lx - 1 - x, Ly - 1 - y),
    ]
    if Lx == Ly:
        maps += [lambda x, y, f=f: f(y, x) for f in list(maps)]
    perms = []
    for f in maps:
        perms.append(np.array([f(x, y)[0] * Ly + f(x, y)[1] for x, y in coords]))
    return perms


def symmetric_sector_basis(Lx: int, Ly: int) -> np.ndarray:
    """Orthonormal basis of the sector invariant under lattice symmetries and global spin flip.

    Each column is the normalised uniform superposition over one orbit of
    computational basis states; the transverse-field Ising ground state lives here.
    """
    n = Lx * Ly
    dim = 2**n
    bits = (np.arange(dim)[:, None] >> (n - 1 - np.arange(n))) & 1
    weights = 1 << (n - 1 - np.arange(n))
    images = []
    for perm in _lattice_symmetries(Lx, Ly):
        permuted = np.empty_like(bits)
        permuted[:, perm] = bits
        images.append(permuted @ weights)
        images.append((1 - permuted) @ weights)
    orbit_min = np.min(np.stack(images), axis=0)
    reps, label = np.unique(orbit_min, return_inverse=True)
    basis = np.zeros((dim, reps.size))
    basis[np.arange(dim), label] = 1.0
    basis /= np.linalg.norm(basis, axis=0)
    return basis.astype(complex)


def tfim2d(J: float = 1.0, h: float = 1.0, Lx: int = 3, Ly: int = 3, sector: str = "full") -> ModelSpec:
    """Open-boundary 2D transverse-field Ising model ``-J sum ZZ - h sum X``.

    Parameters are ``(J, h)``. ``sector="symmetric"`` projects onto
    :func:`symmetric_sector_basis`, which is exact for dynamics that start there.
    """
    n = Lx * Ly
    if n > 12:
        raise TooManySites(f"tfim2d supports at most 12 spins, got {n}")
    if sector not in ("full", "symmetric"):
        raise ConfigError(f"unknown sector {sector!r}")
    dim = 2**n
    states = np.arange(dim)
    spins = 1 - 2 * ((states[:, None] >> (n - 1 - np.arange(n))) & 1)
    zz_diag = np.zeros(dim)
    for i, j in _lattice_bonds(Lx, Ly):
        zz_diag += spins[:, i] * spins[:, j]
    xsum = np.zeros((dim, dim))
    for i in range(n):
        xsum[states, states ^ (1 << (n - 1 - i))] += 1.0
    config = {"J": J, "h": h, "Lx": Lx, "Ly": Ly, "sector": sector}
    model = _affine("tfim2d", ("J", "h"), (J, h), np.zeros((dim, dim)), [-np.diag(zz_diag), -xsum], config)
    if sector == "symmetric":
        basis = symmetric_sector_basis(Lx, Ly)
        ops = [basis.conj().T @ op @ basis for op in (-np.diag(zz_diag), -xsum)]
        model = _affine("tfim2d", ("J", "h"), (J, h), np.zeros(ops[0].shape), ops, config)
    return model


def spin_half_monopole(theta: float = 0.0, phi: float = 0.0, radius: float = 1.0) -> ModelSpec:
    """``H = radius/2 * n(theta, phi) . sigma``: a unit Berry monopole at the origin."""

    def h(lam):
        lam = np.asarray(lam, dtype=float)
        th, ph, r = lam[..., 0], lam[..., 1], lam[..., 2]
        nx = r * np.sin(th) * np.cos(ph)
        ny = r * np.sin(th) * np.sin(ph)
        nz = r * np.cos(th)
        out = np.empty(lam.shape[:-1] + (2, 2), dtype=complex)
        out[..., 0, 0] = nz / 2
        out[..., 1, 1] = -nz / 2
        out[..., 0, 1] = (nx - 1j * ny) / 2
        out[..., 1, 0] = (nx + 1j * ny) / 2
        return out

    def dh(lam, mu):
        lam = np.asarray(lam, dtype=float)
        th, ph, r = lam[..., 0], lam[..., 1], lam[..., 2]
        if mu == 0:
            vec = (r * np.cos(th) * np.cos(ph), r * np.cos(th) * np.sin(ph), -r * np.sin(th))
        elif mu == 1:
            vec = (-r * np.sin(th) * np.sin(ph), r * np.sin(th) * np.cos(ph), np.zeros_like(th))
        else:
            vec = (np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th))
        return sum(np.multiply.outer(v, s) for v, s in zip(vec, (SIGMA_X, SIGMA_Y, SIGMA_Z))) / 2

    return ModelSpec(
        "spin_half_monopole",
        ("theta", "phi", "radius"),
        (float(theta), float(phi), float(radius)),
        2,
        h,
        dh,
        {"theta": theta, "phi": phi, "radius": radius},
    )


def ideal_gate() -> np.ndarray:
    """Target single-qubit gate ``exp(i pi/4 sigma_z) = diag(e^{i pi/4}, e^{-i pi/4})``."""
    return np.diag([np.exp(1j * np.pi / 4), np.exp(-1j * np.pi / 4)])


def intermediate_population(path, T: Optional[float] = None, model: Optional[ModelSpec] = None,
                            substeps: int = 1) -> float:
    """Peak population of the intermediate level along a ladder path.

    ``path`` lives in the four-parameter space of :func:`rydberg_ladder3`; the
    atom starts in the ground level and is propagated with the bare ladder
    Hamiltonian. ``T`` rescales the path duration when given.
    """
    from .paths import with_duration

    if T is not None:
        path = with_duration(path, T)
    model = model or rydberg_ladder3()
    psi0 = np.array([1.0, 0.0, 0.0], dtype=complex)
    res = propagate(lambda t: model.H(path.position(t)), psi0, path.grid, substeps=substeps)
    return float(np.max(np.abs(res.states[:, 1]) ** 2))


MODEL_BUILDERS: dict[str, Callable[..., ModelSpec]] = {
    "two_level": two_level,
    "rydberg_ladder3": rydberg_ladder3,
    "rydberg_chain": rydberg_chain,
    "kitaev_k": kitaev_k,
    "kitaev_real": kitaev_real,
    "tfim2d": tfim2d,
    "spin_half_monopole": spin_half_monopole,
}


def model_from_dict(doc: Mapping) -> ModelSpec:
    extra = set(doc) - {"model", "params", "controls"}
    if extra:
        raise ConfigError(f"unknown model fields: {sorted(extra)}")
    name = doc.get("model")
    if name not in MODEL_BUILDERS:
        raise ConfigError(f"unknown model {name!r}; choose from {sorted(MODEL_BUILDERS)}")
    builder = MODEL_BUILDERS[name]
    params = dict(doc.get("params", {}))
    allowed = set(inspect.signature(builder).parameters)
    unknown = set(params) - allowed
    if unknown:
        raise ConfigError(f"unknown parameters for {name}: {sorted(unknown)}")
    try:
        model = builder(**params)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    if "controls" in doc:
        model = model.restrict(doc["controls"])
    return model


def model_to_dict(model: ModelSpec) -> dict:
    params = {k: v for k, v in model.config.items() if k != "controls"}
    doc = {"model": model.name, "params": params}
    if "controls" in model.config:
        doc["controls"] = list(model.config["controls"])
    return doc
