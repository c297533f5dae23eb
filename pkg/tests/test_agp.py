import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from conftest import random_hermitian
from geoqgate.agp import (
    AgpOptions,
    adiabaticity_parameter,
    band_derivative_fd,
    build_agp,
    effective_hamiltonian,
    transition_amplitude,
)
from geoqgate.core import SIGMA_Y, commutator, eigh_fixed
from geoqgate.errors import ConfigError, DegenerateSpectrum
from geoqgate.models import ModelSpec, two_level
from geoqgate.paths import linear_path


def affine_model(h0, h1, name="random"):
    h0, h1 = np.asarray(h0, complex), np.asarray(h1, complex)
    return ModelSpec(
        name=name,
        param_names=("lam",),
        defaults=(0.0,),
        dim=h0.shape[0],
        h_builder=lambda lam: h0 + lam[..., 0, None, None] * h1,
        dh_builder=lambda lam, mu: np.broadcast_to(h1, lam.shape[:-1] + h1.shape).copy(),
    )


def random_models(n, d=4, seed=7):
    rng = np.random.default_rng(seed)
    return [affine_model(random_hermitian(rng, d), random_hermitian(rng, d)) for _ in range(n)]


def detuning_model(Omega=1.0):
    return two_level(Omega, 0.0).restrict(["Delta"])


def symbolic_agp(Omega, Delta):
    """``A_Delta`` for ``Omega/2 sx + Delta/2 sz`` from an exact symbolic eigendecomposition."""
    o, d = sp.symbols("Omega Delta", real=True)
    h = sp.Matrix([[d / 2, o / 2], [o / 2, -d / 2]])
    dh = sp.diff(h, d)
    pairs = []
    for val, _, vecs in h.eigenvects():
        v = vecs[0] / sp.sqrt((vecs[0].H * vecs[0])[0])
        pairs.append((val, v))
    a = sp.zeros(2, 2)
    for em, vm in pairs:
        for en, vn in pairs:
            if em != en:
                a += -sp.I * vm * (vm.H * dh * vn)[0] * vn.H / (em - en)
    a = sp.simplify(a)
    return np.array(a.subs({o: Omega, d: Delta}).evalf(30), dtype=complex)


def test_sigma_y_example_against_symbolic_oracle():
    a = build_agp(detuning_model(1.0), [0.0])
    np.testing.assert_allclose(a, -0.5 * SIGMA_Y, atol=1e-14)
    np.testing.assert_allclose(a, symbolic_agp(1.0, 0.0), atol=1e-14)
    for o, d in [(1.0, 0.7), (0.3, -2.0), (2.5, 1.1)]:
        np.testing.assert_allclose(build_agp(detuning_model(o), [d]), symbolic_agp(o, d), atol=1e-13)
        # Closed form -Omega sy / (2 (Omega^2 + Delta^2)).
        np.testing.assert_allclose(build_agp(detuning_model(o), [d]), -o * SIGMA_Y / (2 * (o * o + d * d)), atol=1e-14)


def test_parameter_independent_model_has_zero_agp(rng):
    h0 = random_hermitian(rng, 4)
    model = affine_model(h0, np.zeros((4, 4)))
    np.testing.assert_array_equal(build_agp(model, [0.3]), np.zeros((4, 4)))


@pytest.mark.parametrize("model", random_models(5))
def test_agp_hermitian_with_zero_diagonal(model):
    a = build_agp(model, [0.4])
    np.testing.assert_allclose(a, a.conj().T, atol=1e-13)
    _, v = eigh_fixed(model.H([0.4]))
    assert np.max(np.abs(np.diag(v.conj().T @ a @ v))) < 1e-12


@pytest.mark.parametrize("model", random_models(5, seed=11))
def test_commutator_identity(model):
    lam = [0.25]
    h, a = model.H(lam), build_agp(model, lam)
    _, v = eigh_fixed(h)
    # Sign fixed by the expansion formula: [A, H] = i dH off the diagonal.
    resid = v.conj().T @ (commutator(a, h) - 1j * model.dH(lam, 0)) @ v
    off = resid - np.diag(np.diag(resid))
    assert np.max(np.abs(off)) < 1e-9


@pytest.mark.parametrize("model", random_models(5, seed=13))
def test_matrix_element_identity(model):
    lam = np.array([0.6])
    _, v = eigh_fixed(model.H(lam))
    a_e = v.conj().T @ build_agp(model, lam) @ v
    for n in range(model.dim):
        _, dpsi, _, _ = band_derivative_fd(model, lam, n, 0)
        for m in range(model.dim):
            if m != n:
                assert abs(a_e[m, n] - 1j * (v[:, m].conj() @ dpsi)) < 1e-8


def test_truncation_never_increases_norm():
    for model in random_models(5, seed=17):
        evals = np.linalg.eigvalsh(model.H([0.1]))
        gaps = np.abs(evals[:, None] - evals[None, :])[np.triu_indices(4, 1)]
        thresholds = np.concatenate([[0.0], np.sort(gaps) + 1e-9, [np.max(gaps) + 1.0]])
        norms = [np.linalg.norm(build_agp(model, [0.1], 0, AgpOptions(gap_threshold=e)), 2) for e in thresholds]
        assert np.all(np.diff(norms) <= 1e-12)
        assert norms[-1] == 0.0


def test_truncated_preset():
    opts = AgpOptions.truncated(2.0)
    assert opts.gap_threshold == pytest.approx(0.2)
    with pytest.raises(ConfigError):
        AgpOptions(gap_threshold=-1.0)


def test_coupled_degeneracy_raises():
    with pytest.raises(DegenerateSpectrum):
        build_agp(two_level(0.0, 0.0).restrict(["Omega"]), [0.0])
    # Along Delta the same point is degenerate but uncoupled, so it is skipped.
    np.testing.assert_array_equal(build_agp(detuning_model(0.0), [0.0]), np.zeros((2, 2)))


def test_uncoupled_degeneracy_is_skipped():
    # Two decoupled copies share a spectrum; the cross pairs carry no coupling.
    h0 = np.diag([0.0, 1.0, 0.0, 1.0]).astype(complex)
    h1 = np.zeros((4, 4), complex)
    h1[0, 1] = h1[1, 0] = h1[2, 3] = h1[3, 2] = 0.5
    a = build_agp(affine_model(h0, h1), [0.0])
    assert np.all(np.isfinite(a))


def test_effective_hamiltonian_examples():
    model = detuning_model(1.0)
    np.testing.assert_array_equal(effective_hamiltonian(model, [0.0], [0.0]), model.H([0.0]))
    np.testing.assert_allclose(effective_hamiltonian(model, [0.0], [2.0]), model.H([0.0]) - SIGMA_Y, atol=1e-14)


@settings(max_examples=30, deadline=None)
@given(st.floats(-3, 3), st.floats(-5, 5), st.integers(0, 2**31))
def test_effective_hamiltonian_offdiagonal_definition(lam, lamdot, seed):
    rng = np.random.default_rng(seed)
    model = affine_model(random_hermitian(rng, 3), random_hermitian(rng, 3))
    evals = np.linalg.eigvalsh(model.H([lam]))
    if np.min(np.diff(evals)) < 1e-3:
        return
    he = effective_hamiltonian(model, [lam], [lamdot])
    h, a = model.H([lam]), build_agp(model, [lam])
    _, v = eigh_fixed(h)
    lhs = v.conj().T @ he @ v
    rhs = v.conj().T @ (h + lamdot * a) @ v
    assert np.max(np.abs(lhs - rhs)) < 1e-12 * max(1.0, abs(lamdot), np.max(np.abs(evals)))


def test_second_order_weight_defaults_to_squared_velocity():
    model = detuning_model(1.0)
    base = effective_hamiltonian(model, [0.3], [2.0])
    with_two = effective_hamiltonian(model, [0.3], [2.0], AgpOptions(include_second_order=True))
    explicit = effective_hamiltonian(model, [0.3], [2.0], AgpOptions(include_second_order=True, second_order_weight=4.0))
    np.testing.assert_allclose(with_two, explicit, atol=1e-15)
    extra = with_two - base
    np.testing.assert_allclose(extra, extra.conj().T, atol=1e-15)
    assert np.linalg.norm(extra) > 0


def sweep(rate, delta_max=10.0, steps=4000):
    return linear_path([-delta_max], [delta_max], 2 * delta_max / rate, steps)


@pytest.mark.parametrize("model", random_models(10, seed=3))
def test_transition_amplitude_cancels_with_exact_agp(model):
    path = linear_path([-1.0], [1.0], 3.0, 2000)
    for n, m in [(0, 1), (1, 3)]:
        assert abs(transition_amplitude(model, path, n, m, with_agp=True)) < 1e-8


def test_transition_amplitude_two_level_limits():
    model = detuning_model(1.0)
    slow = sweep(0.01, steps=20000)
    fast = sweep(10.0)
    assert abs(transition_amplitude(model, slow, 0, 1, with_agp=False)) < 1e-3
    assert abs(transition_amplitude(model, fast, 0, 1, with_agp=False)) > 0.1
    assert abs(transition_amplitude(model, fast, 0, 1, with_agp=True)) < 1e-8


def test_transition_amplitude_truncation_residual_reported():
    # Dropping every pair leaves the bare non-adiabatic amplitude.
    model = detuning_model(1.0)
    path = sweep(10.0)
    bare = transition_amplitude(model, path, 0, 1, with_agp=False)
    dropped = transition_amplitude(model, path, 0, 1, with_agp=True, opts=AgpOptions(gap_threshold=100.0))
    assert dropped == pytest.approx(bare, abs=1e-12)


def test_transition_amplitude_rejects_same_band():
    with pytest.raises(ConfigError):
        transition_amplitude(detuning_model(), sweep(1.0), 0, 0)


def test_adiabaticity_parameter():
    model = detuning_model(1.0)
    assert adiabaticity_parameter(model, linear_path([0.5], [0.5], 1.0)) == 0.0
    # Peak of |<0|dH|1>| / gap^2 sits at the crossing: (Omega / 2) / Omega^2 = 1/2 for Omega = 1.
    p1 = adiabaticity_parameter(model, sweep(1.0, steps=2000))
    assert p1 == pytest.approx(0.5, rel=1e-9)
    p2 = adiabaticity_parameter(detuning_model(2.0), sweep(1.0, steps=2000))
    assert p2 == pytest.approx(p1 / 4, rel=1e-9)
