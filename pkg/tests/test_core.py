import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from geoqgate.core import (
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    commutator,
    eig_hermitian,
    propagate,
    propagate_batch,
    step_propagator,
)
from geoqgate.errors import DimensionMismatch, NonHermitianInput

from conftest import random_hermitian


def test_sigma_z_spectrum_and_vectors():
    sd = eig_hermitian(SIGMA_Z)
    np.testing.assert_array_equal(sd.eigenvalues, [-1.0, 1.0])
    np.testing.assert_allclose(np.abs(sd.eigenvectors), [[0, 1], [1, 0]], atol=1e-15)


def test_sigma_x_and_two_level_spectrum():
    np.testing.assert_allclose(eig_hermitian(SIGMA_X).eigenvalues, [-1, 1], atol=1e-14)
    h = 1.5 * SIGMA_X + 2.0 * SIGMA_Z
    np.testing.assert_allclose(eig_hermitian(h).eigenvalues, [-2.5, 2.5], atol=1e-14)


def test_non_hermitian_rejected():
    with pytest.raises(NonHermitianInput):
        eig_hermitian(np.array([[0, 1], [0, 0]], dtype=complex))
    with pytest.raises(DimensionMismatch):
        eig_hermitian(np.zeros((2, 3)))


def test_phase_fix_rule_and_determinism(rng):
    h = random_hermitian(rng, 6)
    a = eig_hermitian(h).eigenvectors
    b = eig_hermitian(h).eigenvectors
    assert a.tobytes() == b.tobytes()
    pivots = a[np.argmax(np.abs(a), axis=0), np.arange(6)]
    assert np.all(pivots.imag == 0) and np.all(pivots.real >= 0)


def test_spectral_reconstruction_100_random(rng):
    for _ in range(100):
        d = int(rng.integers(1, 17))
        h = random_hermitian(rng, d)
        sd = eig_hermitian(h)
        assert np.max(np.abs(sd.reconstruct() - h)) < 1e-10
        v = sd.eigenvectors
        assert np.max(np.abs(v.conj().T @ v - np.eye(d))) < 1e-10
        assert np.all(np.diff(sd.eigenvalues) >= 0)


def test_commutator_pauli_algebra():
    np.testing.assert_allclose(commutator(SIGMA_X, SIGMA_Y), 2j * SIGMA_Z)
    np.testing.assert_allclose(commutator(SIGMA_Z, SIGMA_X), 2j * SIGMA_Y)
    np.testing.assert_array_equal(commutator(SIGMA_Y, SIGMA_Y), np.zeros((2, 2)))
    with pytest.raises(DimensionMismatch):
        commutator(SIGMA_X, np.eye(3))


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 8), st.floats(-50, 50), st.integers(0, 2**31))
def test_step_propagator_unitary_and_matches_expm(d, dt, seed):
    h = random_hermitian(np.random.default_rng(seed), d)
    u = step_propagator(h, dt)
    assert np.max(np.abs(u.conj().T @ u - np.eye(d))) < 1e-12
    np.testing.assert_allclose(u, expm(-1j * h * dt), atol=1e-9 * max(1, abs(dt)))


def test_zero_hamiltonian_is_identity():
    psi0 = np.array([0.6, 0.8j])
    res = propagate(lambda t: np.zeros((2, 2)), psi0, np.linspace(0, 3, 11))
    np.testing.assert_allclose(res.final_state, psi0, atol=1e-15)


def test_constant_sigma_z_phase():
    t_end = 2.7
    res = propagate(lambda t: SIGMA_Z / 2, np.array([1, 0], dtype=complex), np.linspace(0, t_end, 50))
    assert abs(res.final_state[0] - np.exp(-1j * t_end / 2)) < 1e-13
    assert res.total_phase == pytest.approx(-t_end / 2)
    np.testing.assert_allclose(res.band_populations.sum(axis=1), 1.0, atol=1e-9)


def _sweep(rate, n, substeps=1):
    # Landau-Zener sweep of the detuning from -10 to 10 at gap 1.
    T = 20 / rate
    h = lambda t: 0.5 * SIGMA_X + 0.5 * (-10 + rate * t) * SIGMA_Z
    psi0 = np.linalg.eigh(h(0.0))[1][:, 0].astype(complex)
    return propagate(h, psi0, np.linspace(0, T, n), substeps=substeps)


def _ivp_final(rate):
    # Independent oracle: adaptive Runge-Kutta on the same Schrodinger equation.
    def rhs(t, y):
        psi = y[:2] + 1j * y[2:]
        h = 0.5 * SIGMA_X + 0.5 * (-10 + rate * t) * SIGMA_Z
        d = -1j * (h @ psi)
        return np.concatenate([d.real, d.imag])

    g = np.linalg.eigh(0.5 * SIGMA_X - 5 * SIGMA_Z)[1][:, 0].real
    sol = solve_ivp(rhs, (0, 20 / rate), [g[0], g[1], 0, 0], rtol=1e-11, atol=1e-12, method="DOP853")
    return sol.y[:2, -1] + 1j * sol.y[2:, -1]


def test_fast_sweep_excites():
    res = _sweep(10.0, 2001)
    p_exc = res.band_populations[-1, 1]
    assert p_exc > 0.1
    psi = _ivp_final(10.0)
    _, vecs = np.linalg.eigh(0.5 * SIGMA_X + 5 * SIGMA_Z)
    assert p_exc == pytest.approx(abs(np.vdot(vecs[:, 1], psi)) ** 2, abs=1e-6)
    # Asymptotic Landau-Zener value, loose because the sweep window is finite.
    assert p_exc == pytest.approx(np.exp(-np.pi / 20), abs=0.03)


def test_second_order_convergence():
    ref = _sweep(2.0, 2, substeps=64 * 64).final_state
    errs = [np.linalg.norm(_sweep(2.0, 2, substeps=k).final_state - ref) for k in (64, 128)]
    assert 3.5 <= errs[0] / errs[1] <= 4.5


def test_norm_preserved_and_bad_inputs():
    res = _sweep(1.0, 501)
    assert abs(np.linalg.norm(res.final_state) - 1) < 1e-10
    with pytest.raises(ValueError):
        propagate(lambda t: SIGMA_Z, np.array([1, 1.0]), [0, 1])
    with pytest.raises(ValueError):
        propagate(lambda t: SIGMA_Z, np.array([1, 0.0]), [0, 0])


def test_non_hermitian_generator_rejected():
    with pytest.raises(NonHermitianInput):
        propagate(lambda t: np.array([[0, 1], [0, 0]]), np.array([1, 0.0]), [0, 1.0])


def test_batch_matches_serial(rng):
    hs = np.stack([random_hermitian(rng, 3) for _ in range(4)])
    steps = np.stack([hs * (1 + 0.1 * k) for k in range(20)])
    psi0 = np.array([1, 0, 0], dtype=complex)
    out = propagate_batch(steps, 0.05, psi0)
    for b in range(4):
        res = propagate(lambda t, b=b: steps[min(int(t / 0.05), 19)][b], psi0, np.arange(21) * 0.05)
        np.testing.assert_allclose(out[b], res.final_state, atol=1e-12)
