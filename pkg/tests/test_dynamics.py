import math
import warnings

import numpy as np
import pytest
from scipy.linalg import expm, hadamard

from ramsey_probe.dynamics import (ModelParams, apply_H, coupling_slice, diagonal, energy, evolve,
                                   fwht, init_state, survival_probability, trace_dynamics,
                                   trotter_steps)
from ramsey_probe.errors import ArgumentError
from ramsey_probe.models import multilevel_trace, rabi_period, readout_time
from ramsey_probe.spectrum import build_diagonal, extract_levels


def dense_H(params, table):
    dim = 4 * params.N
    return np.array([apply_H(e, params, table) for e in np.eye(dim, dtype=complex)]).T


def reference_H(params, table):
    """Kronecker-product construction of the full Hamiltonian."""
    N, L = params.N, params.L
    I2, X = np.eye(2), np.array([[0, 1], [1, 0]])
    sz = np.diag([1.0, -1.0])
    Hd = np.array([[1, 1], [1, -1]]) / math.sqrt(2)
    W = np.array([[1.0]])
    for _ in range(L):
        W = np.kron(W, Hd)
    ref = np.zeros((N, N)); ref[0, 0] = 1
    HQ = np.kron(np.diag([1.0, 0.0]), params.epsilon0 * ref) + \
        np.kron(np.diag([0.0, 1.0]), np.diag(table.values.astype(float)))
    A = np.kron(X, W)
    return (-0.5 * params.omega * np.kron(sz, np.eye(2 * N)) + np.kron(I2, HQ)
            + params.c * np.kron(X, A))


@pytest.fixture
def n3():
    return ModelParams(3, 3, 3), build_diagonal(3, 3, 3)


def test_init_state(n3):
    p, _ = n3
    psi = init_state(p)
    assert psi.shape == (32,)
    assert np.flatnonzero(psi).tolist() == [16]
    assert np.linalg.norm(psi) == 1.0
    assert survival_probability(psi) == 1.0


def test_survival_examples():
    psi = np.zeros(32, complex); psi[3] = 1
    assert survival_probability(psi) == 0
    psi = np.zeros(32, complex); psi[16] = psi[8] = 1 / math.sqrt(2)
    assert survival_probability(psi) == pytest.approx(0.5)


def test_fwht_matches_hadamard_matrix():
    rng = np.random.default_rng(1)
    a = rng.normal(size=(3, 64)) + 1j * rng.normal(size=(3, 64))
    np.testing.assert_allclose(fwht(a.copy()), a @ hadamard(64).T / 8, atol=1e-13)


@pytest.mark.parametrize("N", [2, 16, 1024])
def test_fwht_self_inverse(N):
    a = np.random.default_rng(N).normal(size=N) + 0j
    assert np.abs(fwht(fwht(a.copy())) - a).max() <= 1e-12


def test_fwht_rejects_bad_length():
    with pytest.raises(ArgumentError):
        fwht(np.zeros(12, complex))


@pytest.mark.parametrize("n,x,y", [(2, 2, 2), (3, 3, 3), (3, 2, 3)])
def test_apply_H_matches_kronecker_construction(n, x, y):
    p = ModelParams(n, x, y, omega=1.3, epsilon0=-0.7, c=0.05)
    t = build_diagonal(n, x, y)
    np.testing.assert_allclose(dense_H(p, t), reference_H(p, t), atol=1e-13)


def test_apply_H_on_reference_state(n3):
    p, t = n3
    out = apply_H(init_state(p), p, t).reshape(2, 2, p.N)
    assert out[1, 0, 0] == pytest.approx(-0.5)
    np.testing.assert_allclose(out[0, 1], p.c / math.sqrt(p.N))
    mask = np.ones_like(out, bool); mask[1, 0, 0] = False; mask[0, 1] = False
    assert np.abs(out[mask]).max() == 0


def test_diagonal_element_of_reference(n3):
    p, t = n3
    psi = init_state(p)
    assert np.vdot(psi, apply_H(psi, p, t)).real == pytest.approx(p.omega / 2 + p.epsilon0)


def test_zero_coupling_is_diagonal(n3):
    p, t = n3
    p0 = p.replace(c=0.0)
    H = dense_H(p0, t)
    assert np.abs(H - np.diag(np.diag(H))).max() == 0


def test_ground_level_coupling_n5():
    p, t = ModelParams(5, 3, 3), build_diagonal(5, 3, 3)
    s = extract_levels(t)
    psi1 = np.zeros((2, 2, p.N), complex)
    psi1[0, 1, t.values == 0] = 1 / math.sqrt(s.m1)
    h01 = np.vdot(psi1.reshape(-1), apply_H(init_state(p), p, t))
    assert h01.real == pytest.approx(0.02 * math.sqrt(12 / 1024), abs=1e-15)


@pytest.mark.parametrize("n,x,y", [(2, 2, 2), (3, 3, 3), (4, 3, 3), (4, 2, 4)])
def test_hermiticity(n, x, y):
    p, t = ModelParams(n, x, y), build_diagonal(n, x, y)
    rng = np.random.default_rng(n)
    for _ in range(5):
        u = rng.normal(size=4 * p.N) + 1j * rng.normal(size=4 * p.N)
        v = rng.normal(size=4 * p.N) + 1j * rng.normal(size=4 * p.N)
        lhs = np.vdot(u, apply_H(v, p, t))
        rhs = np.conj(np.vdot(v, apply_H(u, p, t)))
        assert abs(lhs - rhs) <= 1e-12


def test_dimension_mismatch(n3):
    p, t = n3
    with pytest.raises(ArgumentError):
        apply_H(np.zeros(16, complex), p, t)
    with pytest.raises(ArgumentError):
        apply_H(init_state(p), p, build_diagonal(3, 2, 3))


def test_coupling_slice_is_exact(n3):
    p, t = n3
    B = (dense_H(p, t) - np.diag(diagonal(p, t).reshape(-1))) / p.c
    rng = np.random.default_rng(7)
    psi = rng.normal(size=32) + 1j * rng.normal(size=32)
    for theta in (0.01, 0.7, 2.0):
        np.testing.assert_allclose(coupling_slice(psi, theta), expm(-1j * theta * B) @ psi,
                                   atol=1e-13)


def test_evolve_zero_time_is_identity(n3):
    p, t = n3
    psi = init_state(p)
    assert np.array_equal(evolve(psi, 0.0, p, t), psi)
    with pytest.raises(ArgumentError):
        evolve(psi, -1.0, p, t)


@pytest.mark.parametrize("method", ["krylov", "trotter"])
def test_no_coupling_keeps_probe_excited(n3, method):
    p, t = n3
    p0 = p.replace(c=0.0)
    psi = evolve(init_state(p0), 37.0, p0, t, method=method)
    assert survival_probability(psi) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("tt", [1.0, 50.0, 300.0])
def test_krylov_matches_dense_expm(n3, tt):
    p, t = n3
    exact = expm(-1j * tt * reference_H(p, t)) @ init_state(p)
    assert np.linalg.norm(evolve(init_state(p), tt, p, t) - exact) <= 1e-8


def test_krylov_random_state_n4():
    p, t = ModelParams(4, 3, 3), build_diagonal(4, 3, 3)
    rng = np.random.default_rng(3)
    psi = rng.normal(size=4 * p.N) + 1j * rng.normal(size=4 * p.N)
    psi /= np.linalg.norm(psi)
    exact = expm(-1j * 40.0 * dense_H(p, t)) @ psi
    assert np.linalg.norm(evolve(psi, 40.0, p, t) - exact) <= 1e-8


def test_trotter_matches_krylov_n3(n3):
    p, t = n3
    k = evolve(init_state(p), 100.0, p, t, method="krylov", tol=1e-12)
    tr = evolve(init_state(p), 100.0, p, t, method="trotter")
    assert np.linalg.norm(k - tr) <= 1e-6


def test_trotter_orders_converge(n3):
    p, t = n3
    exact = expm(-1j * 20.0 * reference_H(p, t)) @ init_state(p)
    errs = [np.linalg.norm(evolve(init_state(p), 20.0, p, t, method="trotter", trotter_order=o)
                           - exact) for o in (1, 2, 4)]
    assert errs[0] > errs[1] > errs[2]


def test_trotter_step_rule(n3):
    p, t = n3
    # ||H||_est = 0.5 + 1 + 1 + 0.02
    assert trotter_steps(100.0, p, t) == math.ceil(100 * 2.52 / 0.05)


@pytest.mark.parametrize("method", ["krylov", "trotter"])
def test_unitarity_and_energy_conservation(method):
    p, t = ModelParams(4, 3, 3), build_diagonal(4, 3, 3)
    psi = init_state(p)
    e0 = energy(psi, p, t)
    for _ in range(5):
        psi = evolve(psi, 13.0, p, t, method=method)
        assert abs(np.linalg.norm(psi) - 1) <= 1e-10
        assert abs(energy(psi, p, t) - e0) <= 1e-6


def test_trace_basics(n3):
    p, t = n3
    tr = trace_dynamics(p, t, np.linspace(0, 50, 11))
    assert tr.probs[0] == 1.0
    assert np.all((tr.probs >= 0) & (tr.probs <= 1 + 1e-9))
    assert tr.backend == "full-krylov" and tr.spectrum_digest == t.digest()
    assert tr.to_csv().splitlines()[:2] == ["t,p", "0.0,1.0"]


def test_trace_grid_validation(n3):
    p, t = n3
    with pytest.raises(ArgumentError):
        trace_dynamics(p, t, [1.0, 2.0])
    with pytest.raises(ArgumentError):
        trace_dynamics(p, t, [0.0, 2.0, 1.0])


def test_resonant_trace_dips_within_transfer_time():
    p, t = ModelParams(4, 3, 3), build_diagonal(4, 3, 3)
    m1 = extract_levels(t).m1
    T = readout_time(p.N, m1, p.c)
    tr = trace_dynamics(p, t, np.linspace(0, T, 60))
    assert tr.min_prob < 0.5


def test_shots_are_seeded(n3):
    p, t = n3
    grid = np.linspace(0, 200, 21)
    exact = trace_dynamics(p, t, grid)
    a = trace_dynamics(p, t, grid, shots=1000, seed=5)
    b = trace_dynamics(p, t, grid, shots=1000, seed=5)
    assert np.array_equal(a.probs, b.probs)
    assert a.meta == {"shots": 1000, "seed": 5}
    assert np.abs(a.probs - exact.probs).max() < 5 * math.sqrt(0.25 / 1000)
    assert np.all(np.round(a.probs * 1000) == a.probs * 1000)


@pytest.mark.parametrize("n", [3, 4])
def test_full_space_matches_arrow_model(n):
    p, t = ModelParams(n, 3, 3), build_diagonal(n, 3, 3)
    s = extract_levels(t)
    grid = np.linspace(0, rabi_period(p.N, s.m1, p.c) / 4, 81)
    full = trace_dynamics(p, t, grid)
    arrow = multilevel_trace(s, p, grid)
    assert np.abs(full.probs - arrow.probs).max() <= 0.02


def test_params_validation():
    with pytest.raises(ArgumentError):
        ModelParams(3, 3, 3, c=-0.1)
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        ModelParams(3, 3, 3, c=0.5)
    assert any("weak-coupling" in str(x.message) for x in w)
    p = ModelParams(4, 3, 3)
    assert (p.L, p.N) == (6, 64)
    assert (p.omega, p.epsilon0, p.c) == (1.0, -1.0, 0.02)
