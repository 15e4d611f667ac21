import numpy as np
import pytest

from matsys import linalg
from matsys.errors import DimensionMismatch, DomainError, NonHermitian

X = linalg.PAULI_X
Z = linalg.PAULI_Z


def test_frobenius_inner_matches_entrywise_sum():
    rng = np.random.default_rng(7)
    a = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    b = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    # independent oracle: explicit double loop over entries of tr(A* B)
    acc = 0.0 + 0.0j
    for i in range(3):
        for j in range(3):
            acc += np.conj(a[i, j]) * b[i, j]
    assert abs(linalg.frobenius_inner(a, b) - acc) < 1e-12


def test_frobenius_inner_on_projected_generators():
    # <M, X + 1> = 1 and <M, Z + 0> = 0 for M = (|+><+| (+) 1)/2
    m = 0.5 * linalg.direct_sum(linalg.plus_projector(), 1.0)
    a1 = linalg.direct_sum(X, 1.0)
    a2 = linalg.direct_sum(Z, 0.0)
    assert abs(linalg.frobenius_inner(m, a1) - 1.0) < 1e-12
    assert abs(linalg.frobenius_inner(m, a2)) < 1e-12


def test_frobenius_inner_shape_mismatch():
    with pytest.raises(DimensionMismatch):
        linalg.frobenius_inner(np.eye(2), np.eye(3))


def test_hermitianize_accepts_roundoff_and_rejects_junk():
    a = np.array([[1.0, 1e-14j], [0.0, 2.0]])
    h = linalg.hermitianize(a)
    assert np.allclose(h, h.conj().T)
    with pytest.raises(NonHermitian):
        linalg.hermitianize(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_hermitian_eig_ascending_and_reconstructs():
    rng = np.random.default_rng(3)
    for n in (2, 3, 5, 8):
        a = linalg.random_hermitian(rng, n)
        dec = linalg.hermitian_eig(a)
        assert np.all(np.diff(dec.eigenvalues) >= -1e-14)
        v = dec.eigenvectors
        assert np.linalg.norm(v.conj().T @ v - np.eye(n)) < 1e-10
        err = np.linalg.norm(dec.reconstruct() - a)
        assert err < 1e-10 * (1.0 + np.linalg.norm(a))


def test_hermitian_eig_known_spectrum():
    # (|+><+| (+) 1)/2 has eigenvalues 0, 1/2, 1/2
    m = 0.5 * linalg.direct_sum(linalg.plus_projector(), 1.0)
    w = linalg.hermitian_eig(m).eigenvalues
    assert np.allclose(w, [0.0, 0.5, 0.5], atol=1e-12)


def test_matrix_function_spectral_mapping():
    rng = np.random.default_rng(11)
    a = linalg.random_hermitian(rng, 6)
    sq = linalg.matrix_function(a, lambda w: w**2)
    assert np.linalg.norm(sq - a @ a) < 1e-10 * (1 + np.linalg.norm(a @ a))
    w_f = np.sort(np.linalg.eigvalsh(sq))
    w_direct = np.sort(np.linalg.eigvalsh(a) ** 2)
    assert np.allclose(w_f, w_direct, atol=1e-10)


def test_matrix_log_exp_roundtrip():
    rng = np.random.default_rng(5)
    rho = linalg.random_density(rng, 4)
    lg = linalg.matrix_log(rho)
    back = linalg.matrix_exp(lg)
    assert np.linalg.norm(back - rho) < 1e-10


def test_matrix_log_domain_error():
    with pytest.raises(DomainError):
        linalg.matrix_log(np.diag([1.0, 0.0]))
    with pytest.raises(DomainError):
        linalg.matrix_log(np.diag([1.0, -2.0]))


def test_is_psd_on_tilted_state():
    # (1 + lambda * (Z (+) 0))/3 leaves the psd cone at |lambda| = 1
    for lam, expect in ((0.9, True), (1.0, True), (1.2, False)):
        a = (np.eye(3) + lam * linalg.direct_sum(Z, 0.0)) / 3.0
        assert linalg.is_psd(a) is expect


def test_schur_psd_matches_direct_on_fiber_family():
    # rho(lambda, z) is psd iff |z|^2 <= lambda(1 - lambda)
    plus = linalg.plus_projector()
    ket_plus = np.array([1.0, 1.0], dtype=complex) / np.sqrt(2.0)
    for lam in (0.0, 0.2, 0.5, 0.9, 1.0):
        for z in (0.0, 0.1, 0.3 + 0.2j, 0.5, 0.45 + 0.45j):
            rho = np.zeros((3, 3), dtype=complex)
            rho[:2, :2] = (1 - lam) * plus
            rho[:2, 2] = z * ket_plus
            rho[2, :2] = np.conj(z) * ket_plus
            rho[2, 2] = lam
            expect = abs(z) ** 2 <= lam * (1 - lam) + 1e-12
            assert linalg.schur_psd_test(rho, 2) is expect
            assert linalg.is_psd(rho) is expect


def test_schur_agrees_with_direct_psd_randomly():
    rng = np.random.default_rng(2024)
    agree = 0
    for _ in range(1000):
        n = int(rng.integers(2, 7))
        p = int(rng.integers(1, n))
        kind = rng.integers(0, 3)
        if kind == 0:
            m = linalg.random_hermitian(rng, n)
        elif kind == 1:
            g = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
            m = g @ g.conj().T
        else:
            g = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
            m = g @ g.conj().T - 0.05 * np.eye(n)
        agree += linalg.schur_psd_test(m, p) is linalg.is_psd(m)
    assert agree == 1000


def test_pinv_hermitian_moore_penrose():
    a = linalg.direct_sum(np.array([[2.0, 0.0], [0.0, 0.5]]), 0.0)
    p = linalg.pinv_hermitian(a)
    assert np.allclose(a @ p @ a, a, atol=1e-12)
    assert np.allclose(p @ a @ p, p, atol=1e-12)


def test_direct_sum_layout():
    d = linalg.direct_sum(X, 1.0)
    assert d.shape == (3, 3)
    assert d[2, 2] == 1.0
    assert np.allclose(d[:2, :2], X)
    assert np.count_nonzero(d[:2, 2]) == 0
