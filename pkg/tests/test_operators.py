import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_hermitian
from gecko.errors import InputError
from gecko.operators import (
    algebra_project,
    algebra_reconstruct,
    derivative_weights,
    expm_directional_derivative,
    hermitian_expm,
    hs_metric,
    pauli_basis,
    pauli_labels,
    pauli_operator,
)

X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]])
Z = np.diag([1.0 + 0j, -1.0])
I2 = np.eye(2, dtype=complex)


def test_zz_is_diagonal():
    np.testing.assert_array_equal(pauli_operator("ZZ").matrix, np.diag([1, -1, -1, 1]))


def test_labels_follow_kronecker_order():
    np.testing.assert_array_equal(pauli_operator("XI").matrix, np.kron(X, I2))
    np.testing.assert_array_equal(pauli_operator("IY").matrix, np.kron(I2, Y))
    np.testing.assert_array_equal(pauli_operator("XYZ").matrix, np.kron(np.kron(X, Y), Z))


def test_pauli_squares_to_identity():
    M = pauli_operator("XI").matrix
    np.testing.assert_allclose(M, M.conj().T)
    np.testing.assert_allclose(M @ M, np.eye(4))


def test_distinct_strings_are_trace_orthogonal():
    assert abs(np.trace(pauli_operator("XY").matrix @ pauli_operator("XZ").matrix)) == 0


@pytest.mark.parametrize("bad", ["", "XA", "xz", "I" * 11])
def test_bad_labels_rejected(bad):
    with pytest.raises(InputError):
        pauli_operator(bad)


def test_basis_is_orthonormal_and_ordered():
    labels = pauli_labels(2)
    assert len(labels) == 15
    assert labels[:4] == ("IX", "IY", "IZ", "XI")
    B = pauli_basis(2)
    gram = np.einsum("iab,jba->ij", B, B) / 4
    np.testing.assert_allclose(gram, np.eye(15), atol=1e-15)


def test_expm_of_zero_is_identity():
    np.testing.assert_allclose(hermitian_expm(np.zeros((4, 4)), 3.7), np.eye(4), atol=1e-15)


def test_expm_single_qubit_rotation():
    t = 0.83
    np.testing.assert_allclose(hermitian_expm(X, t), np.cos(t) * I2 - 1j * np.sin(t) * X, atol=1e-14)


def test_expm_matches_pade_oracle(rng):
    H = random_hermitian(rng, 4)
    np.testing.assert_allclose(hermitian_expm(H, 0.7), scipy.linalg.expm(-1j * 0.7 * H), atol=1e-10)


def test_expm_rejects_non_hermitian(rng):
    with pytest.raises(InputError):
        hermitian_expm(rng.normal(size=(3, 3)), 1.0)


def test_derivative_of_zero_direction(rng):
    H = random_hermitian(rng, 4)
    np.testing.assert_array_equal(expm_directional_derivative(H, np.zeros((4, 4)), 0.4), 0)


def test_derivative_commuting_case():
    phi, t = 0.6, 1.3
    got = expm_directional_derivative(phi * X, X, t)
    want = -1j * t * X @ scipy.linalg.expm(-1j * phi * t * X)
    np.testing.assert_allclose(got, want, atol=1e-14)


def test_derivative_matches_finite_differences(rng):
    H = random_hermitian(rng, 4)
    V = random_hermitian(rng, 4)
    t, h = 0.9, 1e-5
    fd = (scipy.linalg.expm(-1j * t * (H + h * V)) - scipy.linalg.expm(-1j * t * (H - h * V))) / (2 * h)
    got = expm_directional_derivative(H, V, t)
    assert np.linalg.norm(got - fd) / np.linalg.norm(fd) < 1e-6


def test_derivative_matches_block_exponential(rng):
    # exp([[A, E], [0, A]]) carries the Frechet derivative in its corner block
    H = random_hermitian(rng, 4)
    V = random_hermitian(rng, 4)
    t = 1.1
    big = np.block([[-1j * t * H, -1j * t * V], [np.zeros((4, 4)), -1j * t * H]])
    want = scipy.linalg.expm(big)[:4, 4:]
    np.testing.assert_allclose(expm_directional_derivative(H, V, t), want, atol=1e-12)


def test_derivative_with_degenerate_spectrum(rng):
    H = np.diag([1.0, 1.0, -2.0, 0.5]).astype(complex)
    V = random_hermitian(rng, 4)
    big = np.block([[-1j * H, -1j * V], [np.zeros((4, 4)), -1j * H]])
    np.testing.assert_allclose(expm_directional_derivative(H, V, 1.0), scipy.linalg.expm(big)[:4, 4:], atol=1e-12)


def test_derivative_weights_diagonal():
    lam = np.array([0.3, -1.2])
    W = derivative_weights(lam, 2.0)
    np.testing.assert_allclose(np.diag(W), -2j * np.exp(-2j * lam))


def test_project_single_generator():
    G1 = pauli_basis(2)[0]
    a = algebra_project(-1j * G1)
    want = np.zeros(15)
    want[0] = 1.0
    np.testing.assert_allclose(a, want, atol=1e-15)


def test_project_drops_global_phase():
    np.testing.assert_allclose(algebra_project(1j * 0.37 * np.eye(4)), np.zeros(15), atol=1e-15)


def test_project_rejects_hermitian_input():
    with pytest.raises(InputError):
        algebra_project(pauli_operator("XZ").matrix)


def test_reconstruction_completes_basis(rng):
    A = random_hermitian(rng, 4)
    Omega = -1j * A
    a = algebra_project(Omega)
    a0 = np.trace(A).real / 4
    np.testing.assert_allclose(algebra_reconstruct(a, 2, a0), Omega, atol=1e-10)


def test_metric_normalisation():
    G = pauli_basis(2)
    assert hs_metric(G[0], G[0]) == pytest.approx(1.0)
    assert hs_metric(G[0], G[1]) == pytest.approx(0.0)
    assert hs_metric(np.eye(4), np.eye(4)) == pytest.approx(1.0)


@settings(max_examples=30, deadline=None)
@given(
    st.lists(st.floats(-3, 3), min_size=16, max_size=16),
    st.floats(0.0, 5.0),
)
def test_propagator_is_unitary(entries, t):
    A = np.array(entries).reshape(4, 4)
    H = A + A.T
    U = hermitian_expm(H, t)
    np.testing.assert_allclose(U.conj().T @ U, np.eye(4), atol=1e-10)
