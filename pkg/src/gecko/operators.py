"""Dense operator primitives on n-qubit Hilbert spaces.

Pauli strings, the propagator ``exp(-i H t)`` of a Hermitian generator, its
directional (Frechet) derivative, and coordinates of anti-Hermitian matrices
in the traceless Pauli basis.

Both the propagator and its derivative come from a single eigendecomposition
``H = V diag(lam) V^dagger``.  The derivative uses the Daleckii-Krein form

    D exp(-i H t)[E] = V (W * (V^dagger E V)) V^dagger,

    W_ab = (f(lam_a) - f(lam_b)) / (lam_a - lam_b),   f(x) = exp(-i x t),

with ``W_aa = f'(lam_a) = -i t exp(-i lam_a t)`` on (near-)degenerate pairs.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import InputError

PAULI_ALPHABET = "IXYZ"

_SINGLE = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

MAX_QUBITS = 10
HERMITIAN_RTOL = 1e-12
DEGENERACY_RTOL = 1e-12


def _check_label(label):
    if not isinstance(label, str) or len(label) == 0:
        raise InputError(f"Pauli label must be a non-empty string, got {label!r}")
    bad = set(label) - set(PAULI_ALPHABET)
    if bad:
        raise InputError(f"invalid Pauli character(s) {sorted(bad)} in {label!r}")
    if len(label) > MAX_QUBITS:
        raise InputError(f"{len(label)} qubits exceeds the cap of {MAX_QUBITS}")


@lru_cache(maxsize=4096)
def _pauli_matrix(label):
    out = np.ones((1, 1), dtype=complex)
    for ch in label:
        out = np.kron(out, _SINGLE[ch])
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class PauliString:
    """A tensor product of single-qubit Pauli matrices.

    Qubit 1 is the leftmost character and the leftmost Kronecker factor.
    """

    label: str
    matrix: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        _check_label(self.label)
        object.__setattr__(self, "matrix", _pauli_matrix(self.label))

    @property
    def n(self):
        return len(self.label)

    @property
    def dim(self):
        return 2 ** len(self.label)

    @property
    def is_identity(self):
        return set(self.label) == {"I"}


def pauli_operator(label):
    """Return the :class:`PauliString` for ``label`` (e.g. ``"ZZ"``, ``"XI"``)."""
    return PauliString(label)


@lru_cache(maxsize=16)
def pauli_labels(n):
    """Non-identity Pauli labels on ``n`` qubits in lexicographic I<X<Y<Z order."""
    if n < 1 or n > MAX_QUBITS:
        raise InputError(f"qubit count must be in [1, {MAX_QUBITS}], got {n}")
    labels = ("".join(p) for p in itertools.product(PAULI_ALPHABET, repeat=n))
    return tuple(lab for lab in labels if set(lab) != {"I"})


@lru_cache(maxsize=16)
def pauli_basis(n):
    """Stack of the ``N**2 - 1`` non-identity Pauli matrices, shape (N^2-1, N, N)."""
    basis = np.stack([_pauli_matrix(lab) for lab in pauli_labels(n)])
    basis.setflags(write=False)
    return basis


def _as_square(M, name="matrix"):
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise InputError(f"{name} must be a square matrix, got shape {M.shape}")
    return M


def _qubits_for_dim(N):
    n = int(round(np.log2(N)))
    if 2**n != N or n < 1:
        raise InputError(f"dimension {N} is not a power of two")
    return n


def is_hermitian(H, rtol=HERMITIAN_RTOL):
    H = np.asarray(H)
    scale = max(np.abs(H).max(initial=0.0), 1.0)
    return np.abs(H - H.conj().T).max(initial=0.0) <= rtol * scale


def _check_hermitian(H, name="H"):
    H = _as_square(H, name)
    if not is_hermitian(H):
        raise InputError(f"{name} is not Hermitian")
    return H


def propagator_eig(evals, evecs, t):
    """``exp(-i H t)`` from an eigendecomposition; works on stacked (..., N, N) input."""
    phases = np.exp(-1j * evals * t)
    return (evecs * phases[..., None, :]) @ np.swapaxes(evecs.conj(), -1, -2)


def derivative_weights(evals, t):
    """Divided-difference matrix ``W`` of ``f(x) = exp(-i x t)`` at ``evals``.

    Accepts stacked eigenvalues of shape (..., N) and returns (..., N, N).
    """
    evals = np.asarray(evals, dtype=float)
    f = np.exp(-1j * evals * t)
    la = evals[..., :, None]
    lb = evals[..., None, :]
    diff = la - lb
    degenerate = np.abs(diff) < DEGENERACY_RTOL * np.maximum(1.0, np.abs(la))
    safe = np.where(degenerate, 1.0, diff)
    W = (f[..., :, None] - f[..., None, :]) / safe
    fprime = np.broadcast_to((-1j * t * f)[..., :, None], W.shape)
    return np.where(degenerate, fprime, W)


def hermitian_expm(H, t):
    """Return ``exp(-i H t)`` for a Hermitian matrix ``H``.

    Parameters
    ----------
    H : array_like, shape (N, N)
        Hermitian generator.
    t : float
        Evolution time.

    Returns
    -------
    numpy.ndarray
        The unitary propagator.
    """
    H = _check_hermitian(H)
    evals, evecs = np.linalg.eigh(H)
    return propagator_eig(evals, evecs, t)


def expm_directional_derivative(H, V, t):
    """Derivative of ``exp(-i (H + eps V) t)`` with respect to ``eps`` at 0."""
    H = _check_hermitian(H, "H")
    V = _check_hermitian(V, "V")
    if H.shape != V.shape:
        raise InputError(f"shape mismatch: H {H.shape} vs V {V.shape}")
    evals, evecs = np.linalg.eigh(H)
    W = derivative_weights(evals, t)
    Vt = evecs.conj().T @ V @ evecs
    return evecs @ (W * Vt) @ evecs.conj().T


def algebra_project(Omega):
    """Coordinates of an anti-Hermitian matrix in the traceless Pauli basis.

    Writes ``i Omega = a0 I + sum_j a_j G_j`` and returns ``(a_1, ..., a_{N^2-1})``;
    the identity (global phase) coefficient ``a0`` is dropped.
    """
    Omega = _as_square(Omega, "Omega")
    scale = max(np.abs(Omega).max(initial=0.0), 1e-300)
    if np.abs(Omega + Omega.conj().T).max(initial=0.0) > 1e-8 * scale:
        raise InputError("Omega is not anti-Hermitian")
    n = _qubits_for_dim(Omega.shape[0])
    return project_stack(Omega[None], n)[0]


def project_stack(Omegas, n):
    """Vectorised :func:`algebra_project` over a stack of shape (P, N, N); no checks."""
    basis = pauli_basis(n)
    N = 2**n
    # Re Tr(G_j i Omega) / N
    flat = np.swapaxes(basis, 1, 2).reshape(basis.shape[0], N * N)
    traces = np.asarray(Omegas).reshape(-1, N * N) @ flat.T
    return np.real(1j * traces) / N


def algebra_reconstruct(coeffs, n, identity_coeff=0.0):
    """Inverse of :func:`algebra_project`: returns ``-i (a0 I + sum_j a_j G_j)``."""
    coeffs = np.asarray(coeffs, dtype=float)
    basis = pauli_basis(n)
    if coeffs.shape != (basis.shape[0],):
        raise InputError(f"expected {basis.shape[0]} coefficients, got {coeffs.shape}")
    herm = np.tensordot(coeffs, basis, axes=1) + identity_coeff * np.eye(2**n)
    return -1j * herm


def hs_metric(x, y):
    """Normalised Hilbert-Schmidt inner product ``Re Tr(x^dagger y) / N``."""
    x = _as_square(x, "x")
    y = _as_square(y, "y")
    if x.shape != y.shape:
        raise InputError(f"shape mismatch: {x.shape} vs {y.shape}")
    return float(np.real(np.vdot(x, y)) / x.shape[0])
