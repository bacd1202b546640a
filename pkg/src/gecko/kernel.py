"""Pulse Jacobian on su(N), its SVD kernel, and fidelity-preserving steps.

Columns of the Jacobian are left-translated derivatives ``U_G^dagger dU_G``
written in the Pauli basis.  The global-phase direction is dropped, so any
parameter motion that only rotates the phase lands in the kernel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateStepError, InputError, NumericalError, StepRejectedError
from .operators import derivative_weights, project_stack, propagator_eig
from .pulse import fidelity_of_unitary, pulse_unitary, segment_hamiltonians


@dataclass(frozen=True)
class JacobianMatrix:
    """Real Jacobian plus the complex generators it was projected from.

    ``matrix`` has shape (N^2 - 1, P); column ``l*K + k`` is amplitude (l, k) and
    the last column is ``dt`` when the pulse has a free duration.
    ``generators[p]`` is the anti-Hermitian ``U_G^dagger dU_G/dtheta_p``.
    """

    matrix: np.ndarray
    generators: np.ndarray
    unitary: np.ndarray
    optimize_dt: bool

    @property
    def shape(self):
        return self.matrix.shape


@dataclass(frozen=True)
class KernelBasis:
    Z: np.ndarray
    singular_values: np.ndarray
    tol: float

    @property
    def R(self):
        return self.Z.shape[1]

    @property
    def P(self):
        return self.Z.shape[0]

    @property
    def rank(self):
        return self.P - self.R


@dataclass(frozen=True)
class StepResult:
    pulse: object
    step_norm: float
    delta: np.ndarray
    predicted_dq: float | None = None
    fidelity_after: float | None = None


def _prefix_products(Us):
    """``P[l] = U_l ... U_1`` with ``P[0] = I``; shape (L+1, N, N)."""
    L, N, _ = Us.shape
    P = np.empty((L + 1, N, N), dtype=complex)
    P[0] = np.eye(N)
    for l in range(L):
        P[l + 1] = Us[l] @ P[l]
    return P


def pulse_jacobian(spec, pulse):
    """Jacobian of the pulse unitary with respect to every pulse parameter.

    One batched eigendecomposition serves all propagators and their
    derivatives.  Left translation by ``U_G^dagger`` collapses the suffix
    products, so only the prefix products ``U_{l-1} ... U_1`` are needed.
    """
    if pulse.K != spec.K:
        raise InputError(f"pulse has {pulse.K} channels, Hamiltonian has {spec.K}")
    H = segment_hamiltonians(spec, pulse.phi)
    evals, V = np.linalg.eigh(H)
    dt = pulse.dt
    Us = propagator_eig(evals, V, dt)
    W = derivative_weights(evals, dt)
    Vh = np.swapaxes(V.conj(), -1, -2)

    # eigenbasis generators, (L, K, N, N)
    G_eig = Vh[:, None] @ spec.control_matrices[None] @ V[:, None]
    back = np.exp(1j * evals * dt)
    # U_l^dagger dU_l = V e^{+i lam dt} (W * G_eig) V^dagger
    local = (V * back[:, None, :])[:, None] @ (W[:, None] * G_eig) @ Vh[:, None]

    prefix = _prefix_products(Us)
    before = prefix[:-1]
    before_h = np.swapaxes(before.conj(), -1, -2)
    Omega = before_h[:, None] @ local @ before[:, None]
    Omega = Omega.reshape(pulse.L * pulse.K, spec.dim, spec.dim)
    if pulse.optimize_dt:
        # U_l^dagger dU_l/d(dt) = -i H_l
        Om_dt = (before_h @ (-1j * H) @ before).sum(axis=0)
        Omega = np.concatenate([Omega, Om_dt[None]], axis=0)

    J = project_stack(Omega, spec.n).T
    return JacobianMatrix(
        matrix=J, generators=Omega, unitary=prefix[-1], optimize_dt=pulse.optimize_dt
    )


def kernel_basis(J, tol_rel=1e-10):
    """Orthonormal basis of ``ker J`` from the SVD.

    A singular value counts as zero when it is at most ``tol_rel * sigma_max``.
    """
    if isinstance(J, JacobianMatrix):
        J = J.matrix
    J = np.asarray(J, dtype=float)
    if not np.all(np.isfinite(J)):
        raise NumericalError("Jacobian contains non-finite entries")
    P = J.shape[1]
    try:
        _, s, Vt = np.linalg.svd(J, full_matrices=True)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"SVD failed: {exc}") from exc
    smax = s[0] if s.size else 0.0
    if smax == 0.0:
        return KernelBasis(np.eye(P), s, 0.0)
    tol = tol_rel * smax
    rank = int(np.count_nonzero(s > tol))
    Z = np.ascontiguousarray(Vt[rank:].T)
    return KernelBasis(Z, s, tol)


def _as_Z(Z):
    return Z.Z if isinstance(Z, KernelBasis) else np.asarray(Z, dtype=float)


def project_gradient(Z, gradQ):
    """Kernel coordinates of the steepest feasible descent, ``-Z^T grad``."""
    Z = _as_Z(Z)
    gradQ = np.asarray(gradQ, dtype=float)
    if gradQ.shape != (Z.shape[0],):
        raise InputError(f"gradient has shape {gradQ.shape}, kernel basis has {Z.shape[0]} rows")
    return -Z.T @ gradQ


def take_step(pulse, Z, dx, s, spec=None, target=None, grad=None):
    """Move ``pulse`` by ``s * Z dx / ||Z dx||``.

    Fidelity after the step is reported when ``spec`` and ``target`` are given;
    the first-order change in Q when ``grad`` is given.
    """
    Z = _as_Z(Z)
    if s <= 0:
        raise InputError(f"step size must be positive, got {s}")
    direction = Z @ np.asarray(dx, dtype=float)
    norm = np.linalg.norm(direction)
    if norm == 0.0 or not np.isfinite(norm):
        raise DegenerateStepError("kernel direction has zero norm")
    delta = s * direction / norm
    v = pulse.as_vector() + delta
    if pulse.optimize_dt and v[-1] <= 0:
        raise StepRejectedError(f"step would make dt non-positive ({v[-1]:.3g}); shrink s")
    new = pulse.from_vector(v)
    F = None
    if spec is not None and target is not None:
        F = fidelity_of_unitary(pulse_unitary(spec, new), target)
    dq = None if grad is None else float(np.dot(grad, delta))
    return StepResult(new, float(np.linalg.norm(delta)), delta, dq, F)
