"""Piecewise-constant pulse model: Hamiltonians, pulses, propagators, fidelity."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import InputError
from .operators import _check_label, _pauli_matrix, propagator_eig, hermitian_expm


@dataclass(frozen=True)
class HamiltonianSpec:
    """Drift terms plus control channels, all built from Pauli strings.

    ``drift`` is a sequence of ``(label, strength)`` pairs.  Each control channel
    is a sequence of ``(label, coefficient)`` pairs summed into one generator, so
    a channel driving two qubits at once still counts as a single parameter.
    Units have hbar = 1; strengths are angular frequencies.
    """

    n: int
    drift: tuple = ()
    controls: tuple = ()
    name: str = "custom"

    def __post_init__(self):
        drift = tuple((str(lab), float(g)) for lab, g in self.drift)
        controls = tuple(
            tuple((str(lab), float(c)) for lab, c in channel) for channel in self.controls
        )
        object.__setattr__(self, "drift", drift)
        object.__setattr__(self, "controls", controls)
        if self.n < 1:
            raise InputError(f"need at least one qubit, got n={self.n}")
        for lab, _ in drift:
            self._check_term(lab)
        for channel in controls:
            if not channel:
                raise InputError("empty control channel")
            for lab, _ in channel:
                self._check_term(lab)
                if set(lab) == {"I"}:
                    raise InputError("a control generator may not be the identity")

    def _check_term(self, label):
        _check_label(label)
        if len(label) != self.n:
            raise InputError(f"Pauli string {label!r} does not act on {self.n} qubits")

    @property
    def dim(self):
        return 2**self.n

    @property
    def K(self):
        return len(self.controls)

    @property
    def D(self):
        return len(self.drift)

    @cached_property
    def drift_matrix(self):
        H0 = np.zeros((self.dim, self.dim), dtype=complex)
        for lab, g in self.drift:
            H0 = H0 + g * _pauli_matrix(lab)
        return H0

    @cached_property
    def control_matrices(self):
        """Control generators stacked as shape (K, N, N)."""
        mats = []
        for channel in self.controls:
            G = np.zeros((self.dim, self.dim), dtype=complex)
            for lab, c in channel:
                G = G + c * _pauli_matrix(lab)
            mats.append(G)
        if not mats:
            return np.zeros((0, self.dim, self.dim), dtype=complex)
        return np.stack(mats)

    @property
    def drift_strength_sq(self):
        """Sum of squared drift strengths (the ``g**2`` of a single-drift model)."""
        return float(sum(g * g for _, g in self.drift))


def tfim1(g=1.0, h2=True):
    """Two-qubit Ising model ``g ZZ + h1 X1 + h2 X2``.

    With ``h2=False`` only the qubit-1 field is a control.
    """
    controls = [[("XI", 1.0)]]
    if h2:
        controls.append([("IX", 1.0)])
    return HamiltonianSpec(
        n=2, drift=[("ZZ", g)], controls=controls, name="tfim1" if h2 else "tfim1_h2zero"
    )


def tfim2(g=1.0):
    """Symmetrically driven pair ``g ZZ + hx (X1+X2) + hz (Z1+Z2) + Z2/2``."""
    return HamiltonianSpec(
        n=2,
        drift=[("ZZ", g), ("IZ", 0.5)],
        controls=[[("XI", 1.0), ("IX", 1.0)], [("ZI", 1.0), ("IZ", 1.0)]],
        name="tfim2",
    )


PRESETS = {
    "tfim1": lambda g=1.0: tfim1(g, h2=True),
    "tfim1_h2zero": lambda g=1.0: tfim1(g, h2=False),
    "tfim2": tfim2,
}


def preset(name, g=1.0):
    try:
        return PRESETS[name](g)
    except KeyError:
        raise InputError(f"unknown model preset {name!r}; choose from {sorted(PRESETS)}") from None


@dataclass(frozen=True)
class PulseParams:
    """Amplitudes ``phi`` (L x K), segment duration ``dt`` and whether ``dt`` is free."""

    phi: np.ndarray
    dt: float
    optimize_dt: bool = False

    def __post_init__(self):
        phi = np.array(self.phi, dtype=float)
        if phi.ndim == 1:
            phi = phi[:, None]
        if phi.ndim != 2 or phi.shape[0] < 1 or phi.shape[1] < 1:
            raise InputError(f"phi must be an L x K matrix with L, K >= 1, got {phi.shape}")
        if not np.all(np.isfinite(phi)):
            raise InputError("phi contains non-finite entries")
        dt = float(self.dt)
        if not np.isfinite(dt) or dt <= 0:
            raise InputError(f"dt must be positive and finite, got {self.dt}")
        phi.setflags(write=False)
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "dt", dt)
        object.__setattr__(self, "optimize_dt", bool(self.optimize_dt))

    @property
    def L(self):
        return self.phi.shape[0]

    @property
    def K(self):
        return self.phi.shape[1]

    @property
    def T(self):
        return self.L * self.dt

    @property
    def n_params(self):
        return self.L * self.K + int(self.optimize_dt)

    def as_vector(self):
        """Flatten to the optimisation vector: phi l-major, then dt if free."""
        v = self.phi.ravel()
        if self.optimize_dt:
            v = np.append(v, self.dt)
        return v

    def from_vector(self, v):
        v = np.asarray(v, dtype=float)
        if v.shape != (self.n_params,):
            raise InputError(f"expected {self.n_params} parameters, got {v.shape}")
        LK = self.L * self.K
        dt = v[LK] if self.optimize_dt else self.dt
        return PulseParams(v[:LK].reshape(self.L, self.K), dt, self.optimize_dt)

    def replace(self, phi=None, dt=None, optimize_dt=None):
        return PulseParams(
            self.phi if phi is None else phi,
            self.dt if dt is None else dt,
            self.optimize_dt if optimize_dt is None else optimize_dt,
        )


@dataclass(frozen=True)
class GateTarget:
    name: str
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        U = np.array(self.matrix, dtype=complex)
        if U.ndim != 2 or U.shape[0] != U.shape[1]:
            raise InputError(f"target must be square, got {U.shape}")
        if np.abs(U.conj().T @ U - np.eye(U.shape[0])).max() >= 1e-12:
            raise InputError(f"target {self.name!r} is not unitary")
        U.setflags(write=False)
        object.__setattr__(self, "matrix", U)


_NAMED_GATES = {
    "CZ": np.diag([1, 1j, 1j, 1]),
    "CNOT": np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]]),
}


def gate_target(name="CZ", matrix=None):
    """Named two-qubit gate (``"CZ"``, ``"CNOT"``) or a custom unitary."""
    if isinstance(name, GateTarget):
        return name
    if matrix is not None:
        return GateTarget("custom" if name in (None, "") else str(name), matrix)
    key = str(name).upper()
    if key not in _NAMED_GATES:
        raise InputError(f"unknown gate {name!r}; choose from {sorted(_NAMED_GATES)}")
    return GateTarget(key, _NAMED_GATES[key])


def _target_matrix(target):
    return target.matrix if isinstance(target, GateTarget) else np.asarray(target, dtype=complex)


def segment_hamiltonians(spec, phi):
    """Segment Hamiltonians ``H_l``, shape (L, N, N)."""
    phi = np.atleast_2d(np.asarray(phi, dtype=float))
    if phi.shape[1] != spec.K:
        raise InputError(f"pulse has {phi.shape[1]} channels, Hamiltonian has {spec.K}")
    return spec.drift_matrix + np.einsum("lk,kab->lab", phi, spec.control_matrices)


def segment_eigs(spec, pulse):
    """Batched eigendecomposition of every segment Hamiltonian."""
    return np.linalg.eigh(segment_hamiltonians(spec, pulse.phi))


def segment_unitary(spec, phi_l, dt):
    """Propagator of one segment, ``exp(-i H(phi_l) dt)``."""
    phi_l = np.asarray(phi_l, dtype=float)
    if phi_l.shape != (spec.K,):
        raise InputError(f"expected {spec.K} amplitudes, got shape {phi_l.shape}")
    H = spec.drift_matrix + np.tensordot(phi_l, spec.control_matrices, axes=1)
    return hermitian_expm(H, dt)


def segment_unitaries(spec, pulse):
    evals, evecs = segment_eigs(spec, pulse)
    return propagator_eig(evals, evecs, pulse.dt)


def ordered_product(Us):
    """``U_L ... U_2 U_1`` for a stack ordered by segment (first applied first)."""
    out = np.eye(Us.shape[-1], dtype=complex)
    for U in Us:
        out = U @ out
    return out


def pulse_unitary(spec, pulse):
    return ordered_product(segment_unitaries(spec, pulse))


def fidelity_of_unitary(U, target):
    Ut = _target_matrix(target)
    if U.shape != Ut.shape:
        raise InputError(f"dimension mismatch: pulse {U.shape} vs target {Ut.shape}")
    return float(np.abs(np.vdot(U, Ut)) / U.shape[0])


def fidelity(spec, pulse, target):
    """Phase-insensitive gate fidelity ``|Tr(U_G^dagger U_target)| / N``."""
    Ut = _target_matrix(target)
    if Ut.shape != (spec.dim, spec.dim):
        raise InputError(f"target is {Ut.shape}, Hamiltonian acts on dimension {spec.dim}")
    return fidelity_of_unitary(pulse_unitary(spec, pulse), Ut)


def refine_pulse(pulse, m):
    """Split every segment into ``m`` equal sub-segments with the same amplitudes."""
    if int(m) != m or m < 2:
        raise InputError(f"refinement factor must be an integer >= 2, got {m}")
    m = int(m)
    return PulseParams(np.repeat(pulse.phi, m, axis=0), pulse.dt / m, pulse.optimize_dt)
