import numpy as np
import pytest
import scipy.linalg

from gecko.errors import InputError
from gecko.operators import pauli_operator
from gecko.pulse import (
    GateTarget,
    HamiltonianSpec,
    PulseParams,
    fidelity,
    fidelity_of_unitary,
    gate_target,
    preset,
    pulse_unitary,
    refine_pulse,
    segment_unitary,
    tfim1,
    tfim2,
)


def _dense_h(spec, phi_l):
    H = sum(g * pauli_operator(lab).matrix for lab, g in spec.drift)
    for k, channel in enumerate(spec.controls):
        H = H + phi_l[k] * sum(c * pauli_operator(lab).matrix for lab, c in channel)
    return H


def test_presets():
    assert tfim1().K == 2
    assert preset("tfim1_h2zero").K == 1
    assert tfim2().K == 2
    with pytest.raises(InputError):
        preset("ising3")


def test_identity_control_rejected():
    with pytest.raises(InputError):
        HamiltonianSpec(n=2, drift=[("ZZ", 1.0)], controls=[[("II", 1.0)]])


def test_zero_pulse_without_drift_is_identity():
    spec = HamiltonianSpec(n=2, drift=[], controls=[[("XI", 1.0)]])
    np.testing.assert_allclose(segment_unitary(spec, np.zeros(1), 0.7), np.eye(4), atol=1e-15)
    pulse = PulseParams(np.zeros((3, 1)), 0.7)
    np.testing.assert_allclose(pulse_unitary(spec, pulse), np.eye(4), atol=1e-15)


def test_drift_only_segment_is_diagonal():
    g, t = 1.3, 0.4
    spec = HamiltonianSpec(n=2, drift=[("ZZ", g)], controls=[])
    U = segment_unitary(spec, np.zeros(0), t)
    e = np.exp(-1j * g * t)
    np.testing.assert_allclose(U, np.diag([e, e.conjugate(), e.conjugate(), e]), atol=1e-15)


@pytest.mark.parametrize("spec", [tfim1(), tfim2(0.7)])
def test_segment_matches_pade_oracle(spec, rng):
    phi = rng.normal(size=spec.K)
    want = scipy.linalg.expm(-1j * 0.8 * _dense_h(spec, phi))
    np.testing.assert_allclose(segment_unitary(spec, phi, 0.8), want, atol=1e-12)


def test_single_segment_product():
    spec = tfim1()
    pulse = PulseParams(np.array([[0.3, -0.2]]), 0.5)
    np.testing.assert_allclose(pulse_unitary(spec, pulse), segment_unitary(spec, pulse.phi[0], 0.5), atol=1e-14)


def test_time_ordering_is_last_segment_leftmost(rng):
    spec = tfim1()
    phi = rng.normal(size=(3, 2))
    dt = 0.6
    U1, U2, U3 = (scipy.linalg.expm(-1j * dt * _dense_h(spec, p)) for p in phi)
    np.testing.assert_allclose(pulse_unitary(spec, PulseParams(phi, dt)), U3 @ U2 @ U1, atol=1e-12)


def test_named_targets():
    np.testing.assert_array_equal(gate_target("CZ").matrix, np.diag([1, 1j, 1j, 1]))
    cnot = gate_target("CNOT").matrix
    np.testing.assert_array_equal(cnot[2], [0, 0, 0, 1])
    np.testing.assert_array_equal(cnot[3], [0, 0, 1, 0])
    with pytest.raises(InputError):
        gate_target("SWAP3")
    with pytest.raises(InputError):
        GateTarget("bad", np.ones((4, 4)))


def test_fidelity_phase_invariance():
    CZ = gate_target("CZ")
    assert fidelity_of_unitary(CZ.matrix, CZ) == pytest.approx(1.0, abs=1e-15)
    assert fidelity_of_unitary(np.exp(1j * np.pi / 3) * CZ.matrix, CZ) == pytest.approx(1.0, abs=1e-15)


def test_identity_vs_cz():
    # |Tr(diag(1, i, i, 1))| / 4 = |2 + 2i| / 4
    assert fidelity_of_unitary(np.eye(4), gate_target("CZ")) == pytest.approx(1 / np.sqrt(2), abs=1e-15)


def test_custom_identity_target():
    spec = HamiltonianSpec(n=2, drift=[], controls=[[("XI", 1.0)]])
    target = gate_target("id", np.eye(4))
    assert fidelity(spec, PulseParams(np.zeros((2, 1)), 1.0), target) == pytest.approx(1.0)


def test_target_dimension_mismatch():
    with pytest.raises(InputError):
        fidelity(tfim1(), PulseParams(np.zeros((2, 2)), 1.0), np.eye(2))


def test_refine_preserves_unitary(rng):
    spec = tfim1()
    p = PulseParams(rng.normal(size=(4, 2)), 1.0)
    q = refine_pulse(p, 2)
    assert q.L == 8 and q.dt == 0.5
    np.testing.assert_allclose(pulse_unitary(spec, q), pulse_unitary(spec, p), atol=1e-12)
    assert refine_pulse(p, 64).L == 256
    np.testing.assert_array_equal(refine_pulse(refine_pulse(p, 2), 2).phi, refine_pulse(p, 4).phi)
    with pytest.raises(InputError):
        refine_pulse(p, 1)


def test_pulse_validation():
    with pytest.raises(InputError):
        PulseParams(np.zeros((0, 1)), 1.0)
    with pytest.raises(InputError):
        PulseParams(np.zeros((2, 1)), 0.0)
    with pytest.raises(InputError):
        PulseParams(np.array([[np.nan]]), 1.0)


def test_vector_round_trip(rng):
    p = PulseParams(rng.normal(size=(5, 2)), 0.3, optimize_dt=True)
    v = p.as_vector()
    assert v.shape == (11,) and v[-1] == 0.3
    np.testing.assert_array_equal(v[:2], p.phi[0])
    q = p.from_vector(v)
    np.testing.assert_array_equal(q.phi, p.phi)
    assert q.dt == p.dt and q.T == pytest.approx(1.5)
