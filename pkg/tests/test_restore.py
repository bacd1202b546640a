import numpy as np
import pytest

from gecko.errors import InputError, RestoreFailedError
from gecko.kernel import kernel_basis, pulse_jacobian
from gecko.pulse import PulseParams, fidelity, gate_target, tfim1
from gecko.restore import RestoreConfig, check_solution, random_pulse, restore, solve

CZ = gate_target("CZ")


def test_feasible_input_returned_unchanged(cz_l4):
    spec, target, pulse = cz_l4
    assert restore(spec, pulse, target, RestoreConfig(epsilon=1e-7)) is pulse


def test_non_kernel_perturbation_is_restored(cz_l20, rng):
    spec, target, pulse = cz_l20
    jac = pulse_jacobian(spec, pulse)
    kb = kernel_basis(jac)
    # a unit vector in the row space of J changes the gate at first order
    _, _, Vt = np.linalg.svd(jac.matrix)
    v = Vt[: pulse.n_params - kb.R].T @ rng.normal(size=pulse.n_params - kb.R)
    bumped = pulse.from_vector(pulse.as_vector() + 0.01 * v / np.linalg.norm(v))
    assert fidelity(spec, bumped, target) < 1 - 1e-7
    fixed = restore(spec, bumped, target, RestoreConfig(epsilon=1e-7, max_iters=200))
    assert fidelity(spec, fixed, target) > 1 - 1e-7


def test_failure_carries_best_pulse():
    spec = tfim1(h2=False)
    p0 = random_pulse(spec, 4, 1.0, seed=2)
    with pytest.raises(RestoreFailedError) as info:
        restore(spec, p0, CZ, RestoreConfig(epsilon=1e-7, max_iters=3))
    assert info.value.pulse is not None
    assert info.value.fidelity >= fidelity(spec, p0, CZ)


def test_restoration_keeps_dt_fixed():
    spec = tfim1(h2=False)
    p0 = random_pulse(spec, 4, 1.0, amplitude_scale=4.0, seed=3, optimize_dt=True)
    out = restore(spec, p0, CZ, RestoreConfig(epsilon=1e-7))
    assert out.dt == p0.dt and out.optimize_dt


def test_solver_success_rate():
    spec = tfim1(h2=False)
    ok = 0
    for seed in range(10):
        try:
            p = solve(spec, CZ, 4, 1.0, RestoreConfig(epsilon=1e-7, seed=seed), amplitude_scale=4.0, seed=seed)
            ok += check_solution(spec, p, CZ, 1e-7)[0]
        except RestoreFailedError:
            pass
    assert ok >= 8


def test_random_pulse_reproducible_and_bounded():
    spec = tfim1()
    a = random_pulse(spec, 6, 0.5, amplitude_scale=2.0, seed=7)
    b = random_pulse(spec, 6, 0.5, amplitude_scale=2.0, seed=7)
    c = random_pulse(spec, 6, 0.5, amplitude_scale=2.0, seed=8)
    np.testing.assert_array_equal(a.phi, b.phi)
    assert not np.array_equal(a.phi, c.phi)
    assert np.abs(a.phi).max() <= 2.0
    with pytest.raises(InputError):
        random_pulse(spec, 6, 0.5, amplitude_scale=0.0)


def test_config_validation():
    with pytest.raises(InputError):
        RestoreConfig(epsilon=0.0)
    with pytest.raises(InputError):
        RestoreConfig(max_iters=0)
