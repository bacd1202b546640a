import json

import numpy as np
import pytest

from gecko.errors import FormatError
from gecko.pulse import PulseParams, fidelity, gate_target, tfim1, tfim2
from gecko.pulse_io import dumps_pulse, load_pulse, loads_pulse, save_pulse


def test_round_trip_is_exact(tmp_path, rng):
    spec = tfim2(0.8)
    pulse = PulseParams(rng.normal(size=(7, 2)) * 1e3, 0.1 + 1e-13, optimize_dt=True)
    target = gate_target("CNOT")
    path = tmp_path / "p.json"
    save_pulse(path, pulse, spec, target, {"fidelity": fidelity(spec, pulse, target)})
    p2, s2, t2, meta = load_pulse(path)
    np.testing.assert_array_equal(p2.phi, pulse.phi)
    assert p2.dt == pulse.dt and p2.optimize_dt
    np.testing.assert_array_equal(s2.drift_matrix, spec.drift_matrix)
    np.testing.assert_array_equal(s2.control_matrices, spec.control_matrices)
    assert t2.name == "CNOT"
    assert fidelity(s2, p2, t2) == meta["fidelity"]


def test_custom_target_round_trip(rng):
    Q, _ = np.linalg.qr(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))
    target = gate_target("mine", Q)
    text = dumps_pulse(PulseParams(np.zeros((2, 1)), 1.0), tfim1(h2=False), target)
    _, _, t2, _ = loads_pulse(text)
    np.testing.assert_array_equal(t2.matrix, target.matrix)


def _doc():
    return json.loads(dumps_pulse(PulseParams(np.ones((2, 1)), 1.0), tfim1(h2=False), gate_target("CZ")))


def test_missing_dt():
    doc = _doc()
    del doc["dt"]
    with pytest.raises(FormatError, match="dt"):
        loads_pulse(json.dumps(doc))


def test_version_mismatch_names_expected():
    doc = _doc()
    doc["format_version"] = "9"
    with pytest.raises(FormatError, match="expected '1'"):
        loads_pulse(json.dumps(doc))


def test_bad_rows():
    doc = _doc()
    doc["phi"] = [[1.0], [1.0, 2.0]]
    with pytest.raises(FormatError, match=r"phi\[1\]"):
        loads_pulse(json.dumps(doc))
    doc["phi"] = [[1.0]]
    with pytest.raises(FormatError, match="L=2"):
        loads_pulse(json.dumps(doc))


def test_invalid_json_reports_line():
    with pytest.raises(FormatError, match="line 2"):
        loads_pulse('{\n "n": ,}')


def test_same_input_same_bytes():
    a = dumps_pulse(PulseParams(np.full((3, 1), 0.1), 0.7), tfim1(h2=False), gate_target("CZ"), {"seed": 3})
    b = dumps_pulse(PulseParams(np.full((3, 1), 0.1), 0.7), tfim1(h2=False), gate_target("CZ"), {"seed": 3})
    assert a == b
