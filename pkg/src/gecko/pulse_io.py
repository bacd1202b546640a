"""JSON pulse files.

Layout (``format_version`` "1")::

    {"format_version": "1", "n": 2,
     "drift": [{"pauli": "ZZ", "g": 1.0}],
     "controls": [[{"pauli": "XI", "coeff": 1.0}]],
     "L": 4, "dt": 1.0, "optimize_dt": false,
     "phi": [[...], ...],                 # one row per segment
     "target": {"name": "CZ"} | {"name": ..., "matrix": {"re": [[..]], "im": [[..]]}},
     "metadata": {"fidelity": ..., "quality": {"name": ..., "value": ...},
                  "seed": ..., "tool_version": ...}}

Every real is written with 17 significant digits so a reload is bit-exact.
"""

from __future__ import annotations

import json
import math
import os
import tempfile

import numpy as np

from . import __version__
from .errors import FormatError, InputError
from .pulse import GateTarget, HamiltonianSpec, PulseParams, gate_target

FORMAT_VERSION = "1"


def _fmt_float(x):
    x = float(x)
    if not math.isfinite(x):
        raise InputError(f"cannot serialise non-finite value {x}")
    s = format(x, ".17g")
    if "." not in s and "e" not in s and "n" not in s:
        s += ".0"
    return s


def _encode(obj, indent=0):
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(str(k))}: {_encode(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if all(not isinstance(v, (list, tuple, dict, np.ndarray)) for v in seq):
            return "[" + ", ".join(_encode(v) for v in seq) + "]"
        items = [inner + _encode(v, indent + 1) for v in seq]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    raise InputError(f"cannot serialise object of type {type(obj).__name__}")


def _target_dict(target):
    if target is None:
        return None
    if target.name in ("CZ", "CNOT") and np.array_equal(target.matrix, gate_target(target.name).matrix):
        return {"name": target.name}
    U = target.matrix
    return {"name": target.name, "matrix": {"re": U.real.tolist(), "im": U.imag.tolist()}}


def pulse_document(pulse, spec, target=None, metadata=None):
    """Plain-dict form of a pulse file."""
    meta = {"tool_version": __version__}
    meta.update(metadata or {})
    return {
        "format_version": FORMAT_VERSION,
        "n": spec.n,
        "drift": [{"pauli": lab, "g": g} for lab, g in spec.drift],
        "controls": [[{"pauli": lab, "coeff": c} for lab, c in ch] for ch in spec.controls],
        "L": pulse.L,
        "dt": pulse.dt,
        "optimize_dt": pulse.optimize_dt,
        "phi": pulse.phi.tolist(),
        "target": _target_dict(target),
        "metadata": meta,
    }


def dumps_pulse(pulse, spec, target=None, metadata=None):
    return _encode(pulse_document(pulse, spec, target, metadata)) + "\n"


def save_pulse(path, pulse, spec, target=None, metadata=None):
    """Write a pulse file atomically (temp file in the same directory, then rename)."""
    text = dumps_pulse(pulse, spec, target, metadata)
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".pulse-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _require(doc, key, where="top level"):
    if key not in doc:
        raise FormatError(f"missing field {key!r} at {where}")
    return doc[key]


def _real(value, field):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise FormatError(f"field {field!r} must be a number, got {value!r}")
    return float(value)


def loads_pulse(text):
    """Parse a pulse document; returns ``(pulse, spec, target, metadata)``."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise FormatError("pulse file must contain a JSON object")
    version = str(_require(doc, "format_version"))
    if version != FORMAT_VERSION:
        raise FormatError(f"unsupported format_version {version!r}; expected {FORMAT_VERSION!r}")

    n = _require(doc, "n")
    if isinstance(n, bool) or not isinstance(n, int):
        raise FormatError(f"field 'n' must be an integer, got {n!r}")
    try:
        drift = [
            (_require(t, "pauli", f"drift[{i}]"), _real(_require(t, "g", f"drift[{i}]"), f"drift[{i}].g"))
            for i, t in enumerate(_require(doc, "drift"))
        ]
        controls = [
            [
                (
                    _require(t, "pauli", f"controls[{k}][{j}]"),
                    _real(_require(t, "coeff", f"controls[{k}][{j}]"), f"controls[{k}][{j}].coeff"),
                )
                for j, t in enumerate(ch)
            ]
            for k, ch in enumerate(_require(doc, "controls"))
        ]
        spec = HamiltonianSpec(n=n, drift=drift, controls=controls)
    except (TypeError, AttributeError) as exc:
        raise FormatError(f"malformed Hamiltonian terms: {exc}") from exc
    except InputError as exc:
        raise FormatError(f"invalid Hamiltonian: {exc}") from exc

    L = _require(doc, "L")
    dt = _real(_require(doc, "dt"), "dt")
    phi_rows = _require(doc, "phi")
    if not isinstance(phi_rows, list) or len(phi_rows) != L:
        raise FormatError(f"field 'phi' must have L={L} rows")
    for l, row in enumerate(phi_rows):
        if not isinstance(row, list) or len(row) != spec.K:
            raise FormatError(f"phi[{l}] must have K={spec.K} entries")
        for k, v in enumerate(row):
            _real(v, f"phi[{l}][{k}]")
    optimize_dt = doc.get("optimize_dt", False)
    if not isinstance(optimize_dt, bool):
        raise FormatError("field 'optimize_dt' must be a boolean")
    try:
        pulse = PulseParams(np.array(phi_rows, dtype=float), dt, optimize_dt)
    except InputError as exc:
        raise FormatError(f"invalid pulse: {exc}") from exc

    target = None
    tdoc = doc.get("target")
    if tdoc is not None:
        try:
            if "matrix" in tdoc:
                m = tdoc["matrix"]
                U = np.array(m["re"], dtype=float) + 1j * np.array(m["im"], dtype=float)
                target = GateTarget(tdoc.get("name", "custom"), U)
            else:
                target = gate_target(_require(tdoc, "name", "target"))
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"invalid target: {exc}") from exc
        if target.matrix.shape != (spec.dim, spec.dim):
            raise FormatError(f"target dimension {target.matrix.shape} does not match n={n}")
    metadata = doc.get("metadata", {})
    if not isinstance(metadata, dict):
        raise FormatError("field 'metadata' must be an object")
    return pulse, spec, target, metadata


def load_pulse(path):
    with open(path) as fh:
        return loads_pulse(fh.read())
