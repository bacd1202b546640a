"""Pulse-quality objectives and their exact gradients.

Every quality maps a pulse to a scalar and returns gradients laid out like
:meth:`PulseParams.as_vector`: amplitudes l-major, then the duration slot
when the pulse has a free ``dt``.  Qualities that are squared norms of a
linear map (filtering, smoothing, and weighted sums of them) also expose
that map so the in-kernel minimisation can be solved as least squares.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import BudgetError, InputError
from .pulse import fidelity
from .restore import fidelity_gradient
from .spectral import FilterSpec, dst1_forward, dst1_matrix

MAX_ROBUST_GRID = 10**6


def _embed(grad_phi, pulse):
    g = np.asarray(grad_phi, dtype=float).ravel()
    if pulse.optimize_dt:
        g = np.append(g, 0.0)
    return g


def _lift(M, pulse):
    """Per-channel matrix ``M`` acting on the flattened parameter vector."""
    A = np.kron(M, np.eye(pulse.K))
    if pulse.optimize_dt:
        A = np.hstack([A, np.zeros((A.shape[0], 1))])
    return A


# -- spectral filter ---------------------------------------------------------


def _check_filter(pulse, fs):
    if fs.L != pulse.L:
        raise InputError(f"filter has {fs.L} weights but the pulse has {pulse.L} segments")


def q_filter(pulse, fs):
    """Squared distance between the sine spectrum and its filtered copy."""
    _check_filter(pulse, fs)
    r = (1.0 - fs.weights)[:, None] * dst1_forward(pulse.phi)
    return float(np.sum(r * r))


def grad_q_filter(pulse, fs):
    _check_filter(pulse, fs)
    # the forward transform matrix is symmetric, so its adjoint is itself
    m2 = ((1.0 - fs.weights) ** 2)[:, None]
    return _embed(2.0 * dst1_forward(m2 * dst1_forward(pulse.phi)), pulse)


# -- smoothness --------------------------------------------------------------


def difference_operator(L):
    """(L+1) x L forward differences with zero amplitude before and after the pulse."""
    D = np.zeros((L + 1, L))
    idx = np.arange(L)
    D[idx, idx] = 1.0
    D[idx + 1, idx] = -1.0
    return D


def q_smooth(pulse):
    d = np.diff(pulse.phi, axis=0, prepend=0.0, append=0.0)
    return float(np.sum(d * d))


def grad_q_smooth(pulse):
    D = difference_operator(pulse.L)
    return _embed(2.0 * D.T @ (D @ pulse.phi), pulse)


def smooth_direct_solve(pulse, Z):
    """Kernel coordinates minimising the roughness of ``pulse + Z x``."""
    return SmoothQuality().direct_solve(pulse, Z)


def _lstsq_in_kernel(A, v, Z):
    Z = getattr(Z, "Z", Z)
    if Z.shape[0] != v.size:
        raise InputError(f"kernel basis has {Z.shape[0]} rows, pulse has {v.size} parameters")
    x, *_ = np.linalg.lstsq(A @ Z, -(A @ v), rcond=None)
    return x


# -- robustness --------------------------------------------------------------


@dataclass(frozen=True)
class RobustSpec:
    """Worst-case fidelity over a uniform grid of constant amplitude offsets.

    ``channels`` are the control indices that may deviate; each gets ``S``
    evenly spaced offsets in ``[-delta, delta]``.
    """

    channels: tuple = (0,)
    delta: float = 0.05
    S: int = 5

    def __post_init__(self):
        object.__setattr__(self, "channels", tuple(int(k) for k in self.channels))
        if not self.channels:
            raise InputError("robustness needs at least one channel")
        if self.delta < 0:
            raise InputError("delta must be non-negative")
        if self.delta > 0 and self.S < 2:
            raise InputError("need S >= 2 grid points when delta > 0")

    def offsets(self):
        """Grid offsets per channel (a single zero when ``delta == 0``)."""
        if self.delta == 0:
            return np.zeros(1)
        return np.linspace(-self.delta, self.delta, self.S)

    def grid(self):
        """All offset vectors in lexicographic order, shape (S**K', K')."""
        size = len(self.offsets()) ** len(self.channels)
        if size > MAX_ROBUST_GRID:
            raise BudgetError(f"robust grid of {size} points exceeds the cap of {MAX_ROBUST_GRID}")
        return np.array(list(itertools.product(self.offsets(), repeat=len(self.channels))))


def _shifted(pulse, rs, offset):
    phi = np.array(pulse.phi)
    phi[:, list(rs.channels)] += offset
    return pulse.replace(phi=phi)


def robust_fidelities(spec, pulse, target, rs):
    """Fidelity at every grid offset, plus the grid itself."""
    if max(rs.channels) >= spec.K or min(rs.channels) < 0:
        raise InputError(f"robust channels {rs.channels} out of range for K={spec.K}")
    grid = rs.grid()
    Fs = np.array([fidelity(spec, _shifted(pulse, rs, off), target) for off in grid])
    return Fs, grid


def q_robust(spec, pulse, target, rs):
    Fs, _ = robust_fidelities(spec, pulse, target, rs)
    return float(1.0 - Fs.min())


def grad_q_robust(spec, pulse, target, rs):
    """Negative fidelity gradient at the worst grid point (first one on ties)."""
    Fs, grid = robust_fidelities(spec, pulse, target, rs)
    worst = int(np.argmin(Fs))
    return -fidelity_gradient(spec, _shifted(pulse, rs, grid[worst]), target)


# -- duration ----------------------------------------------------------------


def _segment_lengths(spec, pulse):
    return np.sqrt(np.sum(pulse.phi**2, axis=1) + spec.drift_strength_sq)


def q_path(spec, pulse):
    """Path length ``sum_l sqrt(phi_l . phi_l + g^2) dt`` under the metric Tr(x^dagger y)/N."""
    return float(np.sum(_segment_lengths(spec, pulse)) * pulse.dt)


def grad_q_path(spec, pulse, include_dt=None):
    if include_dt is None:
        include_dt = pulse.optimize_dt
    if include_dt and not pulse.optimize_dt:
        raise InputError("dt gradient requested but the pulse duration is fixed")
    lengths = _segment_lengths(spec, pulse)
    g = (pulse.phi * pulse.dt / lengths[:, None]).ravel()
    if pulse.optimize_dt:
        g = np.append(g, lengths.sum() if include_dt else 0.0)
    return g


def q_drift(pulse):
    if not pulse.optimize_dt:
        raise InputError("the duration quality needs a pulse with optimize_dt=True")
    return float(pulse.dt)


def grad_q_drift(pulse):
    if not pulse.optimize_dt:
        raise InputError("the duration quality needs a pulse with optimize_dt=True")
    g = np.zeros(pulse.n_params)
    g[-1] = 1.0
    return g


# -- quality objects ---------------------------------------------------------


class Quality:
    """Interface shared by every quality; subclasses override the hooks."""

    name = "quality"

    def value(self, spec, pulse, target):
        raise NotImplementedError

    def gradient(self, spec, pulse, target):
        raise NotImplementedError

    def linear_operator(self, pulse):
        """Matrix ``A`` with ``Q = ||A v||^2``, or ``None`` if Q is not of that form."""
        return None

    @property
    def quadratic(self):
        return False

    def direct_solve(self, pulse, Z):
        A = self.linear_operator(pulse)
        if A is None:
            raise InputError(f"{self.name} quality has no closed-form kernel minimiser")
        return _lstsq_in_kernel(A, pulse.as_vector(), Z)

    def describe(self):
        return {"name": self.name}


@dataclass(frozen=True)
class FilterQuality(Quality):
    filter: FilterSpec
    name = "filter"

    def value(self, spec, pulse, target):
        return q_filter(pulse, self.filter)

    def gradient(self, spec, pulse, target):
        return grad_q_filter(pulse, self.filter)

    @property
    def quadratic(self):
        return True

    def linear_operator(self, pulse):
        _check_filter(pulse, self.filter)
        M = (1.0 - self.filter.weights)[:, None] * dst1_matrix(pulse.L)
        return _lift(M, pulse)

    def describe(self):
        return {"name": self.name, "kind": self.filter.kind, **self.filter.params}


@dataclass(frozen=True)
class SmoothQuality(Quality):
    name = "smooth"

    def value(self, spec, pulse, target):
        return q_smooth(pulse)

    def gradient(self, spec, pulse, target):
        return grad_q_smooth(pulse)

    @property
    def quadratic(self):
        return True

    def linear_operator(self, pulse):
        return _lift(difference_operator(pulse.L), pulse)


@dataclass(frozen=True)
class RobustQuality(Quality):
    robust: RobustSpec = field(default_factory=RobustSpec)
    name = "robust"

    def value(self, spec, pulse, target):
        return q_robust(spec, pulse, target, self.robust)

    def gradient(self, spec, pulse, target):
        return grad_q_robust(spec, pulse, target, self.robust)

    def describe(self):
        rs = self.robust
        return {"name": self.name, "channels": list(rs.channels), "delta": rs.delta, "S": rs.S}


@dataclass(frozen=True)
class PathQuality(Quality):
    name = "path"

    def value(self, spec, pulse, target):
        return q_path(spec, pulse)

    def gradient(self, spec, pulse, target):
        return grad_q_path(spec, pulse)


@dataclass(frozen=True)
class DriftQuality(Quality):
    name = "drift"

    def value(self, spec, pulse, target):
        return q_drift(pulse)

    def gradient(self, spec, pulse, target):
        return grad_q_drift(pulse)


@dataclass(frozen=True)
class CompositeQuality(Quality):
    """Weighted sum ``sum_i w_i Q_i`` of other qualities."""

    terms: tuple = ()
    name = "composite"

    def __post_init__(self):
        terms = tuple((float(w), q) for w, q in self.terms)
        if not terms:
            raise InputError("composite quality needs at least one term")
        weights = [w for w, _ in terms]
        if min(weights) < 0 or max(weights) <= 0:
            raise InputError("composite weights must be >= 0 with at least one positive")
        object.__setattr__(self, "terms", terms)

    def _active(self):
        return [(w, q) for w, q in self.terms if w > 0]

    def value(self, spec, pulse, target):
        return float(sum(w * q.value(spec, pulse, target) for w, q in self._active()))

    def gradient(self, spec, pulse, target):
        return sum(w * q.gradient(spec, pulse, target) for w, q in self._active())

    @property
    def quadratic(self):
        return all(q.quadratic for _, q in self._active())

    def linear_operator(self, pulse):
        if not self.quadratic:
            return None
        return np.vstack([np.sqrt(w) * q.linear_operator(pulse) for w, q in self._active()])

    def describe(self):
        return {
            "name": self.name,
            "terms": [{"weight": w, **q.describe()} for w, q in self.terms],
        }


def q_composite(terms, spec, pulse, target):
    """Value and gradient of a weighted sum of qualities."""
    q = CompositeQuality(tuple(terms))
    return q.value(spec, pulse, target), q.gradient(spec, pulse, target)
