"""Level-set descent driver: Jacobian, kernel, quality step, fidelity check."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateStepError, InputError, RestoreFailedError, StepRejectedError
from .kernel import kernel_basis, project_gradient, pulse_jacobian, take_step
from .pulse import fidelity, refine_pulse
from .quality import SmoothQuality
from .restore import RestoreConfig, restore

log = logging.getLogger(__name__)

MODES = ("project_gradient", "direct_solve")


@dataclass(frozen=True)
class GeckoConfig:
    """Driver settings.

    ``restore_every=None`` restores only when a step drops the fidelity
    below ``1 - epsilon``; an integer restores on that fixed schedule instead
    (and once more before returning).
    """

    step_size: float = 0.01
    max_iters: int = 100
    q_aim: float = -np.inf
    epsilon: float = 1e-7
    restore_every: int | None = None
    tol_rel: float = 1e-10
    mode: str = "project_gradient"
    inner_iters: int = 50

    def __post_init__(self):
        if self.step_size <= 0:
            raise InputError("step size must be positive")
        if not 0 < self.epsilon < 1:
            raise InputError("epsilon must lie in (0, 1)")
        if self.max_iters < 0:
            raise InputError("max_iters must be non-negative")
        if self.mode not in MODES:
            raise InputError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.restore_every is not None and self.restore_every < 1:
            raise InputError("restore_every must be a positive integer or None")


@dataclass
class TraceRecord:
    iter: int
    Q: float
    F: float
    R: int
    step_norm: float
    restored: bool


@dataclass
class GeckoTrace:
    records: list = field(default_factory=list)
    pulse: object = None
    status: str = "max_iters"

    def __len__(self):
        return len(self.records)

    @property
    def Q(self):
        return np.array([r.Q for r in self.records])

    @property
    def F(self):
        return np.array([r.F for r in self.records])

    def extend(self, other, offset=0):
        for r in other.records:
            self.records.append(
                TraceRecord(r.iter + offset, r.Q, r.F, r.R, r.step_norm, r.restored)
            )


TRACE_COLUMNS = ("iter", "Q", "F", "R", "step_norm", "restored")


def write_trace_csv(trace, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for r in trace.records:
            w.writerow(
                [r.iter, f"{r.Q:.17g}", f"{r.F:.17g}", r.R, f"{r.step_norm:.17g}", int(r.restored)]
            )


def default_restorer(epsilon, **kwargs):
    cfg = RestoreConfig(epsilon=epsilon, **kwargs)

    def _restore(spec, pulse, target):
        return restore(spec, pulse, target, cfg)

    return _restore


def _inner_descent(quality, spec, pulse, target, Z, iters):
    """Backtracking gradient descent on ``x -> Q(pulse + Z x)``, starting at 0."""
    v0 = pulse.as_vector()

    def at(x):
        return pulse.from_vector(v0 + Z @ x)

    x = np.zeros(Z.shape[1])
    q = quality.value(spec, pulse, target)
    rate = 1.0
    for _ in range(iters):
        g = Z.T @ quality.gradient(spec, at(x), target)
        gg = float(g @ g)
        if gg == 0.0:
            break
        while rate > 1e-16:
            trial = x - rate * g
            try:
                q_trial = quality.value(spec, at(trial), target)
            except InputError:
                q_trial = np.inf
            if q_trial <= q - 1e-4 * rate * gg:
                break
            rate *= 0.5
        else:
            break
        x, q = trial, q_trial
        rate *= 2.0
    return x


def _direction(quality, spec, pulse, target, kb, cfg):
    """Kernel coordinates of the next step and the largest useful step norm."""
    Z = kb.Z
    if cfg.mode == "project_gradient":
        return project_gradient(kb, quality.gradient(spec, pulse, target)), np.inf
    if quality.quadratic:
        dx = quality.direct_solve(pulse, Z)
    else:
        dx = _inner_descent(quality, spec, pulse, target, Z, cfg.inner_iters)
    # stepping past the in-kernel minimiser would only undo progress
    return dx, float(np.linalg.norm(Z @ dx))


def gecko_run(spec, pulse0, target, quality, cfg=None, restorer=None):
    """Minimise ``quality`` along the fidelity level set of ``pulse0``.

    Parameters
    ----------
    spec : HamiltonianSpec
    pulse0 : PulseParams
        Starting solution; must satisfy ``F > 1 - epsilon``.
    target : GateTarget
    quality : Quality
    cfg : GeckoConfig, optional
    restorer : callable, optional
        ``restorer(spec, pulse, target) -> pulse``; defaults to gradient ascent
        with the same epsilon.

    Returns
    -------
    GeckoTrace
        Per-iteration records and the final pulse, which satisfies
        ``F > 1 - epsilon``.
    """
    cfg = cfg or GeckoConfig()
    restorer = restorer or default_restorer(cfg.epsilon)
    threshold = 1.0 - cfg.epsilon
    F = fidelity(spec, pulse0, target)
    if not F > threshold:
        raise InputError(f"initial fidelity {F:.12g} does not exceed 1 - epsilon = {threshold:.12g}")

    trace = GeckoTrace(pulse=pulse0)
    pulse = pulse0
    feasible = pulse0
    if cfg.max_iters == 0:
        trace.status = "max_iters"
        return trace
    Q = quality.value(spec, pulse, target)
    if Q <= cfg.q_aim:
        trace.records.append(TraceRecord(0, Q, F, 0, 0.0, False))
        trace.status = "q_aim"
        return trace

    s = cfg.step_size
    for it in range(1, cfg.max_iters + 1):
        jac = pulse_jacobian(spec, pulse)
        kb = kernel_basis(jac, cfg.tol_rel)
        try:
            dx, cap = _direction(quality, spec, pulse, target, kb, cfg)
            step_len = min(s, cap)
            if step_len <= 0:
                raise DegenerateStepError("already at the in-kernel minimiser")
            candidate = _safe_step(pulse, kb, dx, step_len)
        except DegenerateStepError:
            trace.status = "stationary"
            break

        new = candidate.pulse
        F = fidelity(spec, new, target)
        restored = False
        scheduled = cfg.restore_every is not None
        due = (not scheduled and F <= threshold) or (
            scheduled and (it % cfg.restore_every == 0 or it == cfg.max_iters) and F <= threshold
        )
        if due:
            try:
                new = restorer(spec, new, target)
            except RestoreFailedError:
                new = _retry_half_step(spec, target, quality, pulse, kb, dx, step_len, restorer, threshold)
                if new is None:
                    raise RestoreFailedError(
                        "could not restore fidelity after a halved step",
                        pulse=feasible,
                        fidelity=fidelity(spec, feasible, target),
                    ) from None
            F = fidelity(spec, new, target)
            restored = True
        pulse = new
        if F > threshold:
            feasible = pulse
        Q = quality.value(spec, pulse, target)
        trace.records.append(TraceRecord(it, Q, F, kb.R, candidate.step_norm, restored))
        log.debug("iter %d Q=%.10g F=%.12g R=%d", it, Q, F, kb.R)
        if Q <= cfg.q_aim:
            trace.status = "q_aim"
            break

    if not fidelity(spec, pulse, target) > threshold:
        pulse = restorer(spec, pulse, target)
        F = fidelity(spec, pulse, target)
        Q = quality.value(spec, pulse, target)
        n = trace.records[-1].iter + 1 if trace.records else 1
        trace.records.append(TraceRecord(n, Q, F, 0, 0.0, True))
    trace.pulse = pulse
    return trace


def _safe_step(pulse, kb, dx, s):
    """Take the step, shrinking it while it would push dt non-positive."""
    for _ in range(60):
        try:
            return take_step(pulse, kb, dx, s)
        except StepRejectedError:
            s *= 0.5
    raise DegenerateStepError("no admissible step length")


def _retry_half_step(spec, target, quality, pulse, kb, dx, step_len, restorer, threshold):
    try:
        new = restorer(spec, _safe_step(pulse, kb, dx, 0.5 * step_len).pulse, target)
    except RestoreFailedError:
        return None
    return new if fidelity(spec, new, target) > threshold else None


def refine_and_smooth(spec, pulse0, target, rounds=6, cfg=None, restorer=None, factor=2):
    """Repeatedly double the segment count, smooth along the level set, restore.

    Each round refines by ``factor`` and runs :func:`gecko_run` with the
    roughness quality; the returned trace concatenates all rounds and its
    pulse has ``factor**rounds`` times as many segments.
    """
    cfg = cfg or GeckoConfig(mode="direct_solve")
    restorer = restorer or default_restorer(cfg.epsilon)
    threshold = 1.0 - cfg.epsilon
    F0 = fidelity(spec, pulse0, target)
    if not F0 > threshold:
        raise InputError(f"initial fidelity {F0:.12g} does not exceed 1 - epsilon")
    total = GeckoTrace(pulse=pulse0, status="max_iters")
    pulse = pulse0
    for r in range(rounds):
        pulse = refine_pulse(pulse, factor)
        part = gecko_run(spec, pulse, target, SmoothQuality(), cfg, restorer)
        pulse = part.pulse
        if not fidelity(spec, pulse, target) > threshold:
            pulse = restorer(spec, pulse, target)
        offset = total.records[-1].iter if total.records else 0
        total.extend(part, offset)
        total.status = part.status
        log.info("round %d: L=%d Q_smooth=%.6g", r + 1, pulse.L, SmoothQuality().value(spec, pulse, target))
    total.pulse = pulse
    return total
