"""Fidelity gradient, gradient-ascent restoration, and random initial pulses."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import InputError, RestoreFailedError
from .kernel import pulse_jacobian
from .pulse import PulseParams, _target_matrix, fidelity, fidelity_of_unitary

log = logging.getLogger(__name__)


def fidelity_and_gradient(spec, pulse, target, jac=None):
    """Fidelity and its exact gradient over all pulse parameters.

    With ``tau = Tr(U_G^dagger U_t)`` and ``dU_G = U_G Omega_j``,
    ``d tau = -Tr(Omega_j U_G^dagger U_t)`` and
    ``dF = Re(conj(tau) d tau) / (N |tau|)``.
    """
    if jac is None:
        jac = pulse_jacobian(spec, pulse)
    U = jac.unitary
    Ut = _target_matrix(target)
    N = U.shape[0]
    M = U.conj().T @ Ut
    tau = np.trace(M)
    F = float(abs(tau) / N)
    if abs(tau) == 0.0:
        return F, np.zeros(jac.generators.shape[0])
    dtau = -jac.generators.reshape(-1, N * N) @ M.T.ravel()
    grad = np.real(np.conj(tau) * dtau) / (N * abs(tau))
    return F, grad


def fidelity_gradient(spec, pulse, target, jac=None):
    """Gradient of the gate fidelity; zero where ``Tr(U_G^dagger U_t) = 0``."""
    return fidelity_and_gradient(spec, pulse, target, jac)[1]


@dataclass(frozen=True)
class RestoreConfig:
    """Settings for :func:`restore`.

    ``vary_dt`` lets the ascent also move a free segment duration; by default
    only amplitudes are re-optimised so a shortened pulse stays short.
    """

    epsilon: float = 1e-7
    max_iters: int = 5000
    initial_step: float = 1.0
    shrink: float = 0.5
    grow: float = 2.0
    armijo: float = 1e-4
    min_step: float = 1e-14
    seed: int = 0
    vary_dt: bool = False

    def __post_init__(self):
        if not 0 < self.epsilon < 1:
            raise InputError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if self.max_iters < 1:
            raise InputError("max_iters must be at least 1")
        if not 0 < self.shrink < 1:
            raise InputError("shrink factor must lie in (0, 1)")


def restore(spec, pulse, target, cfg=None):
    """Raise the fidelity above ``1 - epsilon`` by gradient ascent.

    Each iteration backtracks from the current trial step until the Armijo
    condition holds, then lets the next trial step grow.  Accepted iterates
    never lower the fidelity.  Returns the first iterate that meets the
    threshold, or raises :class:`RestoreFailedError` with the best pulse found.
    """
    cfg = cfg or RestoreConfig()
    threshold = 1.0 - cfg.epsilon
    work = pulse if cfg.vary_dt else pulse.replace(optimize_dt=False)

    def evaluate(p):
        return fidelity_and_gradient(spec, p, target)

    F, g = evaluate(work)
    if F > threshold:
        return pulse
    x = work.as_vector()
    step = cfg.initial_step
    kicked = False
    rng = np.random.Generator(np.random.Philox(cfg.seed))

    for it in range(cfg.max_iters):
        gg = float(g @ g)
        if gg == 0.0:
            if kicked:
                break
            # stationary point below threshold: nudge off it once
            kick = rng.standard_normal(x.shape)
            x = x + 1e-3 * kick / np.linalg.norm(kick)
            if cfg.vary_dt and work.optimize_dt:
                x[-1] = max(x[-1], 1e-12)
            work = work.from_vector(x)
            F, g = evaluate(work)
            kicked = True
            continue

        accepted = False
        while step >= cfg.min_step:
            trial = x + step * g
            if work.optimize_dt and trial[-1] <= 0:
                step *= cfg.shrink
                continue
            p_trial = work.from_vector(trial)
            F_trial, g_trial = evaluate(p_trial)
            if F_trial >= F + cfg.armijo * step * gg:
                accepted = True
                break
            step *= cfg.shrink
        if not accepted:
            log.debug("restore: line search stalled at F=%.12g", F)
            break
        x, work, F, g = trial, p_trial, F_trial, g_trial
        step *= cfg.grow
        if F > threshold:
            log.debug("restore: reached F=%.12g after %d iterations", F, it + 1)
            return _with_dt_flag(work, pulse)

    raise RestoreFailedError(
        f"fidelity {F:.10g} did not exceed {threshold:.10g} within {cfg.max_iters} iterations",
        pulse=_with_dt_flag(work, pulse),
        fidelity=F,
    )


def _with_dt_flag(p, like):
    return p.replace(optimize_dt=like.optimize_dt)


def random_pulse(spec, L, dt, amplitude_scale=1.0, seed=0, optimize_dt=False):
    """Uniform random amplitudes in ``[-amplitude_scale, amplitude_scale]``.

    Uses the counter-based Philox generator, so a seed fixes the pulse on
    every platform.
    """
    if amplitude_scale <= 0:
        raise InputError("amplitude_scale must be positive")
    rng = np.random.Generator(np.random.Philox(int(seed)))
    phi = rng.uniform(-amplitude_scale, amplitude_scale, size=(int(L), spec.K))
    return PulseParams(phi, dt, optimize_dt)


def solve(spec, target, L, dt, cfg=None, amplitude_scale=1.0, seed=0, optimize_dt=False):
    """Random initial pulse followed by :func:`restore`."""
    cfg = cfg or RestoreConfig(seed=seed)
    p0 = random_pulse(spec, L, dt, amplitude_scale, seed, optimize_dt)
    return restore(spec, p0, target, cfg)


def check_solution(spec, pulse, target, epsilon):
    F = fidelity(spec, pulse, target)
    return F > 1.0 - epsilon, F


__all__ = [
    "RestoreConfig",
    "check_solution",
    "fidelity_and_gradient",
    "fidelity_gradient",
    "fidelity_of_unitary",
    "random_pulse",
    "restore",
    "solve",
]
