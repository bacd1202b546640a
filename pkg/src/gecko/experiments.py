"""Experiment pipelines shared by the command line and the acceptance gate.

All routines are deterministic given their seeds.  Frequencies are reported
both per unit time and in the dimensionless form ``f * T``; pulse amplitudes
likewise come with an ``amplitude * T`` column where it matters.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .engine import GeckoConfig, default_restorer, gecko_run, refine_and_smooth
from .errors import GeckoError, InputError, RestoreFailedError
from .pulse import fidelity, gate_target, preset, refine_pulse
from .quality import (
    FilterQuality,
    RobustSpec,
    SmoothQuality,
    robust_fidelities,
    _shifted,
)
from .restore import RestoreConfig, restore, solve
from .spectral import gaussian_baseline, make_filter, mode_frequencies, power_spectrum

log = logging.getLogger(__name__)

# Random initial amplitudes are drawn from [-4g, 4g]; at +-1g most CZ starts stall
# in a local fidelity maximum.
DEFAULT_AMPLITUDE = 4.0

SPECTRUM_COLUMNS = (
    "channel",
    "mode_n",
    "freq_per_time",
    "freq_times_T",
    "power_before",
    "power_after",
    "weight",
)
SWEEP_COLUMNS = ("offset", "offset_times_T", "fidelity")
FIG4_COLUMNS = ("method", "channel", "mode_n", "freq_times_T", "median_power", "q25_power", "q75_power", "n_ok")
FIG4_SIGMAS = (2.0, 4.0, 8.0)


def fmt(x):
    return f"{float(x):.17g}"


@dataclass(frozen=True)
class SolveSettings:
    model: str = "tfim1_h2zero"
    target: str = "CZ"
    L: int = 4
    dt: float = 1.0
    g: float = 1.0
    epsilon: float = 1e-7
    amplitude: float = DEFAULT_AMPLITUDE
    max_iters: int = 5000


def solve_pulse(settings, seed):
    """Random pulse with amplitudes up to ``amplitude * g``, then restoration."""
    spec = preset(settings.model, settings.g)
    target = gate_target(settings.target)
    cfg = RestoreConfig(epsilon=settings.epsilon, max_iters=settings.max_iters, seed=seed)
    pulse = solve(
        spec,
        target,
        settings.L,
        settings.dt / settings.g,
        cfg,
        amplitude_scale=settings.amplitude * settings.g,
        seed=seed,
    )
    return spec, target, pulse


# -- spectra -----------------------------------------------------------------


def spectrum_rows(before, after=None, weights=None):
    """Per-channel, per-mode power rows (see ``SPECTRUM_COLUMNS``).

    ``after`` defaults to ``before``; both must share ``L`` and ``dt``.
    """
    after = before if after is None else after
    if after.L != before.L:
        raise InputError("spectra must be compared at equal segment counts")
    f = mode_frequencies(before.L, before.dt)
    pb = power_spectrum(before)
    pa = power_spectrum(after)
    w = np.ones(before.L) if weights is None else np.asarray(weights, dtype=float)
    rows = []
    for k in range(before.K):
        for i in range(before.L):
            rows.append(
                [k, i + 1, fmt(f[i]), fmt(f[i] * before.T), fmt(pb[i, k]), fmt(pa[i, k]), fmt(w[i])]
            )
    return rows


def band_power(pulse, mask):
    """Total power over all channels in the modes selected by ``mask``."""
    return float(power_spectrum(pulse)[np.asarray(mask)].sum())


# -- spectral filtering ------------------------------------------------------


@dataclass(frozen=True)
class FilterRun:
    initial: object
    final: object
    filter: object
    trace: object
    F: float


def filter_experiment(spec, pulse, target, kind, cutoff_fT=None, center_fT=None, width_fT=None,
                      refine=16, step=0.5, iters=200, epsilon=1e-6, steepness=4):
    """Refine a solution and filter its spectrum along the level set.

    Cutoff, centre and width are given in dimensionless ``f * T`` units.
    """
    fine = refine_pulse(pulse, refine) if refine > 1 else pulse
    T = fine.T
    fs = make_filter(
        kind,
        fine.L,
        fine.dt,
        cutoff=None if cutoff_fT is None else cutoff_fT / T,
        center=None if center_fT is None else center_fT / T,
        width=None if width_fT is None else width_fT / T,
        steepness=steepness,
    )
    cfg = GeckoConfig(step_size=step, max_iters=iters, epsilon=epsilon)
    restorer = default_restorer(epsilon, max_iters=500)
    trace = gecko_run(spec, fine, target, FilterQuality(fs), cfg, restorer)
    return FilterRun(fine, trace.pulse, fs, trace, fidelity(spec, trace.pulse, target))


# -- robustness --------------------------------------------------------------


def robust_sweep_rows(spec, pulse, target, channels=(0,), delta_max=0.1, points=21):
    """Fidelity with a constant offset added to ``channels`` (see ``SWEEP_COLUMNS``)."""
    if points < 3:
        raise InputError("a sweep needs at least 3 points")
    if delta_max <= 0:
        raise InputError("delta_max must be positive")
    rs = RobustSpec(tuple(channels), 0.0, 1)
    rows = []
    for off in np.linspace(-delta_max, delta_max, int(points)):
        F = fidelity(spec, _shifted(pulse, rs, off), target)
        rows.append([fmt(off), fmt(off * pulse.T), fmt(F)])
    return rows


def worst_case_fidelity(spec, pulse, target, rs):
    return float(robust_fidelities(spec, pulse, target, rs)[0].min())


# -- baselines ---------------------------------------------------------------


def baseline_gauss(spec, pulse, target, sigma, subdivide=64, pad=0, epsilon=1e-7, max_iters=5000):
    """Refine, Gaussian-smooth, then restore the fidelity."""
    fine = refine_pulse(pulse, subdivide) if subdivide > 1 else pulse
    smooth = gaussian_baseline(fine, sigma, pad)
    return restore(spec, smooth, target, RestoreConfig(epsilon=epsilon, max_iters=max_iters))


# -- multi-seed smoothing study ---------------------------------------------


def _fig4_seed(args):
    seed, eps, L, rounds, sigmas, amplitude, gecko_step, gecko_iters = args
    settings = SolveSettings(model="tfim2", target="CNOT", L=L, epsilon=eps, amplitude=amplitude)
    try:
        spec, target, p0 = solve_pulse(settings, seed)
    except GeckoError as exc:
        log.warning("seed %d: solve failed (%s)", seed, exc)
        return seed, None
    out = {}
    try:
        cfg = GeckoConfig(mode="direct_solve", step_size=gecko_step, max_iters=gecko_iters, epsilon=eps)
        trace = refine_and_smooth(spec, p0, target, rounds, cfg, default_restorer(eps, max_iters=2000))
        out["gecko"] = trace.pulse
    except GeckoError as exc:
        log.warning("seed %d: gecko smoothing failed (%s)", seed, exc)
    for sigma in sigmas:
        try:
            out[f"gauss{sigma:g}"] = baseline_gauss(spec, p0, target, sigma, 2**rounds, 0, eps)
        except GeckoError as exc:
            log.warning("seed %d: gaussian sigma=%g failed (%s)", seed, sigma, exc)
    for name, p in out.items():
        if not fidelity(spec, p, target) > 1 - eps:
            raise AssertionError(f"seed {seed}: {name} result violates the fidelity constraint")
    return seed, out


def fig4_study(n_seeds=10, seed0=0, eps=1e-4, L=10, rounds=5, sigmas=FIG4_SIGMAS,
               amplitude=DEFAULT_AMPLITUDE, gecko_step=1.0, gecko_iters=15, workers=1):
    """Smooth many CNOT solutions by GECKO and by Gaussian convolution.

    Returns ``(rows, per_seed)`` where rows follow ``FIG4_COLUMNS`` with the
    median and quartiles of per-mode power over successful seeds, and
    ``per_seed`` maps seed to the dict of final pulses (``None`` on failure).
    Seeds are independent and run in ``workers`` processes; results are merged
    in seed order so the output does not depend on scheduling.
    """
    jobs = [(seed0 + i, eps, L, rounds, tuple(sigmas), amplitude, gecko_step, gecko_iters)
            for i in range(int(n_seeds))]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_fig4_seed, jobs))
    else:
        results = [_fig4_seed(j) for j in jobs]
    results.sort(key=lambda r: r[0])
    per_seed = dict(results)

    methods = ["gecko"] + [f"gauss{s:g}" for s in sigmas]
    rows = []
    for m in methods:
        pulses = [r[m] for r in per_seed.values() if r is not None and m in r]
        if not pulses:
            continue
        P = np.stack([power_spectrum(p) for p in pulses])  # (seeds, L, K)
        q25, med, q75 = np.percentile(P, [25, 50, 75], axis=0)
        f = mode_frequencies(pulses[0].L, pulses[0].dt) * pulses[0].T
        for k in range(P.shape[2]):
            for i in range(P.shape[1]):
                rows.append([m, k, i + 1, fmt(f[i]), fmt(med[i, k]), fmt(q25[i, k]), fmt(q75[i, k]), len(pulses)])
    return rows, per_seed


# -- duration experiments ----------------------------------------------------


def path_then_drift(spec, pulse, target, epsilon=1e-7, path_step=0.02, path_iters=3000,
                    drift_step=0.5, drift_iters=400):
    """Shorten a solution: minimise path length, then the segment duration.

    Both stages free ``dt``.  Restoration keeps ``dt`` fixed and is capped at
    300 ascent iterations; if it gives up near the feasibility boundary the
    stage ends at the last feasible pulse.
    """
    from .quality import DriftQuality, PathQuality

    restorer = default_restorer(epsilon, max_iters=300)
    stages = {}
    p = pulse.replace(optimize_dt=True)
    for name, quality, s, n in (
        ("path", PathQuality(), path_step, path_iters),
        ("drift", DriftQuality(), drift_step, drift_iters),
    ):
        try:
            trace = gecko_run(spec, p, target, quality, GeckoConfig(step_size=s, max_iters=n, epsilon=epsilon), restorer)
            p = trace.pulse
        except RestoreFailedError as exc:
            p = exc.pulse
            trace = None
        stages[name] = (p, trace)
    return stages
