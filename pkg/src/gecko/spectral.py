"""Sine-series (DST-I) transform pair, filter weight masks, Gaussian smoothing."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sfft
from scipy.ndimage import gaussian_filter1d

from .errors import InputError
from .pulse import PulseParams


def dst1_forward(signal):
    """Sine-series coefficients ``c_n = 2/(L+1) sum_l x_l sin(pi n l / (L+1))``.

    Transforms along axis 0, so an (L, K) pulse is handled channel by channel.
    """
    x = np.asarray(signal, dtype=float)
    if x.shape[0] == 0:
        raise InputError("cannot transform an empty signal")
    L = x.shape[0]
    # scipy's DST-I carries a factor 2 and no normalisation
    return sfft.dst(x, type=1, axis=0) / (L + 1)


def dst1_inverse(coeffs):
    """Synthesis ``x_l = sum_n c_n sin(pi n l / (L+1))``."""
    c = np.asarray(coeffs, dtype=float)
    if c.shape[0] == 0:
        raise InputError("cannot transform an empty signal")
    return sfft.dst(c, type=1, axis=0) / 2.0


def dst1_matrix(L):
    """Dense forward-transform matrix (symmetric)."""
    n = np.arange(1, L + 1)
    return 2.0 / (L + 1) * np.sin(np.pi * np.outer(n, n) / (L + 1))


def mode_frequencies(L, dt):
    """Frequency (cycles per unit time) of sine mode ``n = 1..L``."""
    return np.arange(1, L + 1) / (2.0 * (L + 1) * dt)


def power_spectrum(pulse):
    """Per-mode power ``c_n**2`` of every channel, shape (L, K)."""
    return dst1_forward(pulse.phi) ** 2


@dataclass(frozen=True)
class FilterSpec:
    kind: str
    weights: np.ndarray
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.ndim != 1 or w.size == 0:
            raise InputError("filter weights must be a non-empty vector")
        if np.any(w < 0) or np.any(w > 1) or not np.all(np.isfinite(w)):
            raise InputError("filter weights must lie in [0, 1]")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def L(self):
        return self.weights.size


FILTER_KINDS = ("lowpass", "highpass", "bandstop", "custom")


def make_filter(kind, L, dt, cutoff=None, center=None, width=None, steepness=4, weights=None):
    """Build a weight mask over the ``L`` sine modes.

    lowpass   ``w = 1 / (1 + (f/cutoff)**(2p))``
    highpass  ``1 - lowpass``
    bandstop  ``1 - exp(-(f - center)**2 / (2 width**2))``
    custom    explicit ``weights``
    """
    f = mode_frequencies(L, dt)
    f_max = f[-1]
    if kind in ("lowpass", "highpass"):
        if cutoff is None or cutoff <= 0:
            raise InputError(f"{kind} filter needs a positive cutoff")
        if cutoff > f_max:
            raise InputError(f"cutoff {cutoff} above the highest mode frequency {f_max:.4g}")
        w = 1.0 / (1.0 + (f / cutoff) ** (2 * steepness))
        if kind == "highpass":
            w = 1.0 - w
        params = {"cutoff": float(cutoff), "steepness": steepness}
    elif kind == "bandstop":
        if center is None or center <= 0 or center > f_max:
            raise InputError(f"bandstop center must lie in (0, {f_max:.4g}]")
        if width is None or width <= 0:
            raise InputError("bandstop filter needs a positive width")
        w = 1.0 - np.exp(-((f - center) ** 2) / (2.0 * width**2))
        params = {"center": float(center), "width": float(width)}
    elif kind == "custom":
        if weights is None or len(weights) != L:
            raise InputError(f"custom filter needs {L} weights")
        w = np.asarray(weights, dtype=float)
        params = {}
    else:
        raise InputError(f"unknown filter kind {kind!r}; choose from {FILTER_KINDS}")
    return FilterSpec(kind, np.clip(w, 0.0, 1.0), params)


def gaussian_baseline(pulse, sigma, pad=0):
    """Gaussian-smoothed copy of ``pulse`` (fidelity is not preserved).

    Each channel is zero-padded by ``pad`` samples on both ends, convolved with a
    normalised Gaussian of width ``sigma`` samples truncated at 4 sigma, then
    cropped back.  Beyond the padding the signal is extended with its edge
    value, so ``pad`` controls how strongly the ends are pulled to zero.
    """
    if sigma <= 0:
        raise InputError("sigma must be positive")
    pad = int(pad)
    if pad < 0:
        raise InputError("pad must be non-negative")
    padded = np.pad(pulse.phi, ((pad, pad), (0, 0)))
    smooth = gaussian_filter1d(padded, sigma, axis=0, mode="nearest", truncate=4.0)
    return PulseParams(smooth[pad : pad + pulse.L], pulse.dt, pulse.optimize_dt)
