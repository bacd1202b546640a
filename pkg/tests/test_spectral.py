import numpy as np
import pytest

from gecko.errors import InputError
from gecko.pulse import PulseParams
from gecko.spectral import (
    dst1_forward,
    dst1_inverse,
    dst1_matrix,
    gaussian_baseline,
    make_filter,
    mode_frequencies,
    power_spectrum,
)


def _direct_forward(x):
    # c_n = 2/(L+1) sum_l x_l sin(pi n l / (L+1)), by explicit summation
    L = len(x)
    return np.array(
        [2.0 / (L + 1) * sum(x[l - 1] * np.sin(np.pi * n * l / (L + 1)) for l in range(1, L + 1)) for n in range(1, L + 1)]
    )


def _direct_inverse(c):
    L = len(c)
    return np.array([sum(c[n - 1] * np.sin(np.pi * n * l / (L + 1)) for n in range(1, L + 1)) for l in range(1, L + 1)])


def test_zero_maps_to_zero():
    np.testing.assert_array_equal(dst1_forward(np.zeros(6)), np.zeros(6))


def test_basis_function_gives_unit_coefficient():
    L = 8
    l = np.arange(1, L + 1)
    c = dst1_forward(np.sin(np.pi * 3 * l / (L + 1)))
    want = np.zeros(L)
    want[2] = 1.0
    np.testing.assert_allclose(c, want, atol=1e-14)


@pytest.mark.parametrize("L", [1, 2, 8, 20, 33])
def test_matches_direct_summation(L, rng):
    x = rng.normal(size=L)
    np.testing.assert_allclose(dst1_forward(x), _direct_forward(x), atol=1e-12)
    np.testing.assert_allclose(dst1_inverse(x), _direct_inverse(x), atol=1e-12)
    np.testing.assert_allclose(dst1_inverse(dst1_forward(x)), x, atol=1e-12)


def test_matrix_form(rng):
    x = rng.normal(size=(11, 2))
    np.testing.assert_allclose(dst1_matrix(11) @ x, dst1_forward(x), atol=1e-13)


def test_empty_input_rejected():
    with pytest.raises(InputError):
        dst1_forward(np.zeros(0))


def test_mode_frequencies():
    f = mode_frequencies(4, 0.5)
    np.testing.assert_allclose(f, np.arange(1, 5) / (2 * 5 * 0.5))


def test_lowpass_monotone_and_complementary():
    lp = make_filter("lowpass", 40, 0.1, cutoff=2.0)
    hp = make_filter("highpass", 40, 0.1, cutoff=2.0)
    assert np.all(np.diff(lp.weights) <= 0)
    np.testing.assert_allclose(lp.weights + hp.weights, 1.0, atol=1e-15)


def test_bandstop_minimum_near_centre():
    L, dt = 320, 1 / 16
    f = mode_frequencies(L, dt)
    bs = make_filter("bandstop", L, dt, center=5.0, width=0.3)
    assert np.argmin(bs.weights) == np.argmin(np.abs(f - 5.0))


@pytest.mark.parametrize(
    "kwargs",
    [dict(kind="lowpass"), dict(kind="lowpass", cutoff=100.0), dict(kind="bandstop", center=1.0), dict(kind="comb")],
)
def test_filter_arguments_validated(kwargs):
    kind = kwargs.pop("kind")
    with pytest.raises(InputError):
        make_filter(kind, 10, 1.0, **kwargs)


def test_power_spectrum_single_mode():
    L = 16
    l = np.arange(1, L + 1)
    P = power_spectrum(PulseParams(np.sin(np.pi * 5 * l / (L + 1)), 1.0))
    assert np.argmax(P[:, 0]) == 4
    assert P[4, 0] == pytest.approx(1.0)
    assert P.sum() == pytest.approx(1.0)


def test_gaussian_of_zero_is_zero():
    out = gaussian_baseline(PulseParams(np.zeros((30, 2)), 1.0), 4.0)
    np.testing.assert_array_equal(out.phi, 0)


def test_gaussian_preserves_constant_interior():
    out = gaussian_baseline(PulseParams(np.full((200, 1), 2.5), 1.0), 8.0, pad=32)
    np.testing.assert_allclose(out.phi[40:160], 2.5, atol=1e-6)


def test_gaussian_narrow_kernel_is_identity(rng):
    p = PulseParams(rng.normal(size=(50, 1)), 1.0)
    np.testing.assert_allclose(gaussian_baseline(p, 0.01).phi, p.phi, atol=1e-12)


def test_padding_only_changes_the_ends(rng):
    p = PulseParams(rng.normal(size=(256, 1)), 1.0)
    a = gaussian_baseline(p, 8.0, pad=0).phi
    b = gaussian_baseline(p, 8.0, pad=32).phi
    assert np.abs(a - b)[:10].max() > 1e-3
    np.testing.assert_allclose(a[40:-40], b[40:-40], atol=1e-12)
