"""Radix-2 transform and the fast Toeplitz/Hankel products built on it."""

import numpy as np
import pytest

from structnet import (
    DimensionError,
    HankelMatrix,
    SizeError,
    ToeplitzMatrix,
    fft,
    fft_convolve,
    matvec_fft,
    matvec_naive,
    next_pow2,
)


def test_delta_transforms_to_constant():
    out = fft(np.array([1.0, 0.0, 0.0, 0.0], dtype=complex))
    assert np.allclose(out, [1.0, 1.0, 1.0, 1.0], atol=1e-15)


def test_constant_transforms_to_delta():
    out = fft(np.array([1.0, 1.0, 1.0, 1.0], dtype=complex))
    assert np.allclose(out, [4.0, 0.0, 0.0, 0.0], atol=1e-15)


def test_round_trip_identity():
    rng = np.random.default_rng(20)
    v = rng.normal(size=16) + 1j * rng.normal(size=16)
    back = fft(fft(v), inverse=True)
    assert np.linalg.norm(back - v) / np.linalg.norm(v) <= 1e-12


def test_linearity():
    rng = np.random.default_rng(21)
    u = rng.normal(size=32) + 1j * rng.normal(size=32)
    v = rng.normal(size=32) + 1j * rng.normal(size=32)
    lhs = fft(2.5 * u - 1.25 * v)
    rhs = 2.5 * fft(u) - 1.25 * fft(v)
    assert np.allclose(lhs, rhs, atol=1e-12)


def test_against_reference_transform():
    rng = np.random.default_rng(22)
    for n in (2, 8, 64, 256):
        v = rng.normal(size=n) + 1j * rng.normal(size=n)
        assert np.allclose(fft(v), np.fft.fft(v), rtol=1e-11, atol=1e-11)
        assert np.allclose(fft(v, inverse=True), np.fft.ifft(v), rtol=1e-11, atol=1e-11)


def test_parseval():
    rng = np.random.default_rng(23)
    v = rng.normal(size=128) + 1j * rng.normal(size=128)
    f = fft(v)
    lhs = np.sum(np.abs(v) ** 2)
    rhs = np.sum(np.abs(f) ** 2) / 128
    assert abs(lhs - rhs) / lhs <= 1e-12


def test_non_power_of_two_rejected():
    with pytest.raises(SizeError):
        fft(np.zeros(12, dtype=complex))


def test_next_pow2():
    assert next_pow2(1) == 1
    assert next_pow2(2) == 2
    assert next_pow2(3) == 4
    assert next_pow2(1025) == 2048
    with pytest.raises(SizeError):
        next_pow2(0)


def test_fft_convolve_matches_numpy():
    rng = np.random.default_rng(24)
    for la, lb in ((1, 1), (4, 9), (17, 3), (128, 128)):
        a = rng.normal(size=la)
        b = rng.normal(size=lb)
        want = np.convolve(a, b)
        got = fft_convolve(a, b)
        assert np.allclose(got, want, rtol=1e-11, atol=1e-11)


# ---------------------------------------------------------------- fast matvec


def test_identity_toeplitz_any_size():
    rng = np.random.default_rng(25)
    for n in (1, 2, 5, 33):
        diags = np.zeros(2 * n - 1)
        diags[n - 1] = 1.0
        t = ToeplitzMatrix(n, n, diags)
        x = rng.normal(size=n)
        assert np.allclose(matvec_fft(t, x), x, atol=1e-12)


def test_hankel_impulse_row():
    # antidiagonals [1,0,0,0,0]: only entry (0,0) nonzero
    h = HankelMatrix(3, 3, [1.0, 0.0, 0.0, 0.0, 0.0])
    x = np.array([2.0, -3.0, 4.0])
    want = h.to_dense() @ x
    assert np.array_equal(want, [2.0, 0.0, 0.0])
    assert np.allclose(matvec_fft(h, x), want, atol=1e-13)


def test_fast_matches_naive_square_64():
    rng = np.random.default_rng(26)
    t = ToeplitzMatrix(64, 64, rng.normal(size=127))
    x = rng.normal(size=64)
    naive = matvec_naive(t, x)
    assert np.linalg.norm(matvec_fft(t, x) - naive) / np.linalg.norm(naive) <= 1e-10


def test_fast_matches_naive_size_sweep():
    """Sizes 4..512, square and rectangular, both structures."""
    rng = np.random.default_rng(27)
    sizes = (4, 5, 16, 31, 64, 100, 257, 512)
    for n in sizes:
        m = int(rng.integers(1, n + 4))
        for cls in (ToeplitzMatrix, HankelMatrix):
            a = cls(m, n, rng.normal(size=m + n - 1))
            x = rng.normal(size=n)
            naive = matvec_naive(a, x)
            scale = max(np.linalg.norm(naive), 1e-30)
            assert np.linalg.norm(matvec_fft(a, x) - naive) / scale <= 1e-10


def test_matvec_fft_shape_mismatch():
    t = ToeplitzMatrix(3, 4, np.arange(6.0))
    with pytest.raises(DimensionError):
        matvec_fft(t, np.zeros(3))
