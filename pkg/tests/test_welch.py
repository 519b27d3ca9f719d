import math

import numpy as np
import pytest

from pondera.validate.welch import MIN_SEGMENTS, welch_psd


def test_sinusoid_power():
    dt, n = 1e-3, 1 << 16
    t = dt * np.arange(n)
    f0, amp = 50.0, 2.0
    est = welch_psd(amp * np.sin(2 * math.pi * f0 * t), dt, 4096)
    df = est.freqs[1] - est.freqs[0]
    # hann leaks into neighbours; the integrated power is A^2 / 2
    band = np.abs(est.freqs - f0) <= 4 * df
    assert np.sum(est.psd[band]) * df == pytest.approx(amp ** 2 / 2, rel=1e-2)


def test_white_noise_level():
    rng = np.random.default_rng(0)
    dt = 0.01
    est = welch_psd(rng.standard_normal(1 << 18), dt, 1024)
    inner = est.psd[1:-1]
    assert np.mean(inner) == pytest.approx(2 * dt, rel=1e-2)
    z = (inner - 2 * dt) / est.stderr[1:-1]
    assert abs(np.mean(z)) < 0.2 and 0.7 < np.std(z) < 1.3


def test_complex_white_noise_is_two_sided():
    rng = np.random.default_rng(1)
    dt = 0.01
    x = (rng.standard_normal(1 << 17) + 1j * rng.standard_normal(1 << 17)) / math.sqrt(2)
    est = welch_psd(x, dt, 512)
    assert np.all(np.diff(est.freqs) > 0) and est.freqs[0] < 0
    assert np.mean(est.psd) == pytest.approx(dt, rel=2e-2)


def test_lorentzian_linewidth():
    # Ornstein-Uhlenbeck process: one-sided PSD with half width gamma / 2 pi in Hz
    rng = np.random.default_rng(2)
    dt, gamma = 1e-3, 2 * math.pi * 5.0
    a = math.exp(-gamma * dt)
    from scipy.signal import lfilter
    x = lfilter([1.0], [1.0, -a], rng.standard_normal(1 << 20) * math.sqrt(1 - a * a))
    est = welch_psd(x, dt, 8192)
    # the zero-frequency bin of a one-sided density is not doubled, so start at bin 1
    f, p = est.freqs[1:], est.psd[1:]
    peak = p[0] * (1 + (f[0] * 2 * math.pi / gamma) ** 2)
    half = np.interp(-peak / 2, -p, f)
    assert half == pytest.approx(gamma / (2 * math.pi), rel=0.05)


def test_stderr_shrinks_with_more_segments():
    rng = np.random.default_rng(3)
    x = rng.standard_normal(1 << 18)
    a = welch_psd(x[: 1 << 16], 1.0, 256)
    b = welch_psd(x[: 1 << 17], 1.0, 256)
    ratio = np.median(a.stderr[1:-1]) / np.median(b.stderr[1:-1])
    assert ratio == pytest.approx(math.sqrt(2), rel=0.05)


def test_low_count_flag_and_errors():
    x = np.ones(1000)
    assert welch_psd(x, 1.0, 400).low_count
    assert welch_psd(x, 1.0, 400).n_segments < MIN_SEGMENTS
    assert not welch_psd(np.zeros(10000), 1.0, 100).low_count
    with pytest.raises(ValueError):
        welch_psd(x, 1.0, 2000)
    with pytest.raises(ValueError):
        welch_psd(x, 1.0, 100, overlap=1.0)
    with pytest.raises(ValueError):
        welch_psd(np.ones((2, 10)), 1.0, 5)
