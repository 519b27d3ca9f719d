"""Averaged-periodogram PSD estimates with segment-scatter error bars."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal

MIN_SEGMENTS = 8


@dataclass(frozen=True)
class PSDEstimate:
    """Welch estimate of a power spectral density.

    Real series give a one-sided density (a unit-variance white sequence
    of step ``dt`` reads ``2 dt``); complex series give a two-sided density
    sorted by frequency. ``stderr`` is the standard error of the segment
    mean. Overlapping segments are correlated, so it is slightly
    optimistic. ``low_count`` is set when fewer than ``MIN_SEGMENTS``
    segments went into the average.
    """

    freqs: np.ndarray
    psd: np.ndarray
    stderr: np.ndarray
    n_segments: int
    low_count: bool

    @property
    def omega(self) -> np.ndarray:
        return 2 * np.pi * self.freqs


def welch_psd(series, dt: float, segment_length: int, overlap: float = 0.5,
              window: str = "hann", detrend=False) -> PSDEstimate:
    x = np.asarray(series)
    if x.ndim != 1:
        raise ValueError("series must be one-dimensional")
    if not 0 < segment_length <= x.size:
        raise ValueError("segment_length must lie in [1, len(series)]")
    if not 0 <= overlap < 1:
        raise ValueError("overlap must lie in [0, 1)")
    noverlap = int(round(overlap * segment_length))
    complex_input = np.iscomplexobj(x)
    f, _, per = signal.spectrogram(x, fs=1.0 / dt, window=window, nperseg=segment_length,
                                   noverlap=noverlap, detrend=detrend,
                                   return_onesided=not complex_input, scaling="density",
                                   mode="psd")
    k = per.shape[-1]
    mean = per.mean(axis=-1)
    err = per.std(axis=-1, ddof=1) / np.sqrt(k) if k > 1 else np.full_like(mean, np.inf)
    if complex_input:
        order = np.argsort(f)
        f, mean, err = f[order], mean[order], err[order]
    return PSDEstimate(f, mean, err, k, k < MIN_SEGMENTS)
