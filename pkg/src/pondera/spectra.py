"""Quadrature noise spectra of the reflected field.

Spectra are symmetrized PSDs in shot-noise units: the vacuum gives 1 in
every quadrature. ``S_X`` is the amplitude quadrature (phase 0), ``S_Y``
the phase quadrature (phase pi/2) and ``S_XY`` their symmetrized cross
spectrum. Each one is split into quantum, frequency-noise,
amplitude-noise and thermal contributions.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import NamedTuple, Sequence

import numpy as np
from scipy.constants import hbar, k as k_B
from scipy.optimize import brentq, minimize_scalar

from .params import SteadyState, SystemConfig, stability_check, steady_state
from .transfer import TransferSet, nu_set


class InputSpectra(NamedTuple):
    S_in: np.ndarray
    S_T: np.ndarray
    S_phi: np.ndarray
    S_eps: np.ndarray


def thermal_spectrum(omega, config: SystemConfig) -> np.ndarray:
    """Brownian force PSD ``(gamma_m / w_m) w coth(hbar w / 2 k_B T)``.

    The removable point ``w = 0`` takes its limit ``2 k_B T / hbar``; at
    ``T = 0`` the result is ``(gamma_m / w_m) |w|``.
    """
    w = np.asarray(omega, dtype=float)
    mech = config.mech
    pref = mech.gamma_m / mech.omega_m
    if mech.temperature == 0:
        return pref * np.abs(w)
    x = hbar * w / (2 * k_B * mech.temperature)
    safe = np.where(x == 0, 1.0, x)
    val = np.where(x == 0, 1.0, safe / np.tanh(safe))
    return pref * 2 * k_B * mech.temperature / hbar * val


def input_noise_spectra(omega, config: SystemConfig) -> InputSpectra:
    w = np.asarray(omega, dtype=float)
    return InputSpectra(np.ones_like(w), thermal_spectrum(w, config),
                        config.noise.freq_psd(w), config.noise.ampl_psd(w))


@dataclass(frozen=True)
class Contributions:
    quan: np.ndarray
    freq: np.ndarray
    ampl: np.ndarray
    ther: np.ndarray

    @property
    def total(self) -> np.ndarray:
        return self.quan + self.freq + self.ampl + self.ther

    def __getitem__(self, name: str) -> np.ndarray:
        if name == "total":
            return self.total
        return getattr(self, name)


PARTS = ("quan", "freq", "ampl", "ther")


@dataclass(frozen=True)
class SpectrumDecomposition:
    omega: np.ndarray
    X: Contributions
    Y: Contributions
    XY: Contributions


def quadrature_spectra(omega, config: SystemConfig, steady: SteadyState,
                       transfer: tuple[TransferSet, TransferSet] | None = None,
                       form: str = "expanded") -> SpectrumDecomposition:
    """Decompose ``S_X``, ``S_Y`` and ``S_XY`` at the frequencies ``omega``.

    ``transfer`` may pass precomputed coefficient sets at ``+omega`` and
    ``-omega``.

    The frequency-noise terms come in two algebraically identical forms.
    ``form="expanded"`` sums the separate ``|lambda|^2`` and
    ``(1 + exp(2 i theta))`` pieces. These nearly cancel when the
    phase-quadrature transduction is large, which costs up to ~1e-7
    relative accuracy. ``form="factored"`` evaluates the same quantity as
    ``|alpha|^2 |l34 -+ exp(-2 i theta) conj(l34')|^2`` and keeps full
    precision.
    """
    if form not in ("expanded", "factored"):
        raise ValueError(f"unknown form {form!r}")
    w = np.asarray(omega, dtype=float)
    if transfer is None:
        p, m = nu_set(w, config, steady), nu_set(-w, config, steady)
    else:
        p, m = transfer
    k2 = config.cavity.kappa2
    noise = input_noise_spectra(w, config)
    e = 1 + np.exp(2j * steady.theta)
    a2 = abs(steady.alpha) ** 2
    cj = np.conj

    # lambda_ij^pm(w) = nu_i(w) pm conj(nu_j(-w)); primed versions at -w
    l12p, l12pm = p.nu1 + cj(m.nu2), m.nu1 + cj(p.nu2)
    l12m, l12mm = p.nu1 - cj(m.nu2), m.nu1 - cj(p.nu2)
    l34p, l34pm = p.nu3 + cj(m.nu4), m.nu3 + cj(p.nu4)
    l34m, l34mm = p.nu3 - cj(m.nu4), m.nu3 - cj(p.nu4)

    X = Contributions(
        quan=0.5 * (abs(l12p) ** 2 + abs(l12pm) ** 2) + k2 * (abs(l34p) ** 2 + abs(l34pm) ** 2),
        freq=(abs(l34p + cj(l34pm)) ** 2 - 2 * np.real(e * l34p * l34pm)) * a2 * noise.S_phi,
        ampl=abs(l12p + cj(l12pm)) ** 2 * noise.S_eps,
        ther=abs(p.nuT + cj(m.nuT)) ** 2 * noise.S_T,
    )
    Y = Contributions(
        quan=0.5 * (abs(l12m) ** 2 + abs(l12mm) ** 2) + k2 * (abs(l34m) ** 2 + abs(l34mm) ** 2),
        freq=(abs(l34m - cj(l34mm)) ** 2 + 2 * np.real(e * l34m * l34mm)) * a2 * noise.S_phi,
        ampl=abs(l12m - cj(l12mm)) ** 2 * noise.S_eps,
        ther=abs(p.nuT - cj(m.nuT)) ** 2 * noise.S_T,
    )
    xi12 = p.nu1 * m.nu2 + m.nu1 * p.nu2
    xi34 = p.nu3 * m.nu4 + m.nu3 * p.nu4
    eta34 = p.nu3 * m.nu3 - cj(p.nu4) * cj(m.nu4)
    zeta34 = (p.nu3 + p.nu4) * (m.nu3 + m.nu4)
    zeta12 = (p.nu1 + p.nu2) * (m.nu1 + m.nu2)
    if form == "factored":
        u = np.exp(-2j * steady.theta)
        hx = 1j * (l34p - u * cj(l34pm))
        hy = l34m + u * cj(l34mm)
        X = replace(X, freq=abs(hx) ** 2 * a2 * noise.S_phi)
        Y = replace(Y, freq=abs(hy) ** 2 * a2 * noise.S_phi)
        xy_freq = np.real(hx * cj(hy)) * a2 * noise.S_phi
    else:
        xy_freq = 2 * np.imag(zeta34 - e * eta34) * a2 * noise.S_phi
    XY = Contributions(
        quan=np.imag(xi12) + 2 * k2 * np.imag(xi34),
        freq=xy_freq,
        ampl=2 * np.imag(zeta12) * noise.S_eps,
        ther=2 * np.imag(p.nuT * m.nuT) * noise.S_T,
    )
    return SpectrumDecomposition(w, X, Y, XY)


def _parts(decomp: SpectrumDecomposition, part: str):
    return decomp.X[part], decomp.Y[part], decomp.XY[part]


def averaged_spectrum(decomp: SpectrumDecomposition, phi, jitter: float = 0.0, part: str = "total"):
    """Homodyne spectrum averaged over a Gaussian phase error.

    ``jitter`` is the standard deviation of the phase in radians; it damps
    the phase-sensitive terms by ``exp(-2 jitter^2)``.
    """
    sx, sy, sxy = _parts(decomp, part)
    phi = np.asarray(phi, dtype=float)
    att = math.exp(-2 * jitter ** 2)
    return 0.5 * (sx + sy) + att * (0.5 * (sx - sy) * np.cos(2 * phi) + sxy * np.sin(2 * phi))


def homodyne_spectrum(decomp: SpectrumDecomposition, phi, part: str = "total"):
    """Spectrum of the quadrature measured at homodyne phase ``phi``.

    ``phi = 0`` gives ``S_X`` and ``phi = pi/2`` gives ``S_Y``. With
    ``part`` one of the contribution names only that piece is returned.
    """
    return averaged_spectrum(decomp, phi, 0.0, part)


class OptimalSpectrum(NamedTuple):
    S_opt: np.ndarray
    phi_opt: np.ndarray
    undefined: np.ndarray


def optimal_spectrum(decomp: SpectrumDecomposition) -> OptimalSpectrum:
    """Lowest quadrature spectrum and the phase reaching it, point by point.

    The phase is reduced to ``[0, pi)``. Where ``S_X = S_Y`` and
    ``S_XY = 0`` every phase is equivalent; those points are flagged in
    ``undefined`` and get ``phi_opt = 0``.
    """
    sx, sy, sxy = decomp.X.total, decomp.Y.total, decomp.XY.total
    root = np.sqrt((sx - sy) ** 2 + 4 * sxy ** 2)
    s_opt = 0.5 * (sx + sy - root)
    undefined = root == 0
    sign = np.where(sxy < 0, -1.0, 1.0)
    cos2 = np.clip((sx - sy) / np.where(undefined, 1.0, root), -1.0, 1.0)
    phi = np.mod(0.5 * (np.pi + sign * np.arccos(cos2)), np.pi)
    phi = np.where(undefined, 0.0, phi)
    return OptimalSpectrum(s_opt, phi, undefined)


def averaged_optimal_spectrum(decomp: SpectrumDecomposition, jitter: float = 0.0):
    sx, sy, sxy = decomp.X.total, decomp.Y.total, decomp.XY.total
    return 0.5 * (sx + sy - math.exp(-2 * jitter ** 2) * np.sqrt((sx - sy) ** 2 + 4 * sxy ** 2))


def heisenberg_check(decomp: SpectrumDecomposition):
    """Margin ``S_X S_Y - S_XY^2 - 1``; negative values violate the uncertainty bound."""
    return decomp.X.total * decomp.Y.total - decomp.XY.total ** 2 - 1


# -- squeezing metrics ------------------------------------------------------

@dataclass(frozen=True)
class SqueezingReport:
    phi: float
    bands: list
    min_value: float
    min_omega: float
    omega: np.ndarray
    spectrum: np.ndarray
    phi_opt: np.ndarray

    @property
    def min_db(self) -> float:
        return 10 * math.log10(self.min_value)

    @property
    def squeezed(self) -> bool:
        return bool(self.bands)

    def band_containing(self, omega: float):
        for lo, hi in self.bands:
            if lo < omega < hi:
                return (lo, hi)
        return None


_SHOT_TOL = 1e-12


def squeezing_report(omega, config: SystemConfig, steady: SteadyState | None = None,
                     phi: float | None = None, jitter: float = 0.0) -> SqueezingReport:
    """Sub-shot-noise bands of the homodyne spectrum on a frequency grid.

    ``phi`` defaults to the optimal phase at ``w_m``. Band edges are
    refined by bisection to ``gamma_m / 100``; an edge that coincides with
    the end of the grid is left there. Values within ``1e-12`` of shot noise
    count as shot noise, so a vacuum output reports no band.
    """
    w = np.asarray(omega, dtype=float)
    if steady is None:
        steady = steady_state(config)
    if phi is None:
        mid = quadrature_spectra(np.array([config.mech.omega_m]), config, steady)
        phi = float(optimal_spectrum(mid).phi_opt[0])
    decomp = quadrature_spectra(w, config, steady)
    spec = averaged_spectrum(decomp, phi, jitter)
    tol = config.mech.gamma_m / 100

    def excess(x):
        d = quadrature_spectra(np.array([x]), config, steady)
        return float(averaged_spectrum(d, phi, jitter)[0]) - level

    level = 1.0 - _SHOT_TOL
    below = spec < level
    bands = []
    i = 0
    while i < len(w):
        if not below[i]:
            i += 1
            continue
        j = i
        while j + 1 < len(w) and below[j + 1]:
            j += 1
        lo = w[i] if i == 0 else brentq(excess, w[i - 1], w[i], xtol=tol)
        hi = w[j] if j == len(w) - 1 else brentq(excess, w[j], w[j + 1], xtol=tol)
        bands.append((float(lo), float(hi)))
        i = j + 1

    k = int(np.argmin(spec))
    lo, hi = w[max(k - 1, 0)], w[min(k + 1, len(w) - 1)]
    if hi > lo:
        res = minimize_scalar(excess, bounds=(lo, hi), method="bounded", options={"xatol": tol})
        min_omega, min_value = float(res.x), float(res.fun) + level
        if min_value > spec[k]:
            min_omega, min_value = float(w[k]), float(spec[k])
    else:
        min_omega, min_value = float(w[k]), float(spec[k])
    return SqueezingReport(float(phi), bands, min_value, min_omega, w, spec,
                           optimal_spectrum(decomp).phi_opt)


# -- maps -------------------------------------------------------------------

def _pool(workers: int | None):
    if workers is None:
        import os
        workers = int(os.environ.get("PONDERA_THREADS", "1") or 1)
    return max(1, workers)


def _ordered_map(fn, items, workers):
    n = _pool(workers)
    if n == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))


@dataclass(frozen=True)
class PhaseMap:
    """Homodyne spectrum at one frequency over a (detuning, phase) grid.

    Rows of unstable operating points are not evaluated: ``stable`` is
    False there and the row holds NaN. ``boundary[i]`` lists the phase
    intervals with ``S < 1`` for detuning ``i``.
    """

    detunings: np.ndarray
    phases: np.ndarray
    values: np.ndarray
    stable: np.ndarray
    boundary: list

    def region_width(self, i: int) -> float:
        return float(sum(hi - lo for lo, hi in self.boundary[i]))


def _phase_intervals(phases, row):
    out, start = [], None
    for p, below in zip(phases, row < 1):
        if below and start is None:
            start = p
        if not below and start is not None:
            out.append((float(start), float(prev)))
            start = None
        prev = p
    if start is not None:
        out.append((float(start), float(prev)))
    return out


def detuning_phase_map(detunings: Sequence[float], phases: Sequence[float], config: SystemConfig,
                       omega: float | None = None, workers: int | None = None) -> PhaseMap:
    """``S_d^phi(omega)`` for each effective detuning (rad/s) and phase (rad)."""
    d = np.asarray(detunings, dtype=float)
    ph = np.asarray(phases, dtype=float)
    w = config.mech.omega_m if omega is None else omega

    def row(delta):
        cfg = config.with_detuning(float(delta))
        st = steady_state(cfg)
        if not stability_check(cfg, st).is_stable:
            return False, np.full(ph.shape, np.nan)
        dec = quadrature_spectra(np.array([w]), cfg, st)
        return True, averaged_spectrum(dec, ph, cfg.noise.phase_jitter)

    rows = _ordered_map(row, d, workers)
    stable = np.array([r[0] for r in rows])
    values = np.vstack([r[1] for r in rows])
    boundary = [_phase_intervals(ph, v) if s else [] for s, v in zip(stable, values)]
    return PhaseMap(d, ph, values, stable, boundary)


def jitter_map(omega, jitters: Sequence[float], config: SystemConfig, steady: SteadyState,
               phi: float) -> np.ndarray:
    """Jitter-averaged spectrum, rows indexed by jitter (rad), columns by ``omega``."""
    dec = quadrature_spectra(np.asarray(omega, dtype=float), config, steady)
    return np.vstack([averaged_spectrum(dec, phi, j) for j in jitters])


def squeezing_threshold(omega, config: SystemConfig, steady: SteadyState, phi: float,
                        upper: float = math.radians(10)) -> float:
    """Smallest phase jitter (rad) for which no point of ``omega`` stays below shot noise."""
    dec = quadrature_spectra(np.asarray(omega, dtype=float), config, steady)
    f = lambda j: float(np.min(averaged_spectrum(dec, phi, j))) - 1.0
    if f(0.0) >= 0:
        return 0.0
    if f(upper) < 0:
        return math.inf
    return brentq(f, 0.0, upper, xtol=1e-9)
