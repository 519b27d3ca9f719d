"""Normalized observables: PDH response and reflected-field response.

Both measurements are driven by a strong injected frequency modulation,
so the frequency-noise PSD of the configuration (or an explicit override)
sets the signal, and a constant detection floor ``S_dn`` in shot-noise
units is added inside the square root.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from .errors import ParameterError
from .params import SteadyState, SystemConfig, steady_state
from .spectra import homodyne_spectrum, quadrature_spectra, thermal_spectrum
from .transfer import two_tone_probe_nu


class ReflectedField(NamedTuple):
    E_R: complex
    phi_R: float
    dip_depth: float
    a_in: float


def reflected_mean_field(config: SystemConfig, steady: SteadyState) -> ReflectedField:
    """Mean reflected field ``sqrt(2 k1) alpha - a_in``.

    ``phi_R`` is its phase reduced to ``[0, pi)``, the homodyne phase
    selected by direct detection of the reflected beam. ``dip_depth`` is
    ``|a_in|^2 - |E_R(Delta=0)|^2``.
    """
    cav = config.cavity
    kappa, k1, delta = cav.kappa, cav.kappa1, steady.detuning
    a_in = config.drive_amplitude / math.sqrt(2 * k1) if k1 > 0 else 0.0
    E_R = a_in * complex(kappa - 2 * k1, delta) / complex(kappa, delta)
    phi = math.atan2(delta, kappa - 2 * k1) - math.atan2(delta, kappa)
    E0 = a_in * (kappa - 2 * k1) / kappa
    return ReflectedField(E_R, phi % math.pi, a_in ** 2 - E0 ** 2, a_in)


@dataclass(frozen=True)
class ResponseCurve:
    omega: np.ndarray
    amplitude: np.ndarray
    kind: str

    def dip(self) -> tuple[float, float]:
        """Location and value of the smallest amplitude."""
        i = int(np.argmin(self.amplitude))
        return float(self.omega[i]), float(self.amplitude[i])

    def depth(self) -> float:
        """Plateau over floor, with the plateau taken at the grid ends."""
        plateau = 0.5 * (self.amplitude[0] + self.amplitude[-1])
        return float(plateau / self.amplitude.min())


def _with_freq_noise(config: SystemConfig, freq_noise):
    return config if freq_noise is None else config.with_noise(freq_noise=freq_noise)


def _floor(config: SystemConfig, detection_floor):
    return config.noise.detection_floor if detection_floor is None else detection_floor


def pdh_reference(config: SystemConfig) -> float:
    """Phase-quadrature frequency-noise PSD at low frequency, zero detuning and no coupling."""
    ref = replace(config, g0=0.0).with_detuning(0.0)
    st = steady_state(ref)
    d = quadrature_spectra(np.array([0.0]), ref, st)
    return float(d.Y.freq[0])


def pdh_response_curve(omega, config: SystemConfig, steady: SteadyState | None = None,
                       freq_noise=None, detection_floor: float | None = None,
                       gain: float = 1.0) -> ResponseCurve:
    """Normalized PDH signal, read as the output phase quadrature.

    ``sqrt((S_Y(w) + S_dn) / S_ref)`` where ``S_ref`` is the frequency-noise
    part of ``S_Y`` at low frequency with zero detuning and no coupling,
    the small-detuning calibration of the PDH slope.
    """
    cfg = _with_freq_noise(config, freq_noise)
    st = steady_state(cfg) if steady is None else steady
    w = np.asarray(omega, dtype=float)
    sy = homodyne_spectrum(quadrature_spectra(w, cfg, st), math.pi / 2)
    amp = gain * np.sqrt((sy + _floor(cfg, detection_floor)) / pdh_reference(cfg))
    return ResponseCurve(w, amp, "pdh")


def two_tone_pdh_curve(omega, probe_config: SystemConfig, pump_config: SystemConfig,
                       pump_steady: SteadyState | None = None, freq_noise=None,
                       detection_floor: float | None = None, gain: float = 1.0) -> ResponseCurve:
    """PDH signal of a weak resonant probe with a detuned pump present.

    The probe power is taken from ``probe_config``; the mirror response and
    the coupling are set by the pump.
    """
    cfg = _with_freq_noise(pump_config, freq_noise)
    probe = _with_freq_noise(probe_config, freq_noise)
    st = steady_state(cfg) if pump_steady is None else pump_steady
    w = np.asarray(omega, dtype=float)
    p = two_tone_probe_nu(w, cfg, st, probe_power=probe.drive.power)
    m = two_tone_probe_nu(-w, cfg, st, probe_power=probe.drive.power)

    def phase_psd(cp, cm):
        # phase quadrature of a real classical input
        return np.abs(-1j * cp + np.conj(-1j * cm)) ** 2

    def vac_psd(cp, cm, dp, dm):
        a_p = -1j * cp + np.conj(-1j * dm)
        a_m = -1j * cm + np.conj(-1j * dp)
        return 0.5 * (np.abs(a_p) ** 2 + np.abs(a_m) ** 2)

    k2 = cfg.cavity.kappa2
    sy = (vac_psd(p.nu1, m.nu1, p.nu2, m.nu2)
          + 2 * k2 * vac_psd(p.nu3, m.nu3, p.nu4, m.nu4)
          + phase_psd(p.c_phi, m.c_phi) * cfg.noise.freq_psd(w)
          + phase_psd(p.nu1 + p.nu2, m.nu1 + m.nu2) * cfg.noise.ampl_psd(w)
          + phase_psd(p.nuT, m.nuT) * thermal_spectrum(w, cfg))
    ref = pdh_reference(probe.with_drive(omega_laser=cfg.omega_laser))
    amp = gain * np.sqrt((sy + _floor(probe, detection_floor)) / ref)
    return ResponseCurve(w, amp, "two-tone pdh")


def reflected_response_curve(omega, config: SystemConfig, steady: SteadyState | None = None,
                             freq_noise=None, detection_floor: float | None = None,
                             gain: float = 1.0) -> ResponseCurve:
    """Reflected-beam response normalized to the reflection dip.

    ``kappa |E_R| / (sqrt(S_phidot) [|a_in|^2 - |E_R^0|^2]) * sqrt(S_d^phi_R + S_dn)``
    with ``S_phidot`` the injected level at ``w_m``.

    Raises
    ------
    ParameterError
        If the reflection dip has zero depth, so the normalization is undefined.
    """
    cfg = _with_freq_noise(config, freq_noise)
    st = steady_state(cfg) if steady is None else steady
    w = np.asarray(omega, dtype=float)
    refl = reflected_mean_field(cfg, st)
    if refl.dip_depth <= 0:
        raise ParameterError("reflection dip has zero depth; normalization undefined")
    s_phi = float(cfg.noise.freq_psd(np.array(cfg.mech.omega_m)))
    if s_phi <= 0:
        raise ParameterError("reflected response needs a non-zero frequency-noise level")
    sd = homodyne_spectrum(quadrature_spectra(w, cfg, st), refl.phi_R)
    pref = cfg.cavity.kappa * abs(refl.E_R) / (math.sqrt(s_phi) * refl.dip_depth)
    amp = gain * pref * np.sqrt(sd + _floor(cfg, detection_floor))
    return ResponseCurve(w, amp, "reflected")
