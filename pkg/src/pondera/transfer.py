"""Mechanical susceptibilities and output transfer coefficients.

All functions are pointwise in the angular Fourier frequency ``omega`` and
broadcast over arrays. The Fourier convention is ``d/dt -> -i omega``.
Negative frequencies are handled by direct substitution; no conjugation
shortcuts are used anywhere, since ``chi_eff(-w) != conj(chi_eff(w))``
in general for complex ``G``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import SingularityError
from .params import MechanicalMode, SteadyState, SystemConfig


def _w(omega) -> np.ndarray:
    return np.asarray(omega, dtype=float)


def chi0(omega, mech: MechanicalMode):
    """Bare mechanical susceptibility ``w_m / (w_m^2 - w^2 - i w gamma_m)``."""
    w = _w(omega)
    wm = mech.omega_m
    # factored difference keeps full precision next to the resonance
    return wm / ((wm - w) * (wm + w) - 1j * w * mech.gamma_m)


def _radiation_term(w, config: SystemConfig, steady: SteadyState):
    kappa, delta = config.cavity.kappa, steady.detuning
    return abs(steady.G) ** 2 * delta * config.mech.omega_m / ((kappa - 1j * w) ** 2 + delta ** 2)


def chi_eff(omega, config: SystemConfig, steady: SteadyState):
    """Mechanical susceptibility dressed by radiation pressure.

    Raises
    ------
    SingularityError
        If ``omega`` hits a pole exactly, which can only happen on the
        instability boundary.
    """
    w = _w(omega)
    wm, gm = config.mech.omega_m, config.mech.gamma_m
    den = (wm - w) * (wm + w) - 1j * w * gm - _radiation_term(w, config, steady)
    if np.any(den == 0):
        bad = np.atleast_1d(w)[np.atleast_1d(den == 0)]
        raise SingularityError("chi_eff evaluated on a pole", omega=bad)
    return wm / den


@dataclass(frozen=True)
class TransferSet:
    """Output transfer coefficients on a frequency grid.

    ``nu1`` and ``nu2`` multiply the input-port vacuum ``a1(w)`` and
    ``a1^dag(w)``, ``nu3`` and ``nu4`` the loss-port vacuum and the
    frequency-noise term, ``nuT`` the Brownian force.
    """

    omega: np.ndarray
    nu1: np.ndarray
    nu2: np.ndarray
    nu3: np.ndarray
    nu4: np.ndarray
    nuT: np.ndarray
    chi0: np.ndarray
    chi_eff: np.ndarray
    steady: SteadyState

    @property
    def c_phi(self):
        """Output coefficient of the detuning noise, ``i (alpha nu3 - alpha* nu4)``."""
        a = self.steady.alpha
        return 1j * (a * self.nu3 - np.conj(a) * self.nu4)


def nu_set(omega, config: SystemConfig, steady: SteadyState) -> TransferSet:
    """Evaluate all five output coefficients at ``omega``."""
    w = _w(omega)
    cav = config.cavity
    kappa, k1, eta = cav.kappa, cav.kappa1, cav.eta
    delta, G = steady.detuning, steady.G
    ch0 = chi0(w, config.mech)
    ch = chi_eff(w, config, steady)
    A = kappa + 1j * (delta - w)
    B = kappa - 1j * (delta + w)
    s = math.sqrt(2 * k1)
    nu1 = ((1 - 2 * eta) * kappa - 1j * (delta - w)) / A + 1j * abs(G) ** 2 * k1 * ch / A ** 2
    nu2 = 1j * G ** 2 * k1 * ch / (A * B)
    nuT = 1j * G * math.sqrt(k1) * ch / A
    # (nu1 + 1) / s and nu2 / s with s cancelled, so k1 = 0 stays finite
    nu3 = s / A * (1 + 0.5j * abs(G) ** 2 * ch / A)
    nu4 = 0.5j * G ** 2 * s * ch / (A * B)
    return TransferSet(w, nu1, nu2, nu3, nu4, nuT, ch0, ch, steady)


def cancellation_ratio(omega, config: SystemConfig, steady: SteadyState):
    """``chi_eff / chi0``, the factor multiplying the detuning-noise response."""
    w = _w(omega)
    return chi_eff(w, config, steady) / chi0(w, config.mech)


def frequency_noise_response(omega, config: SystemConfig, steady: SteadyState):
    """Exact output coefficient ``c_phi`` of the detuning noise."""
    return nu_set(omega, config, steady).c_phi


def omit_coefficient(omega, config: SystemConfig, steady: SteadyState):
    """Probe transmission coefficient ``nu3`` in factorized form.

    ``nu3 = sqrt(2 k1) / A * (1 + i |G|^2 chi_eff / (2 A))`` with
    ``A = kappa + i (Delta - w)``.
    """
    w = _w(omega)
    kappa, k1 = config.cavity.kappa, config.cavity.kappa1
    A = kappa + 1j * (steady.detuning - w)
    ch = chi_eff(w, config, steady)
    return math.sqrt(2 * k1) / A * (1 + 0.5j * abs(steady.G) ** 2 * ch / A)


# -- optical spring ---------------------------------------------------------

@dataclass(frozen=True)
class OpticalSpring:
    """Lowest-order optical spring around ``w_m``.

    ``omega_opt2`` enters the effective resonance as
    ``w_eff^2 = w_m^2 - omega_opt2``, so a positive value softens the
    mechanical mode. ``stiffness`` is ``m * omega_opt2``.
    """

    omega_opt2: float
    gamma_opt: float
    stiffness: float
    omega_m: float
    gamma_m: float

    @property
    def omega_eff(self) -> float:
        return math.sqrt(self.omega_m ** 2 - self.omega_opt2)

    @property
    def gamma_eff(self) -> float:
        return self.gamma_m + self.gamma_opt

    @property
    def band(self) -> tuple[float, float]:
        """Frequency window where the spring form is meant to hold."""
        g = abs(self.gamma_eff)
        return (self.omega_eff - 5 * g, self.omega_eff + 5 * g)

    def chi_eff(self, omega):
        w = _w(omega)
        wm = self.omega_m
        return wm / (wm ** 2 - self.omega_opt2 - w ** 2 - 1j * w * self.gamma_eff)


def optical_spring(config: SystemConfig, steady: SteadyState) -> OpticalSpring:
    kappa, delta = config.cavity.kappa, steady.detuning
    wm, g2 = config.mech.omega_m, abs(steady.G) ** 2
    u = kappa ** 2 + delta ** 2 - wm ** 2
    den = u ** 2 + 4 * kappa ** 2 * wm ** 2
    w2 = g2 * delta * wm * u / den
    gopt = 2 * kappa * g2 * delta * wm / den
    return OpticalSpring(w2, gopt, config.mech.mass * w2, wm, config.mech.gamma_m)


def toy_model_ratio(omega, omega_m: float, spring_rate: float):
    """Undamped two-spring toy model of the cancellation.

    Parameters
    ----------
    omega : array_like
        Angular frequency.
    omega_m : float
        Bare mechanical frequency.
    spring_rate : float
        Extra spring constant per unit mass (rad^2/s^2), signed. The optical
        spring of :func:`optical_spring` corresponds to ``-omega_opt2``.

    Returns
    -------
    ``(w_m^2 - w^2) / (w_m^2 + spring_rate - w^2)``
    """
    w = _w(omega)
    den = omega_m ** 2 + spring_rate - w ** 2
    if np.any(den == 0):
        raise SingularityError("toy-model resonance", omega=np.atleast_1d(w)[np.atleast_1d(den == 0)])
    return (omega_m ** 2 - w ** 2) / den


# -- feature location -------------------------------------------------------

class Feature(NamedTuple):
    omega: float
    value: float
    kind: str


def _refine(fun, grid, i, maximize=False):
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    sign = -1.0 if maximize else 1.0
    res = minimize_scalar(lambda x: sign * fun(x), bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-9 * abs(grid[i]) + 1e-12})
    return float(res.x), float(fun(res.x))


def locate_cancellation_dip(config: SystemConfig, steady: SteadyState,
                            halfwidth: float | None = None, points: int = 4001) -> Feature:
    """Minimum of ``|chi_eff / chi0|`` near ``w_m``."""
    wm, gm = config.mech.omega_m, config.mech.gamma_m
    h = 50 * gm if halfwidth is None else halfwidth
    grid = np.linspace(wm - h, wm + h, points)
    fun = lambda x: float(np.abs(cancellation_ratio(x, config, steady)))
    i = int(np.argmin(np.abs(cancellation_ratio(grid, config, steady))))
    x, v = _refine(fun, grid, i)
    return Feature(x, v, "dip")


def cancellation_dip_width(config: SystemConfig, steady: SteadyState,
                           halfwidth: float | None = None, points: int = 20001) -> float:
    """Full width of the region around the dip where ``|chi_eff/chi0|^2 < 1/2``."""
    wm, gm = config.mech.omega_m, config.mech.gamma_m
    h = 400 * gm if halfwidth is None else halfwidth
    grid = np.linspace(wm - h, wm + h, points)
    inside = np.abs(cancellation_ratio(grid, config, steady)) ** 2 < 0.5
    if not inside.any():
        return 0.0
    i = int(np.argmin(np.abs(grid - locate_cancellation_dip(config, steady).omega)))
    if not inside[i]:
        return 0.0
    lo = i
    while lo > 0 and inside[lo - 1]:
        lo -= 1
    hi = i
    while hi < points - 1 and inside[hi + 1]:
        hi += 1
    return float(grid[hi] - grid[lo])


def locate_omit_feature(config: SystemConfig, steady: SteadyState,
                        halfwidth: float | None = None, points: int = 40001) -> Feature:
    """Interference feature of the probe coefficient ``nu3`` near ``w_m``.

    The mechanical contribution is the factor
    ``f(w) = 1 + i |G|^2 chi_eff / (2 A)`` of :func:`omit_coefficient`.
    With a resolved cavity response it produces a transparency dip in
    ``|nu3|``; when ``kappa >> w_m`` the same feature can show up as a
    peak instead. The returned ``kind`` is ``"dip"`` if ``|nu3|`` has a
    local minimum in the window and ``"peak"`` otherwise, in which case
    the location of the largest ``|f|`` is reported.
    """
    wm, gm = config.mech.omega_m, config.mech.gamma_m
    spring = optical_spring(config, steady)
    h = halfwidth if halfwidth is not None else max(50 * gm, 4 * abs(spring.omega_opt2) / wm + 50 * abs(spring.gamma_eff))
    grid = np.linspace(wm - h, wm + h, points)
    mag = np.abs(omit_coefficient(grid, config, steady))
    interior = np.flatnonzero((mag[1:-1] < mag[:-2]) & (mag[1:-1] < mag[2:])) + 1
    if interior.size:
        i = int(interior[np.argmin(mag[interior])])
        x, v = _refine(lambda x: float(np.abs(omit_coefficient(x, config, steady))), grid, i)
        return Feature(x, v, "dip")
    kappa, delta = config.cavity.kappa, steady.detuning
    g2 = abs(steady.G) ** 2

    def factor(x):
        A = kappa + 1j * (delta - x)
        return np.abs(1 + 0.5j * g2 * chi_eff(x, config, steady) / A)

    i = int(np.argmax(factor(grid)))
    x, _ = _refine(lambda x: float(factor(x)), grid, i, maximize=True)
    return Feature(x, float(np.abs(omit_coefficient(x, config, steady))), "peak")


# -- two-tone configuration -------------------------------------------------

@dataclass(frozen=True)
class ProbeTransfer:
    """Transfer coefficients of a weak resonant probe in presence of a detuned pump.

    The probe is too weak to add its own back-action, so its vacuum
    channels see the empty resonant cavity (``nu2 = nu4 = 0``). The mirror
    susceptibility is the pump-dressed ``chi_eff``. ``c_phi`` is the probe
    output response to the laser frequency noise shared by both beams.
    """

    omega: np.ndarray
    nu1: np.ndarray
    nu2: np.ndarray
    nu3: np.ndarray
    nu4: np.ndarray
    nuT: np.ndarray
    chi0: np.ndarray
    chi_eff: np.ndarray
    c_phi: np.ndarray
    alpha: float


def two_tone_probe_nu(omega, pump_config: SystemConfig, pump_steady: SteadyState,
                      probe_power: float = 0.09e-3) -> ProbeTransfer:
    """Resonant probe coefficients dressed by a detuned pump.

    The frequency noise reaches the probe output directly and through the
    mirror motion driven by the pump. The two paths combine into
    ``c_phi = i alpha_r sqrt(2 k1) / (kappa - i w) * chi_eff / chi0`` with
    ``chi_eff`` set by the pump, which vanishes at the bare ``w_m``.
    """
    w = _w(omega)
    cav = pump_config.cavity
    kappa, k1, eta = cav.kappa, cav.kappa1, cav.eta
    probe = pump_config.with_drive(power=probe_power, detuning=0.0, bare_detuning=None,
                                   omega_laser=pump_config.omega_laser)
    alpha_r = probe.drive_amplitude / kappa
    g_r = pump_config.g0 * math.sqrt(2) * alpha_r
    ch0 = chi0(w, pump_config.mech)
    ch = chi_eff(w, pump_config, pump_steady)
    A = kappa - 1j * w
    s = math.sqrt(2 * k1)
    nu1 = ((1 - 2 * eta) * kappa + 1j * w) / A
    zero = np.zeros_like(nu1)
    nuT = 1j * g_r * math.sqrt(k1) * ch / A
    c_phi = 1j * alpha_r * s / A * ch / ch0
    return ProbeTransfer(w, nu1, zero, s / A, zero, nuT, ch0, ch, c_phi, alpha_r)
