"""Physical parameters, steady state and stability of the driven cavity.

Units: every rate and frequency is angular (rad/s). Conversions from Hz
happen at the configuration boundary only.

Detuning convention: ``detuning = omega_cavity - omega_laser``, so a positive
value means the laser sits on the red side of the cavity resonance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, NamedTuple, Sequence, Union

import numpy as np
from scipy.constants import c, hbar
from scipy.optimize import brentq

from .errors import BistableError, ParameterError, UnstableError

PsdSpec = Union[float, Callable[[np.ndarray], np.ndarray], tuple]


@dataclass(frozen=True)
class OpticalCavity:
    """Single optical mode of a two-port Fabry-Perot cavity."""

    wavelength: float
    length: float
    kappa1: float
    kappa2: float
    finesse: float | None = None

    def __post_init__(self):
        if self.wavelength <= 0 or self.length <= 0:
            raise ParameterError("wavelength and length must be positive")
        if self.kappa1 < 0 or self.kappa2 < 0:
            raise ParameterError("decay rates must be non-negative")
        if self.finesse is not None:
            if not self.finesse > 0:
                raise ParameterError("finesse must be positive")
            expected = math.pi * c / (2 * self.length * self.finesse)
            if not math.isclose(self.kappa, expected, rel_tol=1e-12, abs_tol=0.0):
                raise ParameterError("decay rates inconsistent with finesse")

    @property
    def kappa(self) -> float:
        return self.kappa1 + self.kappa2

    @property
    def eta(self) -> float:
        """Fraction of the total decay going through the loss port."""
        k = self.kappa
        return self.kappa2 / k if k > 0 else 0.0

    @property
    def omega_c(self) -> float:
        return 2 * math.pi * c / self.wavelength


@dataclass(frozen=True)
class MechanicalMode:
    omega_m: float
    quality: float
    mass: float
    temperature: float = 0.0

    def __post_init__(self):
        if not (self.omega_m > 0 and self.quality > 0 and self.mass > 0):
            raise ParameterError("omega_m, quality factor and mass must be positive")
        if self.temperature < 0:
            raise ParameterError("temperature must be non-negative")

    @property
    def gamma_m(self) -> float:
        return self.omega_m / self.quality


@dataclass(frozen=True)
class LaserDrive:
    """Coherent drive of the input port.

    ``detuning`` is the effective detuning used in fixed-detuning mode;
    ``bare_detuning`` is required by the self-consistent solver.
    ``omega_laser`` defaults to ``omega_c - detuning``.
    """

    power: float
    detuning: float = 0.0
    bare_detuning: float | None = None
    omega_laser: float | None = None

    def __post_init__(self):
        if self.power < 0:
            raise ParameterError("input power must be non-negative")


def _as_psd(spec: PsdSpec) -> Callable[[np.ndarray], np.ndarray]:
    if callable(spec):
        return lambda w: np.asarray(spec(np.abs(w)), dtype=float)
    if isinstance(spec, tuple):
        grid, values = (np.asarray(a, dtype=float) for a in spec)
        if np.any(values < 0):
            raise ParameterError("tabulated PSD must be non-negative")
        return lambda w: np.interp(np.abs(w), grid, values)
    value = float(spec)
    if value < 0:
        raise ParameterError("PSD must be non-negative")
    return lambda w: np.full(np.shape(w), value)


@dataclass(frozen=True)
class NoiseBudget:
    """Technical noise sources.

    ``freq_noise`` is the detuning-noise PSD in (rad/s)^2/Hz and
    ``ampl_noise`` the amplitude-noise PSD in shot-noise units. Both accept
    a constant, a callable of angular frequency, or an ``(omega, values)``
    table. ``phase_jitter`` is the standard deviation of the local
    oscillator phase in radians.
    """

    freq_noise: PsdSpec = 0.0
    ampl_noise: PsdSpec = 0.0
    detection_floor: float = 0.0
    phase_jitter: float = 0.0
    _freq: Callable = field(init=False, repr=False, compare=False)
    _ampl: Callable = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.detection_floor < 0 or self.phase_jitter < 0:
            raise ParameterError("detection floor and phase jitter must be non-negative")
        object.__setattr__(self, "_freq", _as_psd(self.freq_noise))
        object.__setattr__(self, "_ampl", _as_psd(self.ampl_noise))

    @classmethod
    def from_hz(cls, freq_noise_hz2=0.0, **kw) -> "NoiseBudget":
        """Build from a frequency-noise level quoted as S/(2 pi)^2 in Hz^2/Hz."""
        if callable(freq_noise_hz2) or isinstance(freq_noise_hz2, tuple):
            raise ParameterError("from_hz takes a constant level")
        return cls(freq_noise=(2 * math.pi) ** 2 * float(freq_noise_hz2), **kw)

    def freq_psd(self, omega) -> np.ndarray:
        return self._freq(np.asarray(omega, dtype=float))

    def ampl_psd(self, omega) -> np.ndarray:
        return self._ampl(np.asarray(omega, dtype=float))


@dataclass(frozen=True)
class SystemConfig:
    cavity: OpticalCavity
    mech: MechanicalMode
    drive: LaserDrive
    g0: float
    noise: NoiseBudget = field(default_factory=NoiseBudget)

    @property
    def omega_laser(self) -> float:
        if self.drive.omega_laser is not None:
            return self.drive.omega_laser
        d = self.drive.bare_detuning if self.drive.bare_detuning is not None else self.drive.detuning
        return self.cavity.omega_c - d

    @property
    def drive_amplitude(self) -> float:
        """Real drive amplitude sqrt(2 kappa1 P / hbar omega_laser)."""
        return math.sqrt(2 * self.cavity.kappa1 * self.drive.power / (hbar * self.omega_laser))

    def with_drive(self, **kw) -> "SystemConfig":
        return replace(self, drive=replace(self.drive, **kw))

    def with_mech(self, **kw) -> "SystemConfig":
        return replace(self, mech=replace(self.mech, **kw))

    def with_noise(self, **kw) -> "SystemConfig":
        return replace(self, noise=replace(self.noise, **kw))

    def with_detuning(self, detuning: float) -> "SystemConfig":
        return self.with_drive(detuning=detuning)


@dataclass(frozen=True)
class SteadyState:
    """Classical operating point around which the dynamics is linearized."""

    alpha: complex
    q_s: float
    detuning: float
    g0: float
    theta: float

    @property
    def G(self) -> complex:
        return self.g0 * math.sqrt(2) * self.alpha

    @property
    def photons(self) -> float:
        return abs(self.alpha) ** 2


def derive_cavity_rates(wavelength: float, length: float, finesse: float, eta: float) -> OpticalCavity:
    """Cavity decay rates from geometry.

    ``kappa = pi c / (2 L F)`` is split as ``kappa1 = (1 - eta) kappa`` through
    the input port and ``kappa2 = eta kappa`` through losses.
    """
    if not (wavelength > 0 and length > 0 and finesse > 0):
        raise ParameterError("wavelength, length and finesse must be positive")
    if not 0 <= eta <= 1:
        raise ParameterError("eta must lie in [0, 1]")
    kappa = math.pi * c / (2 * length * finesse)
    kappa1 = (1 - eta) * kappa
    kappa2 = kappa - kappa1
    return OpticalCavity(wavelength, length, kappa1, kappa2,
                         finesse=finesse if math.isfinite(finesse) else None)


def single_photon_coupling(cavity: OpticalCavity, mech: MechanicalMode) -> float:
    """Single-photon coupling for an end mirror, ``(omega_c / L) sqrt(hbar / m omega_m)``."""
    if not (mech.mass > 0 and mech.omega_m > 0):
        raise ParameterError("mass and mechanical frequency must be positive")
    return cavity.omega_c / cavity.length * math.sqrt(hbar / (mech.mass * mech.omega_m))


def _state_from_detuning(config: SystemConfig, detuning: float) -> SteadyState:
    kappa = config.cavity.kappa
    alpha = config.drive_amplitude / complex(kappa, detuning)
    q_s = config.g0 / config.mech.omega_m * abs(alpha) ** 2
    return SteadyState(alpha=alpha, q_s=q_s, detuning=float(detuning), g0=config.g0,
                       theta=-math.atan2(detuning, kappa))


def _photon_roots(config: SystemConfig, power_scale: float = 1.0) -> np.ndarray:
    """Real positive roots of the cubic for the intracavity photon number."""
    kappa = config.cavity.kappa
    d0 = config.drive.bare_detuning / kappa
    n0 = power_scale * config.drive_amplitude ** 2 / (kappa ** 2 + config.drive.bare_detuning ** 2)
    sigma = config.g0 ** 2 / config.mech.omega_m * n0 / kappa
    if n0 == 0:
        return np.array([0.0])
    if sigma == 0:
        return np.array([n0])
    # u = n / n0 is well scaled: sigma^2 u^3 - 2 sigma d0 u^2 + (1 + d0^2) (u - 1) = 0
    u = np.roots([sigma ** 2, -2 * sigma * d0, 1 + d0 ** 2, -(1 + d0 ** 2)])
    u = np.sort(u[np.abs(u.imag) <= 1e-9 * np.maximum(1.0, np.abs(u))].real)
    u = u[u > 0]
    if u.size == 0:
        raise RuntimeError("photon-number cubic has no real positive root")
    # one Newton polish per root in the scaled variable
    f = lambda x: sigma ** 2 * x ** 3 - 2 * sigma * d0 * x ** 2 + (1 + d0 ** 2) * (x - 1)
    df = lambda x: 3 * sigma ** 2 * x ** 2 - 4 * sigma * d0 * x + (1 + d0 ** 2)
    for _ in range(2):
        step = np.where(df(u) != 0, f(u) / np.where(df(u) != 0, df(u), 1.0), 0.0)
        u = u - step
    return n0 * u


class SteadyStateRoots(NamedTuple):
    roots: tuple
    stable: tuple
    designated: int | None


def steady_state_roots(config: SystemConfig, n_steps: int = 200) -> SteadyStateRoots:
    """All self-consistent operating points, each flagged stable or not.

    The designated root is the unique stable one, or in a bistable region
    the stable root reached by ramping the input power up from zero.
    """
    if config.drive.bare_detuning is None:
        raise ParameterError("self-consistent mode needs drive.bare_detuning")
    g = config.g0 ** 2 / config.mech.omega_m
    d0 = config.drive.bare_detuning
    states = tuple(_state_from_detuning(config, d0 - g * n) for n in _photon_roots(config))
    stable = tuple(stability_check(config, s).is_stable for s in states)
    n_stable = sum(stable)
    if n_stable == 1:
        return SteadyStateRoots(states, stable, stable.index(True))
    if n_stable == 0:
        return SteadyStateRoots(states, stable, None)
    # continuation along the power ramp
    tracked = None
    for s in np.linspace(0, 1, n_steps + 1)[1:] ** 2:
        roots = _photon_roots(config, s)
        if tracked is None:
            tracked = roots[0]
            continue
        nearest = roots[np.argmin(np.abs(roots - tracked))]
        if abs(nearest - tracked) > 0.5 * max(tracked, nearest):
            return SteadyStateRoots(states, stable, None)
        tracked = nearest
    photons = np.array([s.photons for s in states])
    idx = int(np.argmin(np.abs(photons - tracked)))
    return SteadyStateRoots(states, stable, idx if stable[idx] else None)


def steady_state(config: SystemConfig, mode: str = "fixed") -> SteadyState:
    """Operating point of the driven cavity.

    ``mode="fixed"`` takes ``config.drive.detuning`` as the effective
    detuning. ``mode="self-consistent"`` starts from the bare detuning and
    includes the static radiation-pressure shift.
    """
    if mode == "fixed":
        return _state_from_detuning(config, config.drive.detuning)
    if mode != "self-consistent":
        raise ValueError(f"unknown steady-state mode {mode!r}")
    if config.drive.bare_detuning is None:
        raise ParameterError("self-consistent mode needs drive.bare_detuning")
    if config.g0 == 0:
        return _state_from_detuning(config, config.drive.bare_detuning)
    sol = steady_state_roots(config)
    if sol.designated is not None:
        return sol.roots[sol.designated]
    if sum(sol.stable) > 1:
        raise BistableError("several stable operating points; pick one from roots", sol.roots)
    raise UnstableError("no stable self-consistent operating point")


def drift_matrix(config: SystemConfig, steady: SteadyState) -> np.ndarray:
    """Real drift matrix of the linearized dynamics in (dq, dp, dX, dY).

    dX and dY are the intracavity amplitude and phase quadratures,
    ``da = (dX + i dY) / 2``.
    """
    wm, gm = config.mech.omega_m, config.mech.gamma_m
    kappa, delta = config.cavity.kappa, steady.detuning
    ar, ai = steady.alpha.real, steady.alpha.imag
    g0 = steady.g0
    return np.array([
        [0.0, wm, 0.0, 0.0],
        [-wm, -gm, g0 * ar, g0 * ai],
        [-2 * g0 * ai, 0.0, -kappa, delta],
        [2 * g0 * ar, 0.0, -delta, -kappa],
    ])


class Stability(NamedTuple):
    is_stable: bool
    eigenvalues: np.ndarray


def stability_check(config: SystemConfig, steady: SteadyState) -> Stability:
    ev = np.linalg.eigvals(drift_matrix(config, steady))
    return Stability(bool(np.all(ev.real < 0)), ev)


def max_growth_rate(config: SystemConfig, detuning: float) -> float:
    """Largest real part of the drift eigenvalues at a fixed effective detuning."""
    cfg = config.with_detuning(detuning)
    return float(np.max(stability_check(cfg, steady_state(cfg)).eigenvalues.real))


def unstable_intervals(config: SystemConfig, detunings: Sequence[float],
                       refine: bool = True) -> list[tuple[float, float]]:
    """Contiguous unstable runs along a sweep of the effective detuning.

    Each run is returned as ``(start, stop)``. Interior edges are located
    by root finding on the largest growth rate; edges at the ends of the
    sweep are the sweep limits.
    """
    d = np.asarray(detunings, dtype=float)
    rates = np.array([max_growth_rate(config, x) for x in d])
    bad = rates >= 0
    runs = []
    i = 0
    while i < len(d):
        if not bad[i]:
            i += 1
            continue
        j = i
        while j + 1 < len(d) and bad[j + 1]:
            j += 1
        lo, hi = d[i], d[j]
        if refine and i > 0:
            lo = brentq(lambda x: max_growth_rate(config, x), d[i - 1], d[i], xtol=1e-12 * abs(d[i]) + 1e-9)
        if refine and j < len(d) - 1:
            hi = brentq(lambda x: max_growth_rate(config, x), d[j], d[j + 1], xtol=1e-12 * abs(d[j]) + 1e-9)
        runs.append((float(lo), float(hi)))
        i = j + 1
    return runs


def require_stable(config: SystemConfig, steady: SteadyState) -> None:
    if not stability_check(config, steady).is_stable:
        raise UnstableError(f"operating point at detuning {steady.detuning:.6g} rad/s is unstable")
