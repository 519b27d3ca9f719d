"""Ready-made parameter sets for the micromirror device."""

from __future__ import annotations

import math

from .params import (LaserDrive, MechanicalMode, NoiseBudget, SystemConfig,
                     derive_cavity_rates, single_photon_coupling)

WAVELENGTH = 1064e-9
LENGTH = 0.57e-3
FINESSE = 57000.0
ETA = 0.5
FREQ_M_HZ = 128961.0
QUALITY = 16000.0
MASS = 1.35e-7
ROOM_TEMPERATURE = 300.0


def device(power: float = 0.09e-3, detuning_kappa: float = 0.0, *, quality: float = QUALITY,
           temperature: float = ROOM_TEMPERATURE, noise: NoiseBudget | None = None,
           eta: float = ETA) -> SystemConfig:
    """Room-temperature micromirror in a 0.57 mm cavity.

    ``detuning_kappa`` is the effective detuning in units of ``kappa``.
    """
    cavity = derive_cavity_rates(WAVELENGTH, LENGTH, FINESSE, eta)
    mech = MechanicalMode(2 * math.pi * FREQ_M_HZ, quality, MASS, temperature)
    drive = LaserDrive(power=power, detuning=detuning_kappa * cavity.kappa)
    return SystemConfig(cavity, mech, drive, single_photon_coupling(cavity, mech),
                        noise if noise is not None else NoiseBudget())


def cryogenic(detuning_kappa: float = 0.014, power: float = 30e-3,
              freq_noise_hz2: float = 300.0, ampl_noise: float = 0.0) -> SystemConfig:
    """Same device with Q = 1e5 at 4 K, the operating point for squeezing."""
    noise = NoiseBudget.from_hz(freq_noise_hz2, ampl_noise=ampl_noise)
    return device(power, detuning_kappa, quality=1e5, temperature=4.0, noise=noise)
