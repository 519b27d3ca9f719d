"""Why a detuned optomechanical cavity goes blind to laser frequency noise at w_m.

Radiation pressure turns detuning noise into mirror motion, and the
motion feeds back onto the cavity field. At the bare mechanical
frequency the two paths cancel, so the output response to frequency
noise carries the factor chi_eff / chi0, which vanishes there.

Run ``python demos/01_frequency_noise_cancellation.py [--plot]``.
"""

import argparse
import math

import numpy as np

from pondera import presets
from pondera.expsignals import pdh_response_curve
from pondera.params import NoiseBudget, steady_state
from pondera.transfer import (cancellation_dip_width, cancellation_ratio, locate_cancellation_dip,
                              locate_omit_feature, optical_spring)

p = argparse.ArgumentParser()
p.add_argument("--plot", action="store_true", help="save a figure (needs matplotlib)")
args = p.parse_args()

# Room-temperature micromirror, 0.09 mW, three red detunings.
detunings = (0.0047, 0.028, 0.052)
print("cancellation ratio |chi_eff/chi0| near w_m at 0.09 mW")
for dk in detunings:
    cfg = presets.device(0.09e-3, dk)
    st = steady_state(cfg)
    dip = locate_cancellation_dip(cfg, st)
    width = cancellation_dip_width(cfg, st)
    off = (dip.omega - cfg.mech.omega_m) / cfg.mech.gamma_m
    print(f"  Delta = {dk:.4f} kappa: min {dip.value:.4f} at w_m {off:+.3f} gamma_m, "
          f"width {width / cfg.mech.gamma_m:.1f} gamma_m")

# The dip stays at w_m even though the mechanical resonance moves.
cfg = presets.device(1e-3, 0.023)
st = steady_state(cfg)
spring = optical_spring(cfg, st)
omit = locate_omit_feature(cfg, st)
gm = cfg.mech.gamma_m
print(f"\n1 mW at 0.023 kappa: spring shift {spring.omega_opt2 / (2 * cfg.mech.omega_m) / gm:.1f} gamma_m,")
print(f"  probe transmission feature ({omit.kind}) at w_m {(omit.omega - cfg.mech.omega_m) / gm:+.1f} gamma_m,")
print(f"  cancellation dip at w_m {(locate_cancellation_dip(cfg, st).omega - cfg.mech.omega_m) / gm:+.2f} gamma_m")

# What a PDH readout of the reflected phase quadrature shows.
w = 2 * math.pi * np.linspace(127461.0, 130461.0, 7501)
curves = []
for dk in detunings:
    c = presets.device(0.09e-3, dk, noise=NoiseBudget.from_hz(1e10, detection_floor=1e10))
    curves.append(pdh_response_curve(w, c))
print("\nPDH dip depths (plateau / floor):", ", ".join(f"{c.depth():.1f}" for c in curves))

if args.plot:
    import matplotlib.pyplot as plt

    fig, (a, b) = plt.subplots(1, 2, figsize=(9, 3.5))
    for dk, c in zip(detunings, curves):
        cfg = presets.device(0.09e-3, dk)
        a.plot(w / (2 * math.pi), np.abs(cancellation_ratio(w, cfg, steady_state(cfg))), label=f"{dk} kappa")
        b.plot(w / (2 * math.pi), c.amplitude)
    a.set(xlabel="f (Hz)", ylabel="|chi_eff / chi0|")
    b.set(xlabel="f (Hz)", ylabel="PDH amplitude (norm.)", yscale="log")
    a.legend()
    fig.tight_layout()
    fig.savefig("cancellation.png", dpi=120)
    print("wrote cancellation.png")
