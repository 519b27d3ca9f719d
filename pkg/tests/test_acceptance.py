"""Acceptance suite: one test per criterion, each reporting PASS or FAIL.

Every test records a one-line verdict, printed at the end of the pytest
run (see ``conftest.py``) or directly when the file is run as a script.
"""

import math
import time

import numpy as np
import pytest

from pondera import presets
from pondera.expsignals import pdh_reference, pdh_response_curve, reflected_response_curve
from pondera.params import NoiseBudget, SystemConfig, stability_check, steady_state
from pondera.spectra import (averaged_spectrum, heisenberg_check, homodyne_spectrum, optimal_spectrum,
                             quadrature_spectra, squeezing_report, squeezing_threshold)
from pondera.transfer import (locate_cancellation_dip, locate_omit_feature, nu_set, optical_spring)
from pondera.validate.oracle import fourier_matrix_oracle
from pondera.validate.sde import ResonantNoise, demod_step, expected_sampled_psd, sde_simulate
from pondera.validate.welch import welch_psd

VERDICTS = {}


def report(n, ok, detail, elapsed, budget):
    within = elapsed < budget
    line = (f"{'PASS' if ok and within else 'FAIL'} criterion {n}: {detail} "
            f"[{elapsed:.2f} s, budget {budget:g} s]")
    VERDICTS[n] = line
    print(line)
    assert within, line
    assert ok, line


def _quiet(cfg):
    """Same operating point with no technical or thermal noise."""
    return SystemConfig(cfg.cavity, cfg.mech.__class__(cfg.mech.omega_m, cfg.mech.quality, cfg.mech.mass, 0.0),
                        cfg.drive, cfg.g0)


def test_criterion_1_passivity():
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    worst = 0.0
    for eta in (0.0, 0.3, 0.5, 1.0):
        base = presets.device(1e-3, 0.0, eta=eta, temperature=0.0)
        base = SystemConfig(base.cavity, base.mech, base.drive, 0.0)
        kappa = base.cavity.kappa
        for dk, wk in zip(rng.uniform(-5, 5, 100), rng.uniform(-10, 10, 100)):
            cfg = base.with_detuning(dk * kappa)
            d = quadrature_spectra(np.array([wk * kappa]), cfg, steady_state(cfg))
            worst = max(worst, abs(d.X.total[0] - 1), abs(d.Y.total[0] - 1), abs(d.XY.total[0]))
    report(1, worst < 1e-10, f"max |S - vacuum| = {worst:.2e} (tol 1e-10)", time.perf_counter() - t0, 1.0)


def _random_stable(rng):
    while True:
        P = 10 ** rng.uniform(-6, -1.5)
        cfg = presets.device(P, rng.uniform(-0.5, 2.0), eta=rng.uniform(0.0, 0.95),
                             quality=10 ** rng.uniform(3, 6))
        st = steady_state(cfg)
        if stability_check(cfg, st).is_stable:
            return cfg, st


def test_criterion_2_oracle_equivalence():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2)
    worst, n = 0.0, 10_000
    for _ in range(n):
        cfg, st = _random_stable(rng)
        wm, gm = cfg.mech.omega_m, cfg.mech.gamma_m
        w = np.array([wm + gm * rng.uniform(-20, 20), rng.uniform(-3, 3) * cfg.cavity.kappa])
        t, o = nu_set(w, cfg, st), fourier_matrix_oracle(w, cfg, st)
        for name in ("nu1", "nu2", "nu3", "nu4", "nuT"):
            a, b = getattr(t, name), getattr(o, name)
            worst = max(worst, float(np.max(np.abs(a - b) / np.abs(a))))
    report(2, worst < 1e-10, f"{n} configurations, max relative deviation {worst:.2e} (tol 1e-10)",
           time.perf_counter() - t0, 10.0)


def test_criterion_3_cancellation_dip():
    t0 = time.perf_counter()
    offsets, depths = [], []
    for dk in (0.0047, 0.028, 0.052):
        cfg = presets.device(0.09e-3, dk)
        st = steady_state(cfg)
        f = locate_cancellation_dip(cfg, st)
        offsets.append((f.omega - cfg.mech.omega_m) / cfg.mech.gamma_m)
        depths.append(1 / f.value)
    ok = all(abs(x) <= 0.5 for x in offsets) and depths[0] < depths[1] < depths[2]
    detail = ("dip offsets " + ", ".join(f"{x:+.3f}" for x in offsets) + " gamma_m; depths "
              + ", ".join(f"{d:.1f}" for d in depths))
    report(3, ok, detail, time.perf_counter() - t0, 1.0)


def test_criterion_4_omit_distinction():
    t0 = time.perf_counter()
    cfg = presets.device(1e-3, 0.023)
    st = steady_state(cfg)
    gm = cfg.mech.gamma_m
    omit = locate_omit_feature(cfg, st)
    dip = locate_cancellation_dip(cfg, st)
    spring = optical_spring(cfg, st)
    shift = dip.omega - omit.omega
    predicted = spring.omega_opt2 / (2 * cfg.mech.omega_m)
    err = abs(shift / predicted - 1)
    # kappa >> w_m here, so |nu3| shows the feature as a peak with no local minimum
    detail = (f"nu3 feature ({omit.kind}) {shift / gm:.2f} gamma_m below the cancellation dip, "
              f"predicted {predicted / gm:.2f} gamma_m, error {100 * err:.2f}% (tol 20%)")
    report(4, err < 0.2, detail, time.perf_counter() - t0, 1.0)


def test_criterion_5_optimal_phases():
    t0 = time.perf_counter()
    cases = ((0.014, 178.6, 0.3), (1e-3, 179.9, 0.2), (0.063, 173.8, 0.3))
    got, ok = [], True
    for dk, want, tol in cases:
        cfg = presets.cryogenic(dk)
        d = quadrature_spectra(np.array([cfg.mech.omega_m]), cfg, steady_state(cfg), form="factored")
        phi = math.degrees(optimal_spectrum(d).phi_opt[0])
        got.append(phi)
        ok &= abs(phi - want) <= tol
    detail = ", ".join(f"{p:.3f} deg (want {w} +- {t})" for p, (_, w, t) in zip(got, cases))
    report(5, ok, detail, time.perf_counter() - t0, 1.0)


def test_criterion_6_squeezing_depth():
    t0 = time.perf_counter()
    cfg = presets.cryogenic(0.014)
    st = steady_state(cfg)
    wm = cfg.mech.omega_m
    w = 2 * math.pi * np.linspace(128461.0, 129461.0, 16001)
    rep = squeezing_report(w, cfg, st)
    band = rep.band_containing(wm)
    ok = abs(rep.min_db + 1.0) <= 0.3 and band is not None
    detail = (f"min {rep.min_db:.3f} dB at phase {math.degrees(rep.phi):.3f} deg (want -1 +- 0.3 dB); "
              f"band {'contains' if band else 'misses'} w_m")
    report(6, ok, detail, time.perf_counter() - t0, 1.0)


def test_criterion_7_jitter_thresholds():
    t0 = time.perf_counter()
    out = []
    for dk, phi, want in ((1e-3, 179.9, 0.015), (0.063, 173.8, 1.0)):
        cfg = presets.cryogenic(dk)
        st = steady_state(cfg)
        wm, gm = cfg.mech.omega_m, cfg.mech.gamma_m
        w = np.linspace(wm - 600 * gm, wm + 600 * gm, 4001)
        th = math.degrees(squeezing_threshold(w, cfg, st, math.radians(phi)))
        out.append((th, want))
    ok = all(0.5 * want <= th <= 1.5 * want for th, want in out)
    detail = "; ".join(f"threshold {th:.4f} deg (want {want} +- 50%)" for th, want in out)
    report(7, ok, detail, time.perf_counter() - t0, 5.0)


def test_criterion_8_heisenberg():
    t0 = time.perf_counter()
    cfg = _quiet(presets.cryogenic(0.0))
    kappa, wm, gm = cfg.cavity.kappa, cfg.mech.omega_m, cfg.mech.gamma_m
    detunings = np.linspace(1e-4, 0.057, 100) * kappa
    w = np.concatenate([np.linspace(wm - 500 * gm, wm + 500 * gm, 60), np.linspace(0.01, 3, 40) * kappa])
    worst, npts = np.inf, 0
    for d in detunings:
        c = cfg.with_detuning(d)
        st = steady_state(c)
        if not stability_check(c, st).is_stable:
            continue
        npts += w.size
        worst = min(worst, float(np.min(heisenberg_check(quadrature_spectra(w, c, st, form="factored")))))
    ok = worst >= -1e-10 and npts >= 10_000
    report(8, ok, f"{npts} stable points, min S_X S_Y - S_XY^2 - 1 = {worst:.2e} (tol -1e-10)",
           time.perf_counter() - t0, 5.0)


def test_criterion_9_time_domain():
    t0 = time.perf_counter()
    base = presets.cryogenic(0.014)
    wm, gm = base.mech.omega_m, base.mech.gamma_m
    # classical frequency noise concentrated around w_m dominates the vacuum there
    cfg = base.with_noise(freq_noise=ResonantNoise((2 * math.pi) ** 2 * 7.8e5, wm, 400 * gm))
    st = steady_state(cfg)
    dt = demod_step(wm, 20)
    nseg, segments = 10240, 3000
    bundle = sde_simulate(cfg, st, dt=dt, duration=dt * nseg * (segments + 1) / 2, seed=1)
    est = welch_psd(bundle.quadrature(math.pi / 2), dt, nseg)
    sel = np.abs(est.omega) <= 20 * gm
    expect = expected_sampled_psd(est.freqs[sel], cfg, st, dt, wm, math.pi / 2)
    dev = float(np.max(np.abs(est.psd[sel] / expect - 1)))
    sim_dip = est.omega[sel][np.argmin(est.psd[sel])] / gm
    classical = float(np.min(homodyne_spectrum(quadrature_spectra(wm + est.omega[sel], cfg, st), math.pi / 2,
                                               "freq")))
    ok = est.n_segments >= 200 and dev < 0.1 and abs(sim_dip) <= 3
    detail = (f"{est.n_segments} segments, max deviation {100 * dev:.2f}% over {sel.sum()} bins (tol 10%), "
              f"dip at {sim_dip:+.2f} gamma_m (tol 3), min freq-noise term {classical:.1f} shot units")
    report(9, ok, detail, time.perf_counter() - t0, 120.0)


def test_criterion_10_figure_shapes():
    t0 = time.perf_counter()
    w = 2 * math.pi * np.linspace(127461.0, 130461.0, 7501)
    ok, notes = True, []
    for name, curve, dks, power, floor in (("PDH", pdh_response_curve, (0.0047, 0.028, 0.052), 0.09e-3, 1e10),
                                           ("reflected", reflected_response_curve, (0.0056, 0.015, 0.021),
                                            1e-3, 1e7)):
        depths = []
        for dk in dks:
            cfg = presets.device(power, dk, noise=NoiseBudget.from_hz(1e10, detection_floor=floor))
            c = curve(w, cfg)
            ok &= abs(c.dip()[0] - cfg.mech.omega_m) <= cfg.mech.gamma_m / 2
            depths.append(c.depth())
            # the floor enters additively under the square root
            c2 = curve(w, cfg, detection_floor=2 * floor)
            gap = c2.amplitude ** 2 - c.amplitude ** 2
            ok &= bool(np.allclose(gap, gap[0], rtol=1e-8)) and gap[0] > 0
        ok &= depths[0] < depths[1] < depths[2]
        notes.append(f"{name} depths " + ", ".join(f"{d:.1f}" for d in depths))
    # the PDH floor of the deepest curve is the detection floor over the reference level
    cfg = presets.device(0.09e-3, 0.052, noise=NoiseBudget.from_hz(1e10, detection_floor=1e10))
    floor_only = math.sqrt(1e10 / pdh_reference(cfg))
    dip = pdh_response_curve(w, cfg).dip()[1]
    ok &= floor_only < dip < 1.5 * floor_only
    notes.append(f"PDH dip {dip:.4f} vs floor-only {floor_only:.4f}")
    report(10, ok, "; ".join(notes), time.perf_counter() - t0, 5.0)


if __name__ == "__main__":
    import sys
    sys.exit(pytest.main([__file__, "-q"]))
