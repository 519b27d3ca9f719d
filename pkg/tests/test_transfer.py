import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pondera import presets
from pondera.errors import SingularityError
from pondera.params import LaserDrive, SystemConfig, steady_state
from pondera.transfer import (cancellation_dip_width, cancellation_ratio, chi0, chi_eff,
                              locate_cancellation_dip, locate_omit_feature, nu_set, omit_coefficient,
                              optical_spring, toy_model_ratio, two_tone_probe_nu)
from pondera.validate.oracle import fourier_matrix_oracle

from conftest import near_wm, rel

# chi_eff(w_m) at the cryogenic squeezing point (0.014 kappa, 30 mW), from
# 40-digit evaluation of the susceptibility formula
CHI_EFF_FIG5 = complex(-5.006939614807868e-06, 5.616721225689122e-07)


def test_chi0_limits(device):
    m = device.mech
    assert chi0(0.0, m) == pytest.approx(1 / m.omega_m, rel=1e-15)
    assert chi0(m.omega_m, m) == pytest.approx(1j * m.quality / m.omega_m, rel=1e-12)


def test_chi0_extended_precision(device):
    m = device.mech
    mp.mp.dps = 40
    wm = mp.mpf(m.omega_m)
    w = 2 * wm
    ref = complex(wm / (wm ** 2 - w ** 2 - 1j * w * wm / m.quality))
    assert complex(chi0(2 * m.omega_m, m)) == pytest.approx(ref, rel=1e-14)


def test_chi_eff_reduces_to_chi0(device):
    w = near_wm(device)
    s = steady_state(device)
    np.testing.assert_array_equal(chi_eff(w, device, s), chi0(w, device.mech))
    free = SystemConfig(device.cavity, device.mech, LaserDrive(1e-3, detuning=1e6), 0.0)
    np.testing.assert_array_equal(chi_eff(w, free, steady_state(free)), chi0(w, free.mech))


def test_chi_eff_regression(cryo):
    cfg, s = cryo
    val = complex(chi_eff(cfg.mech.omega_m, cfg, s))
    assert val == pytest.approx(CHI_EFF_FIG5, rel=1e-12)
    assert abs(val) < 1e-3 * abs(chi0(cfg.mech.omega_m, cfg.mech))


def test_chi_eff_pole_signalled(device):
    free = SystemConfig(device.cavity, device.mech.__class__(1.0, math.inf, 1.0), LaserDrive(0.0), 0.0)
    with pytest.raises(SingularityError) as err:
        chi_eff(np.array([0.5, 1.0]), free, steady_state(free))
    assert list(err.value.omega) == [1.0]


def test_perfect_mirror():
    cfg = presets.device(1e-3, 0.0, eta=0.0)
    cfg = SystemConfig(cfg.cavity, cfg.mech, cfg.drive, 0.0)
    t = nu_set(np.array([0.0]), cfg, steady_state(cfg))
    assert t.nu1[0] == pytest.approx(1.0, abs=1e-15)
    assert t.nu2[0] == 0


def _random_configs(rng, n):
    for _ in range(n):
        eta = rng.choice([0.0, 0.3, 0.5, 0.9])
        cfg = presets.device(10 ** rng.uniform(-5, -1.5), rng.uniform(-0.3, 0.3), eta=eta)
        yield cfg, steady_state(cfg)


def test_identities_everywhere():
    rng = np.random.default_rng(3)
    for cfg, s in _random_configs(rng, 20):
        w = rng.uniform(-3, 3, 200) * cfg.cavity.kappa
        t = nu_set(w, cfg, s)
        k1 = cfg.cavity.kappa1
        assert rel(t.nu3, (t.nu1 + 1) / math.sqrt(2 * k1)) < 1e-12
        np.testing.assert_allclose(t.nu4, t.nu2 / math.sqrt(2 * k1), rtol=1e-12, atol=0)


@settings(max_examples=100, deadline=None)
@given(st.floats(-2.0, 2.0), st.floats(0.0, 1.0), st.floats(-5, 5))
def test_passivity_without_coupling(dk, eta, wk):
    cfg = presets.device(1e-3, dk, eta=eta)
    cfg = SystemConfig(cfg.cavity, cfg.mech, cfg.drive, 0.0)
    s = steady_state(cfg)
    t = nu_set(np.array([wk * cfg.cavity.kappa]), cfg, s)
    assert t.nu2[0] == 0 and t.nuT[0] == 0
    total = abs(t.nu1[0]) ** 2 + 2 * cfg.cavity.kappa2 * abs(t.nu3[0]) ** 2
    assert total == pytest.approx(1.0, abs=1e-10)


def test_matches_oracle_at_reference_point(device):
    cfg = device.with_detuning(0.028 * device.cavity.kappa)
    s = steady_state(cfg)
    w = np.array([cfg.mech.omega_m])
    t, o = nu_set(w, cfg, s), fourier_matrix_oracle(w, cfg, s)
    for name in ("nu1", "nu2", "nu3", "nu4", "nuT"):
        assert rel(getattr(o, name), getattr(t, name)) < 1e-10


def test_cancellation_ratio_basics(device):
    w = near_wm(device)
    s = steady_state(device)
    np.testing.assert_allclose(cancellation_ratio(w, device, s), 1.0, rtol=0, atol=1e-15)
    cfg = device.with_detuning(0.028 * device.cavity.kappa)
    s = steady_state(cfg)
    assert abs(cancellation_ratio(cfg.mech.omega_m, cfg, s)) < 0.05
    dip = locate_cancellation_dip(cfg, s)
    assert abs(dip.omega - cfg.mech.omega_m) < cfg.mech.gamma_m


def test_c_phi_is_proportional_to_ratio(device):
    cfg = device.with_detuning(0.028 * device.cavity.kappa)
    s = steady_state(cfg)
    w = near_wm(cfg, span=10, n=401)
    t = nu_set(w, cfg, s)
    smooth = t.c_phi / cancellation_ratio(w, cfg, s)
    # the quotient carries no resonant structure across the window
    assert np.ptp(np.abs(smooth)) / np.mean(np.abs(smooth)) < 1e-4
    assert not np.any(np.diff(np.sign(np.diff(np.abs(smooth)))) != 0)


def test_dip_width_grows_with_detuning(device):
    widths = []
    for dk in (0.0047, 0.028, 0.052):
        cfg = device.with_detuning(dk * device.cavity.kappa)
        widths.append(cancellation_dip_width(cfg, steady_state(cfg)))
    assert widths[0] < widths[1] < widths[2]


def test_spring_vanishes_without_coupling(device):
    free = SystemConfig(device.cavity, device.mech, LaserDrive(1e-3, detuning=1e5), 0.0)
    sp = optical_spring(free, steady_state(free))
    assert sp.omega_opt2 == 0 and sp.gamma_opt == 0


def test_spring_signs():
    for dk in (0.01, -0.01):
        cfg = presets.device(1e-3, dk)
        sp = optical_spring(cfg, steady_state(cfg))
        assert np.sign(sp.gamma_opt) == np.sign(dk)
        # with kappa^2 + Delta^2 > w_m^2 the mode softens for positive Delta
        assert np.sign(sp.stiffness) == np.sign(dk)
        assert (sp.omega_eff < cfg.mech.omega_m) == (dk > 0)


def test_spring_approximates_exact_susceptibility():
    cfg = presets.device(1e-3, 0.023)
    s = steady_state(cfg)
    sp = optical_spring(cfg, s)
    g, wm = sp.gamma_eff, cfg.mech.omega_m
    w = np.linspace(wm - 5 * g, wm + 5 * g, 2001)
    assert rel(sp.chi_eff(w), chi_eff(w, cfg, s)) < 0.01


def test_spring_error_at_squeezing_point(cryo):
    # the spring shifts w_eff by 13 % here, so the rates frozen at w_m are
    # off by a few percent across the window (2.36 % at the edges)
    cfg, s = cryo
    sp = optical_spring(cfg, s)
    g, wm = sp.gamma_eff, cfg.mech.omega_m
    w = np.linspace(wm - 5 * g, wm + 5 * g, 2001)
    dev = rel(sp.chi_eff(w), chi_eff(w, cfg, s))
    assert dev == pytest.approx(0.023584, rel=1e-3)
    w = near_wm(cfg, 50)
    assert rel(sp.chi_eff(w), chi_eff(w, cfg, s)) < 1e-4


def test_toy_model():
    wm = 2 * math.pi * 128961.0
    assert toy_model_ratio(wm, wm, -1e9) == 0
    w = np.array([1e3, 0.5 * wm, 2 * wm])
    np.testing.assert_allclose(toy_model_ratio(w, wm, 0.0), 1.0, rtol=1e-15)
    with pytest.raises(SingularityError):
        toy_model_ratio(math.sqrt(wm ** 2 - 1e9), wm, -1e9)


def test_toy_model_matches_undamped_ratio(device):
    # undamped limit of chi_eff / chi0 with the spring susceptibility
    cfg = device.with_detuning(0.028 * device.cavity.kappa).with_mech(quality=1e30)
    s = steady_state(cfg)
    sp = optical_spring(cfg, s)
    wm = cfg.mech.omega_m
    w = wm + np.array([-300.0, -40.0, 7.0, 60.0, 500.0])
    spring_ratio = (wm ** 2 - w ** 2) / (wm ** 2 - sp.omega_opt2 - w ** 2)
    np.testing.assert_allclose(toy_model_ratio(w, wm, -sp.omega_opt2), spring_ratio, rtol=1e-12)


def test_omit_forms_agree():
    rng = np.random.default_rng(11)
    for cfg, s in _random_configs(rng, 50):
        w = rng.uniform(-3, 3, 200) * cfg.cavity.kappa
        assert rel(omit_coefficient(w, cfg, s), nu_set(w, cfg, s).nu3) < 1e-12


def test_omit_empty_cavity(device):
    free = SystemConfig(device.cavity, device.mech, LaserDrive(1e-3, detuning=2e5), 0.0)
    w = near_wm(free)
    k = free.cavity.kappa
    np.testing.assert_allclose(omit_coefficient(w, free, steady_state(free)),
                               math.sqrt(2 * free.cavity.kappa1) / (k + 1j * (2e5 - w)), rtol=1e-14)


def test_omit_feature_is_spring_shifted():
    cfg = presets.device(1e-3, 0.023)
    s = steady_state(cfg)
    sp = optical_spring(cfg, s)
    feat = locate_omit_feature(cfg, s)
    dip = locate_cancellation_dip(cfg, s)
    shift = sp.omega_opt2 / (2 * cfg.mech.omega_m)
    assert abs(dip.omega - cfg.mech.omega_m) < 0.5 * cfg.mech.gamma_m
    assert abs(abs(feat.omega - dip.omega) / shift - 1) < 0.2
    assert abs(feat.omega - sp.omega_eff) < 2 * cfg.mech.gamma_m


def test_omit_transparency_dip_when_sidebands_resolved():
    # a fast mechanical mode in a narrow cavity gives a true minimum of |nu3|
    base = presets.device(1e-3, 0.0)
    cav = base.cavity.__class__(base.cavity.wavelength, base.cavity.length, 1e5, 1e5)
    mech = base.mech.__class__(2e6, 1e4, base.mech.mass, 0.0)
    cfg = SystemConfig(cav, mech, LaserDrive(1e-4, detuning=2e6), 2.0)
    s = steady_state(cfg)
    feat = locate_omit_feature(cfg, s, halfwidth=5e4)
    assert feat.kind == "dip"


def test_two_tone_limits(device):
    w = near_wm(device)
    pump = device.with_drive(power=0.0)
    t = two_tone_probe_nu(w, pump, steady_state(pump))
    k = device.cavity.kappa
    np.testing.assert_allclose(t.nu1, ((1 - 2 * device.cavity.eta) * k + 1j * w) / (k - 1j * w))
    assert np.all(t.nu2 == 0)
    np.testing.assert_allclose(t.chi_eff, t.chi0)
    # the probe alone still reads the Brownian motion it is coupled to
    solo = device.with_detuning(0.0)
    np.testing.assert_allclose(t.nuT, nu_set(w, solo, steady_state(solo)).nuT, rtol=1e-12)
    # degenerate case: the probe is the pump, on resonance, where the
    # frequency-noise response has no back-action part
    res = device.with_detuning(0.0)
    sr = steady_state(res)
    tt = two_tone_probe_nu(w, res, sr, probe_power=res.drive.power)
    ref = nu_set(w, res, sr)
    np.testing.assert_allclose(tt.c_phi, ref.c_phi, rtol=1e-10)
