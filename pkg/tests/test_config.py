import math

import pytest

from pondera import presets, recipes
from pondera.config import MIN_POINTS_PER_GAMMA, config_from_header, parse_config
from pondera.errors import ConfigError

BASE = """\
cavity.wavelength_m = 1064e-9 m
cavity.length_m = 0.57e-3 m
cavity.finesse = 57000
cavity.eta = 0.5
mech.freq_hz = 128961 Hz
mech.quality = 16000
mech.mass_kg = 1.35e-7 kg
drive.power_w = 1e-3
"""


def test_device_recipe_matches_preset():
    run = parse_config(recipes.read("device_sec4.cfg"), "validate")
    ref = presets.device()
    s = run.system
    assert s.cavity == ref.cavity
    assert s.mech == ref.mech
    assert s.drive.power == ref.drive.power and s.drive.detuning == 0
    assert s.g0 == ref.g0
    assert s.mech.omega_m == 2 * math.pi * 128961.0


def test_missing_noise_defaults_to_zero():
    run = parse_config(BASE)
    n = run.system.noise
    assert n.freq_noise == 0 and n.ampl_noise == 0 and n.detection_floor == 0 and n.phase_jitter == 0
    assert "noise.freq_hz2" in run.defaulted
    assert run.system.mech.temperature == 0


def test_bad_value_reports_line():
    text = BASE.replace("cavity.finesse = 57000", "cavity.finesse = -1")
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    assert exc.value.line == 3 and "line 3" in str(exc.value)


@pytest.mark.parametrize("extra, line, words", [
    ("cavity.colour = red", 9, "unknown key"),
    ("drive.power_w = 2e-3", 9, "repeated"),
    ("mech.temperature_k = 4 Hz", 9, "does not match"),
    ("sweep.detunings_kappa = linspace(0, 1)", 9, "linspace"),
    ("noise.freq_hz2 = nan", 9, "finite"),
    ("just words", 9, "key = value"),
])
def test_rejections(extra, line, words):
    with pytest.raises(ConfigError) as exc:
        parse_config(BASE + extra + "\n")
    assert exc.value.line == line
    assert words in str(exc.value)


def test_missing_mandatory_key():
    text = BASE.replace("mech.mass_kg = 1.35e-7 kg\n", "")
    with pytest.raises(ConfigError, match="mech.mass_kg"):
        parse_config(text)


def test_lists_and_units():
    run = parse_config(BASE + "sweep.detunings_kappa = linspace(0, 0.1, 11)\nsweep.powers_w = 1e-3, 2e-3\n"
                       "noise.freq_hz2 = 300 Hz^2/Hz\n")
    assert len(run.sweeps["detunings_kappa"]) == 11
    assert run.sweeps["powers_w"] == (1e-3, 2e-3)
    assert run.system.noise.freq_psd(0.0) == pytest.approx((2 * math.pi) ** 2 * 300)


def test_resolution_is_enforced_for_dip_commands():
    coarse = BASE + "grid.start_hz = 128000\ngrid.stop_hz = 130000\ngrid.points = 101\n"
    parse_config(coarse, "spectrum")
    with pytest.raises(ConfigError, match="too coarse"):
        parse_config(coarse, "squeeze")
    gamma_hz = 128961 / 16000
    n = int(2000 / (gamma_hz / MIN_POINTS_PER_GAMMA)) + 2
    parse_config(coarse.replace("grid.points = 101", f"grid.points = {n}"), "cancel")


def test_default_grid_is_centered():
    run = parse_config(BASE)
    fm = 128961.0
    assert run.grid.start_hz < fm < run.grid.stop_hz
    assert run.grid.stop_hz - fm == pytest.approx(fm - run.grid.start_hz)
    assert "grid.start_hz" in run.defaulted


def test_canonical_round_trip():
    run = parse_config(recipes.read("fig5.cfg"), "squeeze")
    header = "".join(f"# config {line}\n" for line in run.canonical().splitlines()) + "a,b\n1,2\n"
    again = parse_config(config_from_header(header))
    assert again.canonical() == run.canonical()
    assert again.config_hash == run.config_hash
    assert again.system == run.system
    other = parse_config(recipes.read("fig5.cfg"), "squeeze", {"output.path": "x.csv"})
    assert other.config_hash == run.config_hash
