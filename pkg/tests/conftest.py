import math

import numpy as np
import pytest

from pondera import presets
from pondera.params import steady_state


@pytest.fixture
def device():
    return presets.device()


@pytest.fixture
def cryo():
    cfg = presets.cryogenic(0.014)
    return cfg, steady_state(cfg)


def near_wm(cfg, span=50.0, n=2001):
    wm, gm = cfg.mech.omega_m, cfg.mech.gamma_m
    return np.linspace(wm - span * gm, wm + span * gm, n)


def rel(a, b):
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b)) / np.maximum(np.abs(b), 1e-300)))


TWO_PI = 2 * math.pi


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.VERDICTS):
        terminalreporter.write_line(mod.VERDICTS[n])
