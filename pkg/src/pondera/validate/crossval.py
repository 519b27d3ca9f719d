"""Run both oracles against the analytic path and collect a pass/fail report."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from ..errors import UnstableError
from ..params import NoiseBudget, SystemConfig, stability_check, steady_state
from ..spectra import heisenberg_check, quadrature_spectra
from ..transfer import nu_set
from .oracle import fourier_matrix_oracle, oracle_spectra
from .sde import demod_step, expected_sampled_psd, sde_simulate
from .welch import welch_psd


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    deviation: float
    tolerance: float
    detail: str = ""
    skipped: bool = False


@dataclass
class ValidationReport:
    entries: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    def __getitem__(self, name: str) -> CheckResult:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)

    def lines(self) -> list[str]:
        out = []
        for e in self.entries:
            tag = "SKIP" if e.skipped else ("PASS" if e.passed else "FAIL")
            out.append(f"{tag} {e.name}: deviation={e.deviation:.3e} tolerance={e.tolerance:.3e} {e.detail}".rstrip())
        return out

    def to_dict(self) -> dict:
        return {"passed": self.passed, "entries": [asdict(e) for e in self.entries]}


@dataclass(frozen=True)
class ReportSpec:
    """What :func:`cross_validate` checks and how hard.

    The time-domain check compares the Welch estimate of the homodyne
    quadrature at ``td_phi`` with the expected sampled PSD over
    ``w_m +- td_band * gamma_m``; a bin fails when it is more than
    ``td_zmax`` standard errors away.
    """

    n_freq: int = 400
    seed: int = 0
    oracle_tol: float = 1e-10
    spectra_tol: float = 1e-10
    expanded_tol: float = 1e-6
    heisenberg_tol: float = 1e-10
    time_domain: bool = True
    td_periods: int = 50
    td_segment: int = 1024
    td_segments: int = 256
    td_band: float = 20.0
    td_phi: float = math.pi / 2
    td_zmax: float = 5.0


def _rel(a, b):
    return float(np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-300)))


def _freq_grid(config: SystemConfig, n: int, rng) -> np.ndarray:
    wm, gm = config.mech.omega_m, config.mech.gamma_m
    local = wm + gm * rng.uniform(-50, 50, n // 2)
    broad = rng.uniform(0, 3 * config.cavity.kappa, n - n // 2)
    return np.concatenate([local, broad])


def cross_validate(config: SystemConfig, spec: ReportSpec | None = None,
                   perturb: dict | None = None) -> ValidationReport:
    """Compare closed forms with the matrix oracle and the simulator.

    ``perturb`` is forwarded to :func:`fourier_matrix_oracle` and exists to
    test that a wrong coefficient is caught.
    """
    spec = spec or ReportSpec()
    rep = ValidationReport()
    st = steady_state(config)
    rng = np.random.default_rng(spec.seed)
    w = _freq_grid(config, spec.n_freq, rng)
    w = np.concatenate([w, -w])

    t = nu_set(w, config, st)
    o = fourier_matrix_oracle(w, config, st, perturb)
    for name in ("nu1", "nu2", "nu3", "nu4", "nuT", "c_phi"):
        ref, got = getattr(t, name), getattr(o, name)
        scale = np.abs(ref)
        if name == "c_phi":
            # difference of two terms that can nearly cancel; measure against their size
            scale = abs(st.alpha) * (np.abs(t.nu3) + np.abs(t.nu4))
        if name in ("nu2", "nu4", "nuT", "c_phi") and not np.any(scale):
            dev = float(np.max(np.abs(got)))
        elif name == "c_phi":
            dev = float(np.max(np.abs(got - ref) / scale))
        else:
            dev = _rel(got, ref)
        rep.entries.append(CheckResult(f"oracle {name}", dev < spec.oracle_tol, dev, spec.oracle_tol))
    amp = t.nu1 + t.nu2
    dev = _rel(o.amplitude, amp)
    rep.entries.append(CheckResult("oracle amplitude pathway = nu1 + nu2", dev < spec.oracle_tol, dev, spec.oracle_tol))

    wp = np.abs(w[: w.size // 2])
    b = oracle_spectra(wp, config, st, perturb)
    scale = 0.5 * (b.X.total + b.Y.total)
    for form, tol, tag in (("factored", spec.spectra_tol, ""), ("expanded", spec.expanded_tol, " (expanded)")):
        a = quadrature_spectra(wp, config, st, form=form)
        for q in ("X", "Y", "XY"):
            dev = float(np.max(np.abs(getattr(a, q).total - getattr(b, q).total) / scale))
            rep.entries.append(CheckResult(f"spectra S_{q}{tag}", dev < tol, dev, tol))

    quiet = replace(config, noise=NoiseBudget(), mech=replace(config.mech, temperature=0.0))
    margin = float(np.min(heisenberg_check(quadrature_spectra(wp, quiet, steady_state(quiet)))))
    rep.entries.append(CheckResult("heisenberg (quantum only)", margin >= -spec.heisenberg_tol,
                                   max(0.0, -margin), spec.heisenberg_tol, f"min margin {margin:.3e}"))

    if not spec.time_domain:
        return rep
    if not stability_check(config, st).is_stable:
        rep.entries.append(CheckResult("time-domain", True, 0.0, spec.td_zmax,
                                       "unstable: skipped time-domain", skipped=True))
        return rep
    try:
        wm, gm = config.mech.omega_m, config.mech.gamma_m
        dt = demod_step(wm, spec.td_periods)
        n = spec.td_segment
        dur = dt * n * (spec.td_segments + 1) / 2
        bundle = sde_simulate(config, st, dt=dt, duration=dur, seed=spec.seed)
    except UnstableError:
        rep.entries.append(CheckResult("time-domain", True, 0.0, spec.td_zmax,
                                       "unstable: skipped time-domain", skipped=True))
        return rep
    est = welch_psd(bundle.quadrature(spec.td_phi), dt, n)
    sel = np.abs(est.omega) <= spec.td_band * gm
    expect = expected_sampled_psd(est.freqs[sel], config, st, dt, wm, spec.td_phi)
    z = np.abs(est.psd[sel] - expect) / est.stderr[sel]
    rel = float(np.max(np.abs(est.psd[sel] / expect - 1)))
    rep.entries.append(CheckResult("time-domain PSD", bool(np.max(z) <= spec.td_zmax), float(np.max(z)),
                                   spec.td_zmax, f"max relative deviation {rel:.3f} over {sel.sum()} bins, "
                                   f"{est.n_segments} segments"))
    return rep
