"""Command-line front end: ``pondera <command> --config FILE``.

Each command turns a run configuration into one table. Tables are written
as CSV with a ``#`` metadata header, or as a single JSON document. All
frequencies in the output are in Hz and phases in degrees.

Exit status is 0 on success, 1 when validation fails or the operating
point is unstable, and 2 for configuration errors.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .config import COMMANDS, RunConfig, format_value, load_config
from .errors import ConfigError, ParameterError
from .expsignals import pdh_response_curve, reflected_response_curve, two_tone_pdh_curve
from .params import max_growth_rate, stability_check, steady_state, unstable_intervals
from .spectra import (_ordered_map, averaged_spectrum, detuning_phase_map, jitter_map,
                      optimal_spectrum, quadrature_spectra, squeezing_report, squeezing_threshold)
from .transfer import cancellation_ratio

SCHEMA_VERSION = 1
TWO_PI = 2 * math.pi

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


@dataclass
class Table:
    columns: list
    units: list
    rows: list
    summary: dict = field(default_factory=dict)
    status: int = EXIT_OK
    message: str = ""


class CommandFailed(Exception):
    """Operating point unsuitable for the command; maps to exit status 1."""


def _hz(w):
    return np.asarray(w) / TWO_PI


def _steady(run: RunConfig, cfg=None):
    cfg = run.system if cfg is None else cfg
    return steady_state(cfg, mode=run.get("drive.mode", "fixed"))


def _require_stable(run: RunConfig, cfg, st) -> bool:
    """Stop on an unstable operating point unless ``run.allow_unstable`` is set."""
    if stability_check(cfg, st).is_stable:
        return True
    msg = (f"operating point is unstable (detuning {st.detuning / cfg.cavity.kappa:.6g} kappa); "
           "the linearized spectra do not describe a steady state there")
    if not run.get("run.allow_unstable"):
        raise CommandFailed(msg)
    print(f"pondera: warning: {msg}", file=sys.stderr)
    return False


def _phase(run: RunConfig, cfg, st) -> float:
    deg = run.get("homodyne.phase_deg")
    if deg is not None:
        return math.radians(deg)
    mid = quadrature_spectra(np.array([cfg.mech.omega_m]), cfg, st)
    return float(optimal_spectrum(mid).phi_opt[0])


def _detunings(run: RunConfig):
    kappa = run.system.cavity.kappa
    return run.sweeps.get("detunings_kappa") or (run.system.drive.detuning / kappa,)


# -- commands ---------------------------------------------------------------

def cmd_spectrum(run: RunConfig) -> Table:
    """Homodyne spectrum with its decomposition, optionally over noise levels."""
    base = run.system
    w = run.grid.omega()
    levels = run.sweeps.get("freq_noise_hz2") or (run.get("noise.freq_hz2"),)
    ampls = run.sweeps.get("ampl_noise") or (run.get("noise.ampl"),)
    st = _steady(run)
    ok = _require_stable(run, base, st)
    phi = _phase(run, base, st)
    jit = base.noise.phase_jitter
    rows = []
    for lvl in levels:
        for am in ampls:
            cfg = base.with_noise(freq_noise=TWO_PI ** 2 * lvl, ampl_noise=am)
            dec = quadrature_spectra(w, cfg, st)
            opt = optimal_spectrum(dec)
            parts = [averaged_spectrum(dec, phi, jit, p) for p in ("total", "quan", "freq", "ampl", "ther")]
            n = w.size
            rows.append(np.column_stack([np.full(n, lvl), np.full(n, am), _hz(w),
                                         dec.X.total, dec.Y.total, dec.XY.total, *parts,
                                         opt.S_opt, np.degrees(opt.phi_opt)]))
    cols = ["freq_noise_hz2", "ampl_noise", "freq_hz", "S_X", "S_Y", "S_XY", "S_phi", "S_phi_quan",
            "S_phi_freq", "S_phi_ampl", "S_phi_ther", "S_opt", "phi_opt_deg"]
    units = ["Hz^2/Hz", "1/Hz", "Hz"] + ["SNU"] * 9 + ["deg"]
    return Table(cols, units, [np.vstack(rows)], {"phase_deg": math.degrees(phi),
                                                  "phase_jitter_deg": math.degrees(jit), "stable": ok})


def _cancel_curve(run: RunConfig, cfg, st, w):
    kind = run.get("cancel.curve")
    inj = run.get("cancel.injected_freq_hz2")
    fn = None if inj is None else TWO_PI ** 2 * inj
    if kind == "ratio":
        return np.abs(cancellation_ratio(w, cfg, st))
    if kind == "pdh":
        return pdh_response_curve(w, cfg, st, freq_noise=fn).amplitude
    if kind == "reflected":
        return reflected_response_curve(w, cfg, st, freq_noise=fn).amplitude
    raise AssertionError(kind)


def cmd_cancel(run: RunConfig) -> Table:
    """Cancellation ratio or normalized response curves over detunings and powers."""
    base = run.system
    kappa, gm = base.cavity.kappa, base.mech.gamma_m
    w = run.grid.omega()
    n = w.size
    kind = run.get("cancel.curve")
    summary = {"curve": kind}
    if kind == "two-tone":
        for key in ("pump.power_w", "pump.detuning_kappa"):
            if run.get(key) is None:
                raise ConfigError(f"cancel.curve = two-tone needs {key}")
        pump = base.with_drive(power=run.get("pump.power_w")).with_detuning(run.get("pump.detuning_kappa") * kappa)
        pst = _steady(run, pump)
        _require_stable(run, pump, pst)
        inj = run.get("cancel.injected_freq_hz2")
        fn = None if inj is None else TWO_PI ** 2 * inj
        amp = two_tone_pdh_curve(w, base, pump, pst, freq_noise=fn).amplitude
        ratio = np.abs(cancellation_ratio(w, pump, pst))
        cases = [(run.get("pump.detuning_kappa"), run.get("pump.power_w"), ratio, amp, True)]
    else:
        powers = run.sweeps.get("powers_w") or (base.drive.power,)
        grid = [(d, p) for p in powers for d in _detunings(run)]

        def one(item):
            d, p = item
            cfg = base.with_drive(power=p).with_detuning(d * kappa)
            st = _steady(run, cfg)
            ok = stability_check(cfg, st).is_stable
            return d, p, np.abs(cancellation_ratio(w, cfg, st)), _cancel_curve(run, cfg, st, w), ok

        try:
            cases = _ordered_map(one, grid, None)
        except ParameterError as exc:
            raise CommandFailed(str(exc)) from None
    rows, dips, depths, offsets = [], [], [], []
    for d, p, ratio, amp, ok in cases:
        rows.append(np.column_stack([np.full(n, d), np.full(n, p), _hz(w), ratio, amp, np.full(n, float(ok))]))
        i = int(np.argmin(amp))
        dips.append(float(_hz(w[i])))
        depths.append(float(0.5 * (amp[0] + amp[-1]) / amp[i]))
        offsets.append(float((w[int(np.argmin(ratio))] - base.mech.omega_m) / gm))
    summary.update(dip_freq_hz=dips, depth=depths, ratio_min_offset_gamma=offsets)
    cols = ["detuning_kappa", "power_w", "freq_hz", "ratio_abs", "response", "stable"]
    units = ["1", "W", "Hz", "1", "1", "bool"]
    return Table(cols, units, rows, summary)


def cmd_map(run: RunConfig) -> Table:
    base = run.system
    kappa = base.cavity.kappa
    if run.get("map.kind") == "detuning-phase":
        det = run.sweeps.get("detunings_kappa")
        if not det:
            raise ConfigError("map needs sweep.detunings_kappa")
        phases = run.sweeps.get("phases_deg") or tuple(np.linspace(0.0, 180.0, 181))
        pm = detuning_phase_map(np.asarray(det) * kappa, np.radians(phases), base)
        rows = []
        for i, d in enumerate(det):
            k = len(phases)
            rows.append(np.column_stack([np.full(k, d), phases, pm.values[i], np.full(k, float(pm.stable[i]))]))
        widths = [math.degrees(pm.region_width(i)) for i in range(len(det))]
        return Table(["detuning_kappa", "phase_deg", "S_phi", "stable"], ["1", "deg", "SNU", "bool"], rows,
                     {"freq_hz": base.mech.omega_m / TWO_PI, "sub_unity_width_deg": widths,
                      "stable": [bool(s) for s in pm.stable]})
    jit = run.sweeps.get("jitters_deg")
    if not jit:
        raise ConfigError("map.kind = jitter needs sweep.jitters_deg")
    st = _steady(run)
    ok = _require_stable(run, base, st)
    w = run.grid.omega()
    phi = _phase(run, base, st)
    vals = jitter_map(w, np.radians(jit), base, st, phi)
    rows = [np.column_stack([np.full(w.size, j), _hz(w), v]) for j, v in zip(jit, vals)]
    thr = squeezing_threshold(w, base, st, phi)
    return Table(["jitter_deg", "freq_hz", "S_phi"], ["deg", "Hz", "SNU"], rows,
                 {"phase_deg": math.degrees(phi), "threshold_jitter_deg": math.degrees(thr), "stable": ok})


def cmd_squeeze(run: RunConfig) -> Table:
    cfg = run.system
    st = _steady(run)
    ok = _require_stable(run, cfg, st)
    w = run.grid.omega()
    phi = _phase(run, cfg, st)
    rep = squeezing_report(w, cfg, st, phi, cfg.noise.phase_jitter)
    fm = cfg.mech.omega_m
    band = rep.band_containing(fm)
    summary = {
        "phase_deg": math.degrees(rep.phi),
        "min_db": rep.min_db,
        "min_value": rep.min_value,
        "min_freq_hz": rep.min_omega / TWO_PI,
        "bands_hz": [[lo / TWO_PI, hi / TWO_PI] for lo, hi in rep.bands],
        "band_contains_fm": band is not None,
        "stable": ok,
    }
    rows = [np.column_stack([_hz(w), rep.spectrum, 10 * np.log10(rep.spectrum), np.degrees(rep.phi_opt)])]
    return Table(["freq_hz", "S_phi", "S_phi_db", "phi_opt_deg"], ["Hz", "SNU", "dB", "deg"], rows, summary)


def cmd_stability(run: RunConfig) -> Table:
    base = run.system
    kappa = base.cavity.kappa
    det = run.sweeps.get("detunings_kappa")
    if not det:
        raise ConfigError("stability needs sweep.detunings_kappa")
    powers = run.sweeps.get("powers_w") or (base.drive.power,)
    rows, intervals = [], []
    d = np.asarray(det) * kappa
    for p in powers:
        cfg = base.with_drive(power=p)
        rates = np.array(_ordered_map(lambda x: max_growth_rate(cfg, float(x)), d, None))
        rows.append(np.column_stack([np.full(d.size, p), det, rates, (rates < 0).astype(float)]))
        intervals.append([[lo / kappa, hi / kappa] for lo, hi in unstable_intervals(cfg, d)])
    return Table(["power_w", "detuning_kappa", "max_re_rad_s", "stable"], ["W", "1", "rad/s", "bool"], rows,
                 {"unstable_intervals_kappa": intervals})


def cmd_validate(run: RunConfig) -> Table:
    from .validate.crossval import ReportSpec, cross_validate

    spec = ReportSpec(n_freq=run.get("validate.points"), seed=run.seed,
                      time_domain=run.get("validate.time_domain"))
    rep = cross_validate(run.system, spec)
    rows = [[e.name, "PASS" if e.passed and not e.skipped else ("SKIP" if e.skipped else "FAIL"),
             e.deviation, e.tolerance] for e in rep.entries]
    status = EXIT_OK if rep.passed else EXIT_FAIL
    return Table(["check", "result", "deviation", "tolerance"], ["", "", "1", "1"], [rows],
                 {"passed": rep.passed}, status, "\n".join(rep.lines()))


DISPATCH = {"spectrum": cmd_spectrum, "cancel": cmd_cancel, "map": cmd_map, "squeeze": cmd_squeeze,
            "stability": cmd_stability, "validate": cmd_validate}


def run_command(run: RunConfig) -> Table:
    """Execute the command of ``run`` and return its table.

    An unsuitable operating point gives a table with status 1 and no rows.
    """
    try:
        return DISPATCH[run.command](run)
    except CommandFailed as exc:
        return Table([], [], [], status=EXIT_FAIL, message=str(exc))


# -- output -----------------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    x = float(x)
    return "nan" if math.isnan(x) else f"{x:.12e}"


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, str):
        return x
    x = float(x)
    return None if not math.isfinite(x) else float(f"{x:.12e}")


def _iter_rows(table: Table):
    for block in table.rows:
        for row in block:
            yield row


def render(run: RunConfig, table: Table, fmt: str) -> str:
    """Serialize a table with its metadata. No timestamps are written, so
    identical inputs give identical bytes."""
    schema = f"{run.command}/{SCHEMA_VERSION}"
    if fmt == "json":
        doc = {
            "tool": "pondera", "version": __version__, "schema": schema,
            "config_hash": run.config_hash,
            "config": {k: format_value(v) for k, v in sorted(run.values.items())
                       if k not in ("output.path", "output.format")},
            "defaulted": [k for k in run.defaulted if k != "output.format"],
            "columns": table.columns, "units": table.units,
            "data": [[_jsonable(v) for v in row] for row in _iter_rows(table)],
            "summary": _jsonable(table.summary),
        }
        return json.dumps(doc, indent=1) + "\n"
    buf = io.StringIO()
    buf.write(f"# pondera {__version__}\n# schema {schema}\n# config_hash {run.config_hash}\n")
    for line in run.canonical().splitlines():
        buf.write(f"# config {line}\n")
    buf.write(f"# defaulted {', '.join(k for k in run.defaulted if k != 'output.format')}\n")
    buf.write(f"# units {','.join(table.units)}\n")
    for k, v in table.summary.items():
        buf.write(f"# summary {k} = {json.dumps(_jsonable(v))}\n")
    buf.write(",".join(table.columns) + "\n")
    for row in _iter_rows(table):
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    return buf.getvalue()


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pondera", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"pondera {__version__}")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, help="run configuration file")
    p.add_argument("--out", help="output path (default: standard output)")
    p.add_argument("--format", choices=("csv", "json"), help="output format (default from config, else csv)")
    p.add_argument("--seed", type=int, help="random seed for the time-domain check")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {}
    if args.format:
        overrides["output.format"] = args.format
    if args.seed is not None:
        overrides["run.seed"] = args.seed
    if args.out:
        overrides["output.path"] = args.out
    try:
        run = load_config(args.config, args.command, overrides)
        table = run_command(run)
    except ConfigError as exc:
        print(f"pondera: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if table.message:
        print(table.message, file=sys.stderr)
    if not table.columns:
        return table.status
    text = render(run, table, run.out_format)
    if run.out_path:
        with open(run.out_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        try:
            sys.stdout.write(text)
            sys.stdout.flush()
        except BrokenPipeError:
            # reader went away (e.g. piped into head); keep the exit status
            os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
    return table.status


if __name__ == "__main__":
    sys.exit(main())
