"""Line-oriented run configuration.

A configuration is plain text made of ``key = value`` lines. Everything
after ``#`` is a comment and keys are dotted, ``section.name``. A value may
carry a trailing unit token, which must then match the unit of the key::

    cavity.length_m = 0.57e-3 m
    mech.freq_hz = 128961
    sweep.detunings_kappa = 0.0047, 0.028, 0.052
    sweep.phases_deg = linspace(0, 180, 361)

Frequencies are in Hz in the file and are converted to angular units when
the physical configuration is built. Every key that was not given is
filled with its default and reported in ``RunConfig.defaulted``.
"""

from __future__ import annotations

import hashlib
import math
import re
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .errors import ConfigError, ParameterError
from .params import (LaserDrive, MechanicalMode, NoiseBudget, OpticalCavity, SystemConfig,
                     derive_cavity_rates, single_photon_coupling)

COMMANDS = ("spectrum", "cancel", "map", "squeeze", "stability", "validate")

# points per mechanical linewidth required by commands that resolve a dip or band
MIN_POINTS_PER_GAMMA = 20


@dataclass(frozen=True)
class Key:
    kind: str
    unit: str = ""
    default: Any = None
    check: Callable[[Any], bool] | None = None
    rule: str = ""
    choices: tuple = ()


def _pos(x):
    return x > 0


def _nonneg(x):
    return x >= 0


def _all_nonneg(xs):
    return all(x >= 0 for x in xs)


# kinds: float, int, str, bool, list  (None default means optional with no value)
SCHEMA: dict[str, Key] = {
    "run.command": Key("str", choices=COMMANDS),
    "run.allow_unstable": Key("bool", default=False),
    "run.seed": Key("int", default=0, check=_nonneg, rule="must be >= 0"),
    "output.format": Key("str", default="csv", choices=("csv", "json")),
    "output.path": Key("str"),

    "cavity.wavelength_m": Key("float", "m", check=_pos, rule="must be > 0"),
    "cavity.length_m": Key("float", "m", check=_pos, rule="must be > 0"),
    "cavity.finesse": Key("float", check=_pos, rule="must be > 0"),
    "cavity.eta": Key("float", check=lambda x: 0 <= x <= 1, rule="must lie in [0, 1]"),
    "cavity.kappa1_hz": Key("float", "Hz", check=_nonneg, rule="must be >= 0"),
    "cavity.kappa2_hz": Key("float", "Hz", check=_nonneg, rule="must be >= 0"),

    "mech.freq_hz": Key("float", "Hz", check=_pos, rule="must be > 0"),
    "mech.quality": Key("float", check=_pos, rule="must be > 0"),
    "mech.mass_kg": Key("float", "kg", check=_pos, rule="must be > 0"),
    "mech.temperature_k": Key("float", "K", default=0.0, check=_nonneg, rule="must be >= 0"),

    "drive.power_w": Key("float", "W", check=_nonneg, rule="must be >= 0"),
    "drive.detuning_kappa": Key("float"),
    "drive.detuning_hz": Key("float", "Hz"),
    "drive.bare_detuning_kappa": Key("float"),
    "drive.bare_detuning_hz": Key("float", "Hz"),
    "drive.mode": Key("str", default="fixed", choices=("fixed", "self-consistent")),

    "coupling.g0_rad_s": Key("float", "rad/s", check=_nonneg, rule="must be >= 0"),

    "noise.freq_hz2": Key("float", "Hz^2/Hz", default=0.0, check=_nonneg, rule="must be >= 0"),
    "noise.ampl": Key("float", "1/Hz", default=0.0, check=_nonneg, rule="must be >= 0"),
    "noise.detection_floor": Key("float", default=0.0, check=_nonneg, rule="must be >= 0"),
    "noise.phase_jitter_deg": Key("float", "deg", default=0.0, check=_nonneg, rule="must be >= 0"),

    "grid.start_hz": Key("float", "Hz", check=_nonneg, rule="must be >= 0"),
    "grid.stop_hz": Key("float", "Hz", check=_pos, rule="must be > 0"),
    "grid.points": Key("int", default=2001, check=lambda n: n >= 2, rule="must be >= 2"),
    "grid.scale": Key("str", default="linear", choices=("linear", "log")),
    "grid.span_gamma": Key("float", default=50.0, check=_pos, rule="must be > 0"),

    "sweep.detunings_kappa": Key("list"),
    "sweep.phases_deg": Key("list"),
    "sweep.powers_w": Key("list", "W", check=_all_nonneg, rule="entries must be >= 0"),
    "sweep.jitters_deg": Key("list", "deg", check=_all_nonneg, rule="entries must be >= 0"),
    "sweep.freq_noise_hz2": Key("list", "Hz^2/Hz", check=_all_nonneg, rule="entries must be >= 0"),
    "sweep.ampl_noise": Key("list", "1/Hz", check=_all_nonneg, rule="entries must be >= 0"),

    "homodyne.phase_deg": Key("float", "deg"),

    "cancel.curve": Key("str", default="ratio", choices=("ratio", "pdh", "reflected", "two-tone")),
    "cancel.injected_freq_hz2": Key("float", "Hz^2/Hz", check=_pos, rule="must be > 0"),
    "pump.power_w": Key("float", "W", check=_nonneg, rule="must be >= 0"),
    "pump.detuning_kappa": Key("float"),

    "map.kind": Key("str", default="detuning-phase", choices=("detuning-phase", "jitter")),

    "validate.time_domain": Key("bool", default=True),
    "validate.points": Key("int", default=400, check=lambda n: n >= 2, rule="must be >= 2"),
}

MANDATORY = ("cavity.wavelength_m", "cavity.length_m", "mech.freq_hz", "mech.quality",
             "mech.mass_kg", "drive.power_w")

_UNIT_ALIASES = {"hz": "Hz", "rad/s": "rad/s", "hz^2/hz": "Hz^2/Hz", "hz2/hz": "Hz^2/Hz"}
_LINSPACE = re.compile(r"^(linspace|logspace)\(([^)]*)\)$")


@dataclass(frozen=True)
class GridSpec:
    start_hz: float
    stop_hz: float
    points: int
    scale: str = "linear"

    def hz(self) -> np.ndarray:
        if self.scale == "log":
            return np.geomspace(self.start_hz, self.stop_hz, self.points)
        return np.linspace(self.start_hz, self.stop_hz, self.points)

    def omega(self) -> np.ndarray:
        return 2 * np.pi * self.hz()


_OUTPUT_KEYS = ("output.path", "output.format")


@dataclass(frozen=True)
class RunConfig:
    """Validated run description.

    ``values`` holds every schema key that has a value, given or
    defaulted, and ``defaulted`` lists the ones that came from defaults.
    ``lines`` maps each given key to its line number in the source.
    """

    system: SystemConfig
    command: str | None
    grid: GridSpec
    out_path: str | None
    out_format: str
    sweeps: dict
    seed: int
    values: dict = field(default_factory=dict)
    defaulted: tuple = ()
    lines: dict = field(default_factory=dict)

    def get(self, key: str, default=None):
        v = self.values.get(key)
        return default if v is None else v

    def canonical(self) -> str:
        """Resolved configuration as re-parseable text, one key per line.

        ``output.path`` and ``output.format`` are left out so the text and
        its hash describe the computation only.
        """
        items = sorted((k, v) for k, v in self.values.items() if k not in _OUTPUT_KEYS)
        return "\n".join(f"{k} = {format_value(v)}" for k, v in items) + "\n"

    @property
    def config_hash(self) -> str:
        return "sha256:" + hashlib.sha256(self.canonical().encode()).hexdigest()


def format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return ", ".join(format_value(float(x)) for x in v)
    return str(v)


def _number(text: str, line: int, key: str) -> float:
    try:
        x = float(text)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {text!r}", line) from None
    if not math.isfinite(x):
        raise ConfigError(f"{key}: value must be finite", line)
    return x


def _split_unit(text: str, spec: Key, key: str, line: int) -> str:
    parts = text.rsplit(None, 1)
    if len(parts) == 2 and spec.kind in ("float", "int"):
        try:
            float(parts[1])
        except ValueError:
            unit = _UNIT_ALIASES.get(parts[1].lower(), parts[1])
            if unit != spec.unit:
                expected = spec.unit or "dimensionless"
                raise ConfigError(f"{key}: unit {parts[1]!r} does not match {expected}", line) from None
            return parts[0]
    return text


def _parse_list(text: str, key: str, line: int) -> list[float]:
    m = _LINSPACE.match(text.replace(" ", ""))
    if m:
        args = m.group(2).split(",")
        if len(args) != 3:
            raise ConfigError(f"{key}: {m.group(1)} takes (start, stop, count)", line)
        a, b = (_number(x, line, key) for x in args[:2])
        n = _number(args[2], line, key)
        if n != int(n) or n < 1:
            raise ConfigError(f"{key}: count must be a positive integer", line)
        if m.group(1) == "logspace":
            if a <= 0 or b <= 0:
                raise ConfigError(f"{key}: logspace bounds must be > 0", line)
            return [float(x) for x in np.geomspace(a, b, int(n))]
        return [float(x) for x in np.linspace(a, b, int(n))]
    items = [s.strip() for s in text.split(",")]
    if not all(items):
        raise ConfigError(f"{key}: empty list entry", line)
    return [_number(s, line, key) for s in items]


def _convert(key: str, spec: Key, text: str, line: int):
    if spec.kind == "list":
        x = _parse_list(text, key, line)
    elif spec.kind == "str":
        x = text
        if spec.choices and x not in spec.choices:
            raise ConfigError(f"{key}: {x!r} is not one of {', '.join(spec.choices)}", line)
    elif spec.kind == "bool":
        low = text.lower()
        if low not in ("true", "false", "yes", "no", "1", "0"):
            raise ConfigError(f"{key}: expected true or false", line)
        x = low in ("true", "yes", "1")
    else:
        x = _number(_split_unit(text, spec, key, line), line, key)
        if spec.kind == "int":
            if x != int(x):
                raise ConfigError(f"{key}: expected an integer", line)
            x = int(x)
    if spec.check is not None and not spec.check(x):
        raise ConfigError(f"{key}: {spec.rule}", line)
    return x


def _tokenize(text: str):
    for n, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"expected 'key = value', got {body!r}", n)
        key, value = (s.strip() for s in body.split("=", 1))
        if not key or not value:
            raise ConfigError("empty key or value", n)
        yield n, key, value


def _need(given: dict, lines: dict, key: str):
    if key not in given:
        last = max(lines.values()) if lines else None
        raise ConfigError(f"missing mandatory key {key}", last)
    return given[key]


def _build_system(given: dict, lines: dict) -> SystemConfig:
    def line_of(*keys):
        found = [lines[k] for k in keys if k in lines]
        return min(found) if found else None

    wl = _need(given, lines, "cavity.wavelength_m")
    length = _need(given, lines, "cavity.length_m")
    try:
        if "cavity.finesse" in given:
            if "cavity.kappa1_hz" in given or "cavity.kappa2_hz" in given:
                raise ConfigError("give either cavity.finesse with cavity.eta or the two decay rates",
                                  line_of("cavity.kappa1_hz", "cavity.kappa2_hz"))
            eta = _need(given, lines, "cavity.eta")
            cav = derive_cavity_rates(wl, length, given["cavity.finesse"], eta)
        else:
            if "cavity.eta" in given:
                raise ConfigError("cavity.eta needs cavity.finesse", lines["cavity.eta"])
            k1 = _need(given, lines, "cavity.kappa1_hz")
            k2 = _need(given, lines, "cavity.kappa2_hz")
            cav = OpticalCavity(wl, length, 2 * math.pi * k1, 2 * math.pi * k2)
        mech = MechanicalMode(2 * math.pi * _need(given, lines, "mech.freq_hz"),
                              _need(given, lines, "mech.quality"),
                              _need(given, lines, "mech.mass_kg"),
                              given.get("mech.temperature_k", 0.0))
    except ParameterError as exc:
        raise ConfigError(str(exc), line_of("cavity.finesse", "cavity.eta", "cavity.kappa1_hz",
                                            "mech.freq_hz")) from None

    mode = given.get("drive.mode", "fixed")
    direct = [k for k in ("drive.detuning_kappa", "drive.detuning_hz") if k in given]
    bare = [k for k in ("drive.bare_detuning_kappa", "drive.bare_detuning_hz") if k in given]
    if len(direct) > 1 or len(bare) > 1:
        raise ConfigError("detuning given twice", line_of(*direct[1:], *bare[1:]))
    kappa = cav.kappa
    delta = 0.0
    if direct:
        k = direct[0]
        delta = given[k] * kappa if k.endswith("kappa") else 2 * math.pi * given[k]
    bare_delta = None
    if bare:
        k = bare[0]
        bare_delta = given[k] * kappa if k.endswith("kappa") else 2 * math.pi * given[k]
    if mode == "self-consistent" and bare_delta is None:
        raise ConfigError("self-consistent mode needs drive.bare_detuning_kappa or drive.bare_detuning_hz",
                          lines.get("drive.mode"))
    if mode == "fixed" and bare:
        raise ConfigError("a bare detuning needs drive.mode = self-consistent", lines[bare[0]])
    try:
        drive = LaserDrive(_need(given, lines, "drive.power_w"), detuning=delta, bare_detuning=bare_delta)
    except ParameterError as exc:
        raise ConfigError(str(exc), lines.get("drive.power_w")) from None

    g0 = given.get("coupling.g0_rad_s")
    if g0 is None:
        g0 = single_photon_coupling(cav, mech)
    noise = NoiseBudget.from_hz(given.get("noise.freq_hz2", 0.0),
                                ampl_noise=given.get("noise.ampl", 0.0),
                                detection_floor=given.get("noise.detection_floor", 0.0),
                                phase_jitter=math.radians(given.get("noise.phase_jitter_deg", 0.0)))
    return SystemConfig(cav, mech, drive, g0, noise)


def _check_resolution(grid: GridSpec, system: SystemConfig, line):
    gamma_hz = system.mech.gamma_m / (2 * math.pi)
    f = grid.hz()
    fm = system.mech.omega_m / (2 * math.pi)
    i = int(np.clip(np.searchsorted(f, fm), 1, f.size - 1))
    step = f[i] - f[i - 1]
    if step * MIN_POINTS_PER_GAMMA > gamma_hz * (1 + 1e-9):
        raise ConfigError(f"grid too coarse near the mechanical resonance: step {step:.4g} Hz, "
                          f"need <= {gamma_hz / MIN_POINTS_PER_GAMMA:.4g} Hz "
                          f"({MIN_POINTS_PER_GAMMA} points per mechanical linewidth)", line)


def parse_config(text: str, command: str | None = None, overrides: dict | None = None) -> RunConfig:
    """Parse and validate configuration text.

    ``command`` overrides ``run.command`` and ``overrides`` maps keys to
    value text that replaces whatever the file says. Grid resolution is enforced
    only for the commands that resolve the cancellation dip or a
    squeezing band.

    Raises
    ------
    ConfigError
        On unknown or repeated keys, bad values, unit mismatches or missing
        mandatory keys. The offending line is attached.
    """
    given: dict[str, Any] = {}
    lines: dict[str, int] = {}
    for n, key, value in _tokenize(text):
        spec = SCHEMA.get(key)
        if spec is None:
            raise ConfigError(f"unknown key {key!r}", n)
        if key in given:
            raise ConfigError(f"key {key!r} repeated (first on line {lines[key]})", n)
        given[key] = _convert(key, spec, value, n)
        lines[key] = n
    for key, value in (overrides or {}).items():
        spec = SCHEMA.get(key)
        if spec is None:
            raise ConfigError(f"unknown key {key!r}")
        given[key] = _convert(key, spec, str(value), None)
    for key in MANDATORY:
        _need(given, lines, key)
    if command is not None:
        if command not in COMMANDS:
            raise ConfigError(f"unknown command {command!r}")
        given["run.command"] = command
    system = _build_system(given, lines)

    fm = system.mech.omega_m / (2 * math.pi)
    gamma_hz = system.mech.gamma_m / (2 * math.pi)
    defaults = {k: s.default for k, s in SCHEMA.items() if s.default is not None and k not in given}
    values = {**defaults, **given}
    span = values["grid.span_gamma"] * gamma_hz
    if "grid.start_hz" not in given:
        defaults["grid.start_hz"] = values["grid.start_hz"] = max(fm - span, 0.0)
    if "grid.stop_hz" not in given:
        defaults["grid.stop_hz"] = values["grid.stop_hz"] = fm + span
    grid = GridSpec(values["grid.start_hz"], values["grid.stop_hz"], values["grid.points"], values["grid.scale"])
    gline = lines.get("grid.points", lines.get("grid.start_hz"))
    if grid.stop_hz <= grid.start_hz:
        raise ConfigError("grid.stop_hz must exceed grid.start_hz", gline)
    if grid.scale == "log" and grid.start_hz <= 0:
        raise ConfigError("a log grid needs grid.start_hz > 0", gline)
    if values.get("run.command") in ("squeeze", "cancel"):
        _check_resolution(grid, system, gline)
    if "coupling.g0_rad_s" not in given:
        defaults["coupling.g0_rad_s"] = values["coupling.g0_rad_s"] = system.g0

    sweeps = {k.split(".", 1)[1]: tuple(v) for k, v in values.items() if k.startswith("sweep.")}
    return RunConfig(system=system, command=values.get("run.command"), grid=grid,
                     out_path=values.get("output.path"), out_format=values["output.format"],
                     sweeps=sweeps, seed=values["run.seed"], values=values,
                     defaulted=tuple(sorted(defaults)), lines=lines)


def load_config(path, command: str | None = None, overrides: dict | None = None) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text, command, overrides)


def config_from_header(text: str) -> str:
    """Recover the configuration embedded in a CSV output header.

    Keys listed on the ``# defaulted`` line are left out, so parsing the
    result defaults them again and reproduces the original header.
    """
    out, defaulted = [], set()
    for line in text.splitlines():
        if line.startswith("# config "):
            out.append(line[len("# config "):])
        elif line.startswith("# defaulted"):
            defaulted = {k.strip() for k in line[len("# defaulted"):].split(",") if k.strip()}
        elif not line.startswith("#"):
            break
    keep = [ln for ln in out if ln.split(" = ", 1)[0] not in defaulted]
    return "\n".join(keep) + "\n"
