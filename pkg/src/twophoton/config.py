"""Run configuration: flat ``key = value`` files with dotted section keys.

The format is deliberately diff-friendly: one key per line, ``#`` comments,
no nesting.  Frequencies are angular (rad/s) and times are seconds unless
``units.frequency = ordinary`` is set, in which case every frequency-like
input is multiplied by 2*pi on ingestion.  Scan bounds may be given in
seconds or in units of the cavity round trip (``*_tr`` keys).

Every output file starts with the fully resolved configuration echoed as
``# key = value`` lines; feeding those lines back reproduces the run
byte for byte (same seed).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .montecarlo import DetectorModel
from .spectral import ModeComb, Shape, SpectralAmplitude

COMMANDS = ("correlation", "homscan", "fringe", "engineer", "mc")

_TWO_PI = 2.0 * math.pi

# keys carrying an angular frequency, rescaled under the ordinary convention
_FREQUENCY_KEYS = {
    "comb.mode_spacing",
    "comb.pump_frequency",
    "comb.linewidth",
    "comb.center",
    "engineering.wideband_halfwidth",
}

_COMMON_KEYS = (
    "run.command",
    "seed",
    "units.frequency",
    "comb.n_side_modes",
    "comb.mode_spacing",
    "comb.round_trip_time",
    "comb.pump_frequency",
    "comb.linewidth",
    "comb.shape",
    "comb.center",
    "comb.mode_phases",
    "comb.phase_seed",
)

_KEYS_BY_COMMAND = {
    "correlation": _COMMON_KEYS
    + (
        "scan.points",
        "scan.tau_min",
        "scan.tau_max",
        "scan.tau_min_tr",
        "scan.tau_max_tr",
        "scan.include_coherence",
    ),
    "homscan": _COMMON_KEYS
    + (
        "detector.resolution_time",
        "interferometer.mode_match",
        "interferometer.pump_phase",
        "scan.points",
        "scan.delay_min",
        "scan.delay_max",
        "scan.delay_min_tr",
        "scan.delay_max_tr",
        "scan.dithered",
        "output.delay_to_mm",
    ),
    "fringe": _COMMON_KEYS
    + (
        "detector.resolution_time",
        "interferometer.mode_match",
        "scan.points",
        "scan.delay",
        "scan.delay_tr",
        "scan.phase_min",
        "scan.phase_max",
    ),
    "engineer": _COMMON_KEYS
    + (
        "engineering.target_peak",
        "engineering.wideband_shape",
        "engineering.wideband_halfwidth",
        "engineering.optimize_width",
        "scan.points",
        "scan.tau_min",
        "scan.tau_max",
        "scan.tau_min_tr",
        "scan.tau_max_tr",
    ),
    "mc": _COMMON_KEYS
    + (
        "detector.resolution_time",
        "detector.coincidence_window",
        "detector.efficiency",
        "detector.dark_rate",
        "scan.points",
        "scan.tau_min",
        "scan.tau_max",
        "scan.tau_min_tr",
        "scan.tau_max_tr",
        "mc.n_events",
        "mc.bin_width",
        "mc.range_min",
        "mc.range_max",
        "mc.duration",
    ),
}

_KEY_RE = re.compile(r"^[a-z][a-z0-9_.]*$")


def parse_config_text(text: str) -> dict:
    """Parse the flat grammar into {key: value-string}; duplicates are errors."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not _KEY_RE.match(key):
            raise ConfigError(f"line {lineno}: malformed key {key!r}")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def parse_config_file(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read())


def config_from_output_header(path) -> dict:
    """Recover the resolved configuration echoed at the top of an output file."""
    pattern = re.compile(r"^# ([a-z][a-z0-9_.]*) = (.*)$")
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            m = pattern.match(line.rstrip("\n"))
            if m and not m.group(1).startswith("result."):
                out[m.group(1)] = m.group(2)
    return out


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


class _Resolver:
    def __init__(self, raw: dict, command: str):
        self.raw = dict(raw)
        self.command = command
        allowed = set(_KEYS_BY_COMMAND[command])
        for key in raw:
            if key not in allowed:
                raise ConfigError(f"key {key!r} is not valid for command {command!r}")
        claimed_command = self.raw.pop("run.command", command)
        if claimed_command != command:
            raise ConfigError(
                f"config was written for command {claimed_command!r}, not {command!r}"
            )
        self.ordinary = self._str("units.frequency", "angular") in ("ordinary",)

    def _take(self, key: str):
        return self.raw.pop(key, None)

    def _str(self, key: str, default: str) -> str:
        val = self._take(key)
        return default if val is None else val

    def _float(self, key: str, default: float | None) -> float | None:
        val = self._take(key)
        if val is None:
            return default
        try:
            out = float(val)
        except ValueError:
            raise ConfigError(f"{key}: expected a number, got {val!r}") from None
        if key in _FREQUENCY_KEYS and self.ordinary:
            out *= _TWO_PI
        return out

    def _int(self, key: str, default: int | None) -> int | None:
        val = self._take(key)
        if val is None:
            return default
        try:
            return int(val)
        except ValueError:
            raise ConfigError(f"{key}: expected an integer, got {val!r}") from None

    def _bool(self, key: str, default: bool) -> bool:
        val = self._take(key)
        if val is None:
            return default
        if val not in ("true", "false"):
            raise ConfigError(f"{key}: expected true or false, got {val!r}")
        return val == "true"

    def _floats(self, key: str):
        val = self._take(key)
        if val is None:
            return None
        try:
            return tuple(float(p) for p in val.split(",") if p.strip() != "")
        except ValueError:
            raise ConfigError(f"{key}: expected comma-separated numbers, got {val!r}") from None


@dataclass
class RunConfig:
    """Fully resolved run parameters for one CLI invocation."""

    command: str
    seed: int
    comb: ModeComb
    detector: DetectorModel | None = None
    mode_match: float = 1.0
    pump_phase: float = 0.0
    scan_points: int = 0
    tau_min: float = 0.0
    tau_max: float = 0.0
    include_coherence: bool = True
    delay_min: float = 0.0
    delay_max: float = 0.0
    dithered: bool = True
    delay: float = 0.0
    phase_min: float = 0.0
    phase_max: float = 0.0
    target_peak: int = 1
    wideband_shape: Shape = Shape.RECTANGULAR
    wideband_halfwidth: float = 0.0  # 0 means width-matched automatically
    optimize_width: bool = True
    mc_events: int = 0
    mc_bin_width: float = 0.0
    mc_range: tuple = (0.0, 0.0)
    mc_duration: float = 0.0  # 0 means derived from the event count
    delay_to_mm: float = 0.0
    _echo: list = field(default_factory=list, repr=False)

    def echo_lines(self) -> list:
        return [f"# {key} = {val}" for key, val in self._echo]


def resolve_config(raw: dict, command: str, seed_override: int | None = None) -> RunConfig:
    """Validate and resolve a parsed configuration for one command."""
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}")
    r = _Resolver(raw, command)
    echo = [("run.command", command)]

    seed = r._int("seed", 0)
    if seed_override is not None:
        seed = seed_override
    if seed < 0:
        raise ConfigError(f"seed: must be >= 0, got {seed}")
    echo.append(("seed", seed))
    echo.append(("units.frequency", "angular"))

    n_side = r._int("comb.n_side_modes", 10)
    spacing = r._float("comb.mode_spacing", None)
    t_r_in = r._float("comb.round_trip_time", None)
    if spacing is not None and t_r_in is not None:
        raise ConfigError("give comb.mode_spacing or comb.round_trip_time, not both")
    if spacing is None:
        spacing = _TWO_PI / (t_r_in if t_r_in is not None else 1e-12)
    pump = r._float("comb.pump_frequency", 3.54e15)
    linewidth = r._float("comb.linewidth", None)
    if linewidth is None:
        linewidth = 0.01 * spacing
    shape_name = r._str("comb.shape", "lorentzian")
    try:
        shape = Shape(shape_name)
    except ValueError:
        raise ConfigError(f"comb.shape: unknown shape {shape_name!r}") from None
    center = r._float("comb.center", 0.0)
    phases = r._floats("comb.mode_phases")
    phase_seed = r._int("comb.phase_seed", None)
    if phases is not None and phase_seed is not None:
        raise ConfigError("give comb.mode_phases or comb.phase_seed, not both")
    if phase_seed is not None:
        rng = np.random.default_rng(phase_seed)
        phases = tuple(float(p) for p in rng.uniform(0.0, _TWO_PI, 2 * n_side + 1))
    try:
        comb = ModeComb(
            n_side_modes=n_side,
            mode_spacing=spacing,
            pump_frequency=pump,
            single_mode=SpectralAmplitude(shape=shape, halfwidth=linewidth, center=center),
            mode_phases=phases if phases is not None else (),
        )
    except ValueError as exc:
        raise ConfigError(f"comb: {exc}") from None
    t_r = comb.round_trip_time
    echo.append(("comb.n_side_modes", n_side))
    echo.append(("comb.mode_spacing", spacing))
    echo.append(("comb.pump_frequency", pump))
    echo.append(("comb.linewidth", linewidth))
    echo.append(("comb.shape", shape.value))
    if center != 0.0:
        echo.append(("comb.center", center))
    if not comb.is_locked:
        echo.append(("comb.mode_phases", ",".join(repr(p) for p in comb.mode_phases)))

    cfg = RunConfig(command=command, seed=seed, comb=comb)

    def tau_pair(key_s: str, key_tr: str, default_tr: float):
        sec = r._float(key_s, None)
        in_tr = r._float(key_tr, None)
        if sec is not None and in_tr is not None:
            raise ConfigError(f"give {key_s} or {key_tr}, not both")
        if sec is None:
            sec = (in_tr if in_tr is not None else default_tr) * t_r
        return sec

    if command in ("homscan", "fringe", "mc"):
        res_time = r._float("detector.resolution_time", 1e-8)
        window = r._float("detector.coincidence_window", 1e-8)
        efficiency = r._float("detector.efficiency", 1.0)
        dark = r._float("detector.dark_rate", 0.0)
        try:
            cfg.detector = DetectorModel(
                resolution_time=res_time,
                coincidence_window=window,
                efficiency=efficiency,
                dark_rate=dark,
            )
        except ValueError as exc:
            raise ConfigError(f"detector: {exc}") from None
        echo.append(("detector.resolution_time", res_time))
        if command == "mc":
            echo.append(("detector.coincidence_window", window))
            echo.append(("detector.efficiency", efficiency))
            echo.append(("detector.dark_rate", dark))

    if command == "correlation":
        cfg.scan_points = r._int("scan.points", 4096)
        cfg.tau_min = tau_pair("scan.tau_min", "scan.tau_min_tr", -2.0)
        cfg.tau_max = tau_pair("scan.tau_max", "scan.tau_max_tr", 2.0)
        cfg.include_coherence = r._bool("scan.include_coherence", True)
        echo.append(("scan.points", cfg.scan_points))
        echo.append(("scan.tau_min", cfg.tau_min))
        echo.append(("scan.tau_max", cfg.tau_max))
        echo.append(("scan.include_coherence", cfg.include_coherence))
    elif command == "homscan":
        cfg.mode_match = r._float("interferometer.mode_match", 1.0)
        cfg.pump_phase = r._float("interferometer.pump_phase", 0.0)
        cfg.scan_points = r._int("scan.points", 261)
        cfg.delay_min = tau_pair("scan.delay_min", "scan.delay_min_tr", 0.0)
        cfg.delay_max = tau_pair("scan.delay_max", "scan.delay_max_tr", 1.3)
        cfg.dithered = r._bool("scan.dithered", True)
        cfg.delay_to_mm = r._float("output.delay_to_mm", 0.0)
        echo.append(("interferometer.mode_match", cfg.mode_match))
        echo.append(("interferometer.pump_phase", cfg.pump_phase))
        echo.append(("scan.points", cfg.scan_points))
        echo.append(("scan.delay_min", cfg.delay_min))
        echo.append(("scan.delay_max", cfg.delay_max))
        echo.append(("scan.dithered", cfg.dithered))
        if cfg.delay_to_mm != 0.0:
            echo.append(("output.delay_to_mm", cfg.delay_to_mm))
    elif command == "fringe":
        cfg.mode_match = r._float("interferometer.mode_match", 1.0)
        cfg.scan_points = r._int("scan.points", 181)
        cfg.delay = tau_pair("scan.delay", "scan.delay_tr", 1.0)
        cfg.phase_min = r._float("scan.phase_min", 0.0)
        cfg.phase_max = r._float("scan.phase_max", 4.0 * math.pi)
        echo.append(("interferometer.mode_match", cfg.mode_match))
        echo.append(("scan.points", cfg.scan_points))
        echo.append(("scan.delay", cfg.delay))
        echo.append(("scan.phase_min", cfg.phase_min))
        echo.append(("scan.phase_max", cfg.phase_max))
    elif command == "engineer":
        cfg.target_peak = r._int("engineering.target_peak", 1)
        wb_shape_name = r._str("engineering.wideband_shape", "rectangular")
        try:
            cfg.wideband_shape = Shape(wb_shape_name)
        except ValueError:
            raise ConfigError(
                f"engineering.wideband_shape: unknown shape {wb_shape_name!r}"
            ) from None
        cfg.wideband_halfwidth = r._float("engineering.wideband_halfwidth", 0.0)
        cfg.optimize_width = r._bool("engineering.optimize_width", True)
        span = abs(cfg.target_peak) + 1.5
        cfg.scan_points = r._int("scan.points", 16384)
        cfg.tau_min = tau_pair("scan.tau_min", "scan.tau_min_tr", -span)
        cfg.tau_max = tau_pair("scan.tau_max", "scan.tau_max_tr", span)
        echo.append(("engineering.target_peak", cfg.target_peak))
        echo.append(("engineering.wideband_shape", cfg.wideband_shape.value))
        echo.append(("engineering.wideband_halfwidth", cfg.wideband_halfwidth))
        echo.append(("engineering.optimize_width", cfg.optimize_width))
        echo.append(("scan.points", cfg.scan_points))
        echo.append(("scan.tau_min", cfg.tau_min))
        echo.append(("scan.tau_max", cfg.tau_max))
    elif command == "mc":
        cfg.scan_points = r._int("scan.points", 131073)
        cfg.tau_min = tau_pair("scan.tau_min", "scan.tau_min_tr", -2.0)
        cfg.tau_max = tau_pair("scan.tau_max", "scan.tau_max_tr", 2.0)
        cfg.mc_events = r._int("mc.n_events", 100000)
        bin_width = r._float("mc.bin_width", None)
        cfg.mc_bin_width = bin_width if bin_width is not None else t_r / 100.0
        pad = cfg.detector.resolution_time
        lo = r._float("mc.range_min", None)
        hi = r._float("mc.range_max", None)
        cfg.mc_range = (
            lo if lo is not None else cfg.tau_min - pad,
            hi if hi is not None else cfg.tau_max + pad,
        )
        cfg.mc_duration = r._float("mc.duration", 0.0)
        echo.append(("scan.points", cfg.scan_points))
        echo.append(("scan.tau_min", cfg.tau_min))
        echo.append(("scan.tau_max", cfg.tau_max))
        echo.append(("mc.n_events", cfg.mc_events))
        echo.append(("mc.bin_width", cfg.mc_bin_width))
        echo.append(("mc.range_min", cfg.mc_range[0]))
        echo.append(("mc.range_max", cfg.mc_range[1]))
        echo.append(("mc.duration", cfg.mc_duration))

    if r.raw:
        stray = ", ".join(sorted(r.raw))
        raise ConfigError(f"unused keys for command {command!r}: {stray}")

    _validate(cfg)
    cfg._echo = [(k, _fmt(v)) for k, v in echo]
    return cfg


def _validate(cfg: RunConfig):
    if cfg.scan_points < 2:
        raise ConfigError(f"scan.points: must be >= 2, got {cfg.scan_points}")
    if cfg.command in ("correlation", "engineer", "mc") and not cfg.tau_max > cfg.tau_min:
        raise ConfigError(f"scan.tau_max must exceed scan.tau_min, got "
                          f"{cfg.tau_min} .. {cfg.tau_max}")
    if cfg.command == "homscan":
        if not cfg.delay_max > cfg.delay_min:
            raise ConfigError("scan.delay_max must exceed scan.delay_min")
        if cfg.delay_min < 0:
            raise ConfigError(f"scan.delay_min: must be >= 0, got {cfg.delay_min}")
        if not 0.0 < cfg.mode_match <= 1.0:
            raise ConfigError(f"interferometer.mode_match: must be in (0, 1], got {cfg.mode_match}")
    if cfg.command == "fringe":
        if cfg.delay < 0:
            raise ConfigError(f"scan.delay: must be >= 0, got {cfg.delay}")
        if not cfg.phase_max > cfg.phase_min:
            raise ConfigError("scan.phase_max must exceed scan.phase_min")
        if not 0.0 < cfg.mode_match <= 1.0:
            raise ConfigError(f"interferometer.mode_match: must be in (0, 1], got {cfg.mode_match}")
    if cfg.command == "engineer":
        if cfg.wideband_halfwidth < 0:
            raise ConfigError("engineering.wideband_halfwidth: must be >= 0")
    if cfg.command == "mc":
        if cfg.mc_events < 0:
            raise ConfigError(f"mc.n_events: must be >= 0, got {cfg.mc_events}")
        if not cfg.mc_bin_width > 0:
            raise ConfigError(f"mc.bin_width: must be > 0, got {cfg.mc_bin_width}")
        if not cfg.mc_range[1] > cfg.mc_range[0]:
            raise ConfigError(f"mc.range_max must exceed mc.range_min, got {cfg.mc_range}")
        if cfg.mc_duration < 0:
            raise ConfigError(f"mc.duration: must be >= 0, got {cfg.mc_duration}")
