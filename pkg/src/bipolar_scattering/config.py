"""Run configuration: a flat TOML table of scalars and arrays.

Every key can also be given on the command line as ``--kebab-case``; flags
win over the file.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

import numpy as np

from .errors import ConfigError

CONTINUOUS = "continuous"
WAVEPACKET = "wavepacket"
MODES = (CONTINUOUS, WAVEPACKET)
SIDES = ("left", "right")


@dataclass(frozen=True)
class SimulationConfig:
    steps: tuple = ()
    values: tuple = (0.0,)
    m: float = 2000.0
    hbar: float = 1.0
    E: float | None = None
    # energy sweep; used when E is not given
    sweep_min: float | None = None
    sweep_max: float | None = None
    sweep_count: int = 0
    sweep_spacing: str = "linear"
    x_L: float | None = None  # default: first step - 1
    x_R: float | None = None  # default: last step + 1
    launch_start: float | None = None  # default: 3 a.u. beyond the incident-side monitor
    launch_end: float | None = None  # default: the incident-side monitor
    launch_points: int = 51
    mode: str = CONTINUOUS
    incident: str = "left"
    tol: float = 1e-4
    max_cycles: int = 50
    min_cycles: int = 1
    snapshot_times: tuple = ()
    plot_points: int = 0  # 0: derive from points_per_wavelength
    points_per_wavelength: int = 20
    sync: float = 1e-9
    edge_tol: float = 1e-12
    max_events: int = 200_000
    oracle: bool = False
    jobs: int = 1
    out: str = "out"
    name: str = "run"

    @property
    def is_sweep(self) -> bool:
        return self.E is None

    @property
    def monitors(self) -> tuple[float, float]:
        lo = self.steps[0] if self.steps else 0.0
        hi = self.steps[-1] if self.steps else 0.0
        x_L = self.x_L if self.x_L is not None else lo - 1.0
        x_R = self.x_R if self.x_R is not None else hi + 1.0
        return x_L, x_R

    @property
    def launch(self) -> tuple[float, float]:
        x_L, x_R = self.monitors
        if self.incident == "left":
            b = self.launch_end if self.launch_end is not None else x_L
            a = self.launch_start if self.launch_start is not None else b - 3.0
        else:
            a = self.launch_start if self.launch_start is not None else x_R
            b = self.launch_end if self.launch_end is not None else a + 3.0
        return a, b

    def energies(self) -> np.ndarray:
        if self.E is not None:
            return np.array([self.E])
        lo, hi, n = self.sweep_min, self.sweep_max, self.sweep_count
        if self.sweep_spacing == "log":
            return np.geomspace(lo, hi, n)
        return np.linspace(lo, hi, n)

    def at_energy(self, E: float) -> "SimulationConfig":
        return replace(self, E=float(E), sweep_min=None, sweep_max=None, sweep_count=0)

    def to_dict(self) -> dict:
        return asdict(self)


FIELD_TYPES = {f.name: f.type for f in fields(SimulationConfig)}
_TUPLE_KEYS = {"steps", "values", "snapshot_times"}


def _coerce(key, value):
    kind = FIELD_TYPES[key]
    try:
        if key in _TUPLE_KEYS:
            if isinstance(value, str):
                value = [v for v in value.split(",") if v.strip()]
            return tuple(float(v) for v in value)
        if value is None:
            return None
        if kind.startswith("float"):
            if isinstance(value, bool):
                raise TypeError
            return float(value)
        if kind.startswith("int"):
            if isinstance(value, bool) or float(value) != int(float(value)):
                raise TypeError
            return int(float(value))
        if kind == "bool":
            if isinstance(value, str):
                if value.lower() not in ("true", "false", "1", "0", "yes", "no"):
                    raise ValueError
                return value.lower() in ("true", "1", "yes")
            return bool(value)
        return str(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: cannot interpret {value!r} as {kind}", field=key) from None


def load_file(path) -> dict:
    """Raw key/value pairs of a TOML config; nested ``[sweep]``/``[launch]`` tables are flattened."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        with path.open("rb") as fh:
            raw = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    flat = {}
    for key, value in raw.items():
        if isinstance(value, dict):
            prefix = {"sweep": "sweep_", "launch": "launch_"}.get(key)
            if prefix is None:
                raise ConfigError(f"{path}: unknown table [{key}]", field=key)
            for sub, v in value.items():
                flat[prefix + sub] = v
        else:
            flat[key] = value
    return flat


def build_config(raw: dict, require_values: bool = True) -> SimulationConfig:
    unknown = sorted(set(raw) - set(FIELD_TYPES))
    if unknown:
        raise ConfigError(f"unknown key(s): {', '.join(unknown)}", field=unknown[0])
    if require_values and "values" not in raw:
        raise ConfigError("missing required field 'values'", field="values")
    cfg = SimulationConfig(**{k: _coerce(k, v) for k, v in raw.items()})
    validate(cfg)
    return cfg


def validate(cfg: SimulationConfig) -> None:
    def bad(key, msg):
        raise ConfigError(f"{key}: {msg}", field=key)

    if len(cfg.values) != len(cfg.steps) + 1:
        bad("values", f"need {len(cfg.steps) + 1} entries for {len(cfg.steps)} steps")
    if any(b <= a for a, b in zip(cfg.steps, cfg.steps[1:])):
        bad("steps", "must be strictly increasing")
    if cfg.m <= 0:
        bad("m", "must be positive")
    if cfg.hbar <= 0:
        bad("hbar", "must be positive")
    if not cfg.tol > 0:
        bad("tol", "must be positive")
    if cfg.mode not in MODES:
        bad("mode", f"expected one of {MODES}")
    if cfg.incident not in SIDES:
        bad("incident", f"expected one of {SIDES}")
    if cfg.incident == "right" and cfg.values[-1] == math.inf:
        bad("incident", "cannot launch from inside a hard wall")
    if cfg.launch_points < 1:
        bad("launch_points", "need at least one trajectory")
    if cfg.max_cycles < 1 or cfg.min_cycles < 1:
        bad("max_cycles", "cycle limits must be at least 1")
    if cfg.E is None:
        if cfg.sweep_min is None or cfg.sweep_max is None or cfg.sweep_count < 1:
            bad("E", "give E or a sweep (sweep_min, sweep_max, sweep_count)")
        if cfg.sweep_spacing not in ("linear", "log"):
            bad("sweep_spacing", "expected linear or log")
        if cfg.sweep_max < cfg.sweep_min:
            bad("sweep_max", "must not be below sweep_min")
        if cfg.sweep_spacing == "log" and cfg.sweep_min <= 0:
            bad("sweep_min", "log spacing needs a positive minimum")
    elif cfg.E <= 0:
        bad("E", "must be positive")
    x_L, x_R = cfg.monitors
    if cfg.steps and not (x_L < cfg.steps[0] and cfg.steps[-1] < x_R):
        bad("x_L", "monitors must bracket the steps: x_L < first step, last step < x_R")
    if not cfg.steps and not x_L < x_R:
        bad("x_L", "x_L must be below x_R")
    a, b = cfg.launch
    if not a <= b:
        bad("launch_start", "launch interval is empty")
    if cfg.incident == "left" and b > x_L:
        bad("launch_end", "launch interval must lie left of x_L")
    if cfg.incident == "right" and a < x_R:
        bad("launch_start", "launch interval must lie right of x_R")
    if any(t < 0 for t in cfg.snapshot_times):
        bad("snapshot_times", "times must be non-negative")
    if cfg.jobs < 1:
        bad("jobs", "must be at least 1")


def parse_config(path=None, overrides: dict | None = None) -> SimulationConfig:
    """Merge a config file with flag overrides (flags win) and validate.

    An override of None removes the key, e.g. ``E`` when a sweep replaces it.
    """
    raw = load_file(path) if path is not None else {}
    for key, value in (overrides or {}).items():
        if value is None:
            raw.pop(key, None)
        else:
            raw[key] = value
    return build_config(raw)


def dump_toml(cfg: SimulationConfig) -> str:
    """Round-trippable TOML text for ``cfg`` (None values are omitted)."""
    lines = []
    for key, value in cfg.to_dict().items():
        if value is None:
            continue
        if isinstance(value, (tuple, list)):
            lines.append(f"{key} = [{', '.join(_toml_float(v) for v in value)}]")
        elif isinstance(value, bool):
            lines.append(f"{key} = {'true' if value else 'false'}")
        elif isinstance(value, float):
            lines.append(f"{key} = {_toml_float(value)}")
        elif isinstance(value, int):
            lines.append(f"{key} = {value}")
        else:
            lines.append(f'{key} = "{value}"')
    return "\n".join(lines) + "\n"


def _toml_float(v: float) -> str:
    if v == math.inf:
        return "inf"
    if v == -math.inf:
        return "-inf"
    return repr(float(v))
