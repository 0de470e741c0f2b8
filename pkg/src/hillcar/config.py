"""Run configuration: one flat key = value file describing a whole run.

Nested parameter groups use dotted prefixes (plant.g_eff, kalman.q, ...).
The format round-trips: parse(serialize(c)) == c, and a snapshot written
next to a run's outputs is enough to reproduce it bit for bit.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

from .dynamics import PlantParams, TrackProfile
from .errors import ConfigError
from .perception import CameraConfig, HsvThresholds, KalmanParams
from .agents import QLearningParams


AGENTS = ("reference", "qlearning")


@dataclass(frozen=True)
class TileParams:
    """Tile-coding layout; position bounds come from the track."""

    n_tilings: int = 8
    tiles_per_dim: int = 8
    v_max: float = 300.0

    def validate(self) -> "TileParams":
        if self.n_tilings < 1 or self.tiles_per_dim < 1:
            raise ConfigError("tilings and tiles per dim must be >= 1")
        if self.v_max <= 0:
            raise ConfigError("v_max must be positive")
        return self


@dataclass(frozen=True)
class RunConfig:
    agent: str = "reference"
    episodes: int = 50
    step_cap: int = 12000
    seed: int = 0
    realtime: bool = False
    out: str = ""
    serve: bool = False
    port: int = 8080
    v_thresh: float = 50.0
    track: TrackProfile = field(default_factory=TrackProfile)
    plant: PlantParams = field(default_factory=PlantParams)
    camera: CameraConfig = field(default_factory=CameraConfig)
    thresholds: HsvThresholds = field(default_factory=HsvThresholds)
    kalman: KalmanParams = field(default_factory=KalmanParams)
    qlearn: QLearningParams = field(default_factory=QLearningParams)
    tiles: TileParams = field(default_factory=TileParams)

    def validate(self) -> "RunConfig":
        if self.agent not in AGENTS:
            raise ConfigError(f"agent must be one of {AGENTS}, got {self.agent!r}")
        if self.episodes < 1:
            raise ConfigError("episodes must be >= 1")
        if self.step_cap < 1:
            raise ConfigError("step_cap must be >= 1")
        if not 0 < self.port < 65536:
            raise ConfigError("port out of range")
        if self.v_thresh < 0:
            raise ConfigError("v_thresh must be non-negative")
        self.track.validate()
        self.plant.validate(self.track)
        self.thresholds.validate()
        self.camera.validate(self.track, self.thresholds)
        self.kalman.validate()
        self.qlearn.validate()
        self.tiles.validate()
        return self


# nested groups and their flat-key prefixes, in canonical file order
_GROUPS = (
    ("track", TrackProfile),
    ("plant", PlantParams),
    ("camera", CameraConfig),
    ("thresholds", HsvThresholds),
    ("kalman", KalmanParams),
    ("qlearn", QLearningParams),
    ("tiles", TileParams),
)
_SCALARS = ("agent", "episodes", "step_cap", "seed", "realtime", "out",
            "serve", "port", "v_thresh")


def _format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    return repr(v) if isinstance(v, float) else str(v)


def _parse_value(text: str, kind: type):
    try:
        if kind is bool:
            low = text.lower()
            if low not in ("true", "false"):
                raise ValueError(text)
            return low == "true"
        if kind is int:
            return int(text)
        if kind is float:
            return float(text)
        return text
    except ValueError:
        raise ConfigError(f"cannot parse {text!r} as {kind.__name__}") from None


def to_flat(config: RunConfig) -> dict:
    """Canonical flat mapping; key order is the serialization order."""
    flat = {}
    for name in _SCALARS:
        flat[name] = getattr(config, name)
    for prefix, _ in _GROUPS:
        group = getattr(config, prefix)
        for f in dataclasses.fields(group):
            flat[f"{prefix}.{f.name}"] = getattr(group, f.name)
    return flat


def serialize_config(config: RunConfig) -> str:
    lines = [f"{k} = {_format_value(v)}" for k, v in to_flat(config).items()]
    return "\n".join(lines) + "\n"


def _field_types() -> dict:
    types = {}
    for f in dataclasses.fields(RunConfig):
        if f.name in _SCALARS:
            types[f.name] = f.type if isinstance(f.type, type) else eval(f.type)
    for prefix, cls in _GROUPS:
        for f in dataclasses.fields(cls):
            types[f"{prefix}.{f.name}"] = f.type if isinstance(f.type, type) else eval(f.type)
    return types


_TYPES = None


def parse_flat(text: str) -> dict:
    """key = value lines -> {flat key: raw string}; # starts a comment."""
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"line {lineno}: expected key = value, got {line!r}")
        key, val = body.split("=", 1)
        raw[key.strip()] = val.strip()
    return raw


def config_from_flat(raw: dict, base: RunConfig | None = None) -> RunConfig:
    """Overlay raw string values on base (defaults when omitted) and validate."""
    global _TYPES
    if _TYPES is None:
        _TYPES = _field_types()
    base = base if base is not None else RunConfig()
    scalars = {name: getattr(base, name) for name in _SCALARS}
    groups = {
        prefix: {f.name: getattr(getattr(base, prefix), f.name)
                 for f in dataclasses.fields(cls)}
        for prefix, cls in _GROUPS
    }
    for key, text in raw.items():
        if key not in _TYPES:
            raise ConfigError(f"unknown config key {key!r}")
        value = _parse_value(text, _TYPES[key])
        if "." in key:
            prefix, name = key.split(".", 1)
            groups[prefix][name] = value
        else:
            scalars[key] = value
    kwargs = dict(scalars)
    for prefix, cls in _GROUPS:
        kwargs[prefix] = cls(**groups[prefix])
    return RunConfig(**kwargs).validate()


def load_config(path, base: RunConfig | None = None) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return config_from_flat(parse_flat(fh.read()), base)
