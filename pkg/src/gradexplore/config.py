"""Run configuration: JSON loading and validation."""

from __future__ import annotations

import json
import math
import os
from dataclasses import asdict, dataclass, field, fields
from importlib import resources

from .camera import CameraModel
from .global_planner import PlannerConfig
from .path_optimizer import ObjectiveWeights
from .view_quality import SafetyZones, SamplerConfig


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


@dataclass
class MapParams:
    rho: float = 0.3
    l_hit: float = 0.85
    l_miss: float = -0.4
    l_min: float = -2.0
    l_max: float = 3.5


@dataclass
class SensorParams:
    r_min: float = 0.3
    r_max: float = 10.0
    fov_xz: float = math.pi / 2
    fov_yz: float = 2 * math.pi / 5
    angular_resolution: float | None = None  # radians; default rho / r_max


@dataclass
class ZoneParams:
    red: list = field(default_factory=lambda: [0.6, 0.6, 0.35])
    yellow: list = field(default_factory=lambda: [1.2, 1.2, 0.7])
    lambda2: float = 0.5
    lambda3: float = 0.1


@dataclass
class SamplerParams:
    n_samples: int = 200
    headings: int = 8


@dataclass
class PlannerParams:
    step: float = 1.0
    goal_bias: float = 0.1
    max_iter: int = 5000
    d_max: float = 2.0
    retries: int = 3


@dataclass
class OptimizerParams:
    alpha: float = 5e-4
    beta: float = 0.05
    w: list = field(default_factory=lambda: [1.0, 1.0, 1.0, 0.1])
    budget: int = 30
    max_step: float | None = 0.3  # per-coordinate cap on one step (m or rad)


@dataclass
class RunParams:
    epsilon: float = 2.0
    max_iterations: int = 100


@dataclass
class RunConfig:
    scene: str = "tunnel"
    seed: int = 0
    map: MapParams = field(default_factory=MapParams)
    sensor: SensorParams = field(default_factory=SensorParams)
    zones: ZoneParams = field(default_factory=ZoneParams)
    sampler: SamplerParams = field(default_factory=SamplerParams)
    planner: PlannerParams = field(default_factory=PlannerParams)
    optimizer: OptimizerParams = field(default_factory=OptimizerParams)
    run: RunParams = field(default_factory=RunParams)
    base_dir: str = "."

    # -- derived model objects ------------------------------------------------

    def camera(self) -> CameraModel:
        s = self.sensor
        return CameraModel(s.r_min, s.r_max, s.fov_xz, s.fov_yz)

    def safety_zones(self) -> SafetyZones:
        z = self.zones
        return SafetyZones(tuple(z.red), tuple(z.yellow), z.lambda2, z.lambda3)

    def sampler_config(self) -> SamplerConfig:
        return SamplerConfig(self.sampler.n_samples, self.sampler.headings)

    def planner_config(self) -> PlannerConfig:
        p = self.planner
        return PlannerConfig(p.step, p.goal_bias, p.max_iter, p.d_max)

    def weights(self) -> ObjectiveWeights:
        o = self.optimizer
        return ObjectiveWeights(o.alpha, o.beta, tuple(o.w))

    def map_kwargs(self) -> dict:
        return asdict(self.map)

    @property
    def angular_resolution(self) -> float:
        s = self.sensor
        return s.angular_resolution if s.angular_resolution is not None else self.map.rho / s.r_max

    def scene_path(self) -> str:
        return resolve_scene(self.scene, self.base_dir)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("base_dir")
        return d


_SECTIONS = {
    "map": MapParams,
    "sensor": SensorParams,
    "zones": ZoneParams,
    "sampler": SamplerParams,
    "planner": PlannerParams,
    "optimizer": OptimizerParams,
    "run": RunParams,
}


def _positive(name, value, allow_zero=False):
    ok = value >= 0 if allow_zero else value > 0
    if not ok:
        raise ConfigError(f"{name} must be {'non-negative' if allow_zero else 'positive'}, got {value!r}")


def _number(name, value, integer=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name} must be a number, got {value!r}")
    if integer and int(value) != value:
        raise ConfigError(f"{name} must be an integer, got {value!r}")
    if not math.isfinite(value):
        raise ConfigError(f"{name} must be finite, got {value!r}")


def _vector(name, value, n):
    if not isinstance(value, (list, tuple)) or len(value) != n:
        raise ConfigError(f"{name} must be a list of {n} numbers, got {value!r}")
    for i, v in enumerate(value):
        _number(f"{name}[{i}]", v)


def validate(cfg: RunConfig) -> RunConfig:
    """Check every parameter against its module's preconditions."""
    m, s, z, sa, p, o, r = cfg.map, cfg.sensor, cfg.zones, cfg.sampler, cfg.planner, cfg.optimizer, cfg.run
    for name, value in (
        ("map.rho", m.rho), ("map.l_hit", m.l_hit), ("map.l_miss", m.l_miss),
        ("map.l_min", m.l_min), ("map.l_max", m.l_max), ("sensor.r_min", s.r_min),
        ("sensor.r_max", s.r_max), ("sensor.fov_xz", s.fov_xz), ("sensor.fov_yz", s.fov_yz),
        ("zones.lambda2", z.lambda2), ("zones.lambda3", z.lambda3), ("planner.step", p.step),
        ("planner.goal_bias", p.goal_bias), ("planner.d_max", p.d_max),
        ("optimizer.alpha", o.alpha), ("optimizer.beta", o.beta), ("run.epsilon", r.epsilon),
    ):
        _number(name, value)
    for name, value in (
        ("seed", cfg.seed), ("sampler.n_samples", sa.n_samples), ("sampler.headings", sa.headings),
        ("planner.max_iter", p.max_iter), ("planner.retries", p.retries),
        ("optimizer.budget", o.budget), ("run.max_iterations", r.max_iterations),
    ):
        _number(name, value, integer=True)
    if not isinstance(cfg.scene, str) or not cfg.scene:
        raise ConfigError("scene must be a scene name or file path")
    _positive("seed", cfg.seed, allow_zero=True)
    _positive("map.rho", m.rho)
    _positive("map.l_hit", m.l_hit)
    if not m.l_miss < 0:
        raise ConfigError(f"map.l_miss must be negative, got {m.l_miss!r}")
    if not m.l_min < 0 < m.l_max:
        raise ConfigError("map.l_min must be negative and map.l_max positive")
    _positive("sensor.r_min", s.r_min, allow_zero=True)
    if not s.r_max > s.r_min:
        raise ConfigError(f"sensor.r_max must exceed sensor.r_min, got {s.r_max!r}")
    for name, value in (("sensor.fov_xz", s.fov_xz), ("sensor.fov_yz", s.fov_yz)):
        if not 0 < value < math.pi:
            raise ConfigError(f"{name} must lie in (0, pi), got {value!r}")
    if s.angular_resolution is not None:
        _number("sensor.angular_resolution", s.angular_resolution)
        _positive("sensor.angular_resolution", s.angular_resolution)
    _vector("zones.red", z.red, 3)
    _vector("zones.yellow", z.yellow, 3)
    for i in range(3):
        _positive(f"zones.red[{i}]", z.red[i])
        if z.red[i] > z.yellow[i]:
            raise ConfigError(f"zones.yellow[{i}] must be at least zones.red[{i}]")
    _positive("zones.lambda2", z.lambda2)
    _positive("zones.lambda3", z.lambda3)
    _positive("sampler.n_samples", sa.n_samples)
    _positive("sampler.headings", sa.headings)
    _positive("planner.step", p.step)
    if not 0 <= p.goal_bias <= 1:
        raise ConfigError(f"planner.goal_bias must lie in [0, 1], got {p.goal_bias!r}")
    _positive("planner.max_iter", p.max_iter)
    _positive("planner.d_max", p.d_max)
    _positive("planner.retries", p.retries)
    _positive("optimizer.alpha", o.alpha, allow_zero=True)
    _positive("optimizer.beta", o.beta, allow_zero=True)
    _vector("optimizer.w", o.w, 4)
    for i in range(4):
        _positive(f"optimizer.w[{i}]", o.w[i])
    _positive("optimizer.budget", o.budget, allow_zero=True)
    if o.max_step is not None:
        _number("optimizer.max_step", o.max_step)
        _positive("optimizer.max_step", o.max_step)
    _positive("run.epsilon", r.epsilon, allow_zero=True)
    _positive("run.max_iterations", r.max_iterations)
    return cfg


def from_dict(data: dict, base_dir: str = ".") -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    known = {"scene", "seed", *_SECTIONS}
    for key in data:
        if key not in known:
            raise ConfigError(f"{key}: unknown config field")
    kwargs = {"base_dir": base_dir}
    for key in ("scene", "seed"):
        if key in data:
            kwargs[key] = data[key]
    for name, cls in _SECTIONS.items():
        section = data.get(name, {})
        if not isinstance(section, dict):
            raise ConfigError(f"{name} must be an object")
        allowed = {f.name for f in fields(cls)}
        for key in section:
            if key not in allowed:
                raise ConfigError(f"{name}.{key}: unknown config field")
        kwargs[name] = cls(**section)
    return validate(RunConfig(**kwargs))


def _bundled(kind: str, name: str) -> str | None:
    candidate = resources.files("gradexplore") / "data" / kind / f"{name}.json"
    return str(candidate) if candidate.is_file() else None


def resolve_scene(name: str, base_dir: str = ".") -> str:
    """A scene file path, trying the literal path, then ``base_dir``, then bundled scenes."""
    for candidate in (name, os.path.join(base_dir, name)):
        if os.path.isfile(candidate):
            return candidate
    bundled = _bundled("scenes", name)
    if bundled:
        return bundled
    raise FileNotFoundError(f"scene file not found: {name}")


def load_config(path: str) -> RunConfig:
    """Load a config file, or a bundled config by name (``tunnel``, ``lab``, ``clutter``)."""
    if not os.path.isfile(path):
        bundled = _bundled("configs", path)
        if bundled is None:
            raise FileNotFoundError(f"config file not found: {path}")
        path = bundled
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
    try:
        return from_dict(data, base_dir=os.path.dirname(os.path.abspath(path)))
    except TypeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
