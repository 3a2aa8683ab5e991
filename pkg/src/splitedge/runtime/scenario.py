"""Scenario configuration and its JSON form.

Link selection (``link.type``):

``profile``
    offload latency comes from the fitted T3 curve (the default);
``shannon``
    Shannon-Hartley rate over a :class:`LinkSpec` at the scenario distance;
``latency_distance``
    the empirical ``L(d)`` model, either from coefficients ``a1/a2/a3`` or
    fitted from a ``samples`` CSV. Required in MOBILE mode.

Paths inside a scenario file are resolved relative to the file; the prefix
``bundled:`` refers to the data shipped with the package.
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
from dataclasses import dataclass, field
from typing import Any, Mapping

from ..errors import ConfigError, SplitEdgeError
from ..formats import load_latency_samples, resolve_path
from ..model import BatteryState, ConstraintSet, MobilityState
from ..netmodel import LatencyDistanceModel, LinkSpec, fit_latency_distance

STATIC = "STATIC"
MOBILE = "MOBILE"


@dataclass(frozen=True)
class ScenarioConfig:
    batch_size: int = 100
    num_batches: int = 1
    bytes_per_image: int = 80_000
    mode: str = STATIC
    link: LinkSpec | LatencyDistanceModel | None = None
    distance_m: float = 4.0
    mobility: MobilityState | None = None
    batch_interval_s: float = 2.0
    constraints: ConstraintSet = field(default_factory=ConstraintSet)
    battery: BatteryState | None = None
    profile_source: str = "bundled:table1.csv"
    masking_enabled: bool = False
    dedup_threshold: float | None = None
    seed: int = 0
    # Synthetic frame stream.
    frame_width: int = 64
    frame_height: int = 48
    background_fraction: float = 0.72
    duplicate_rate: float = 0.0
    # Accounting knobs.
    profile_batch_size: int = 100
    solver_time_s: float = 0.05
    solver_power_w: float = 5.0
    radio_powers_w: tuple[float, ...] = (1.0, 1.0)
    drive_power_w: float = 0.0
    detector_latency_s: float = 0.0035
    free_memory_pct: tuple[float, float] = (100.0, 100.0)
    force_ratio: float | None = None

    def __post_init__(self):
        if self.mode not in (STATIC, MOBILE):
            raise ConfigError(f"mode must be STATIC or MOBILE, got {self.mode!r}")
        if self.mode == MOBILE and (self.mobility is None or not isinstance(self.link, LatencyDistanceModel)):
            raise ConfigError("MOBILE mode needs mobility and a latency_distance link")
        for name in ("batch_size", "num_batches", "bytes_per_image", "profile_batch_size", "frame_width", "frame_height"):
            if int(getattr(self, name)) != getattr(self, name) or getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be a positive integer")
        if not (0 <= self.seed < 2**64):
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.dedup_threshold is not None and not (0.0 <= self.dedup_threshold <= 1.0):
            raise ConfigError("dedup_threshold must be in [0, 1]")
        if self.force_ratio is not None and not (0.0 <= self.force_ratio <= 1.0):
            raise ConfigError("force_ratio must be in [0, 1]")
        if not (0.0 <= self.duplicate_rate <= 1.0):
            raise ConfigError("duplicate_rate must be in [0, 1]")
        if not (0.0 < self.background_fraction < 1.0):
            raise ConfigError("background_fraction must be in (0, 1)")
        if self.distance_m < 0 or self.batch_interval_s < 0:
            raise ConfigError("distance and batch interval must be >= 0")
        for name in ("solver_time_s", "solver_power_w", "drive_power_w", "detector_latency_s"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)


def _parse_link(spec: Mapping | None, base_dir: str | None):
    if spec is None:
        return None
    kind = spec.get("type", "profile")
    params = {k: v for k, v in spec.items() if k != "type"}
    if kind == "profile":
        return None
    if kind == "shannon":
        return LinkSpec(**params)
    if kind == "latency_distance":
        if "samples" in params:
            return fit_latency_distance(load_latency_samples(resolve_path(params["samples"], base_dir)))
        return LatencyDistanceModel(float(params["a1"]), float(params["a2"]), float(params["a3"]))
    raise ConfigError(f"unknown link type {kind!r}")


def _parse_battery(spec: Mapping | None) -> BatteryState | None:
    if spec is None:
        return None
    spec = dict(spec)
    if "capacity_mah" in spec:
        mah = spec.pop("capacity_mah")
        volts = spec.pop("volts", None)
        if volts is None:
            raise ConfigError("battery capacity in mAh needs a nominal 'volts'")
        return BatteryState.from_mah(mah, volts, **spec)
    return BatteryState(**spec)


def config_from_dict(data: Mapping[str, Any], base_dir: str | None = None) -> ScenarioConfig:
    data = dict(data)
    try:
        kwargs: dict[str, Any] = {}
        if "profile" in data:
            data["profile_source"] = data.pop("profile")
        if "profile_source" in data:
            kwargs["profile_source"] = resolve_path(data.pop("profile_source"), base_dir)
        kwargs["link"] = _parse_link(data.pop("link", None), base_dir)
        if "mode" in data:
            kwargs["mode"] = str(data.pop("mode")).upper()
        if "mobility" in data:
            kwargs["mobility"] = MobilityState(**data.pop("mobility"))
        if "constraints" in data:
            kwargs["constraints"] = ConstraintSet.from_dict(data.pop("constraints"))
        kwargs["battery"] = _parse_battery(data.pop("battery", None))
        for key in ("radio_powers_w", "free_memory_pct"):
            if key in data:
                kwargs[key] = tuple(float(v) for v in data.pop(key))
        known = {f.name for f in dataclasses.fields(ScenarioConfig)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown scenario keys: {sorted(unknown)}")
        kwargs.update(data)
        return ScenarioConfig(**kwargs)
    except ConfigError:
        raise
    except (SplitEdgeError, TypeError, ValueError, KeyError) as exc:
        raise ConfigError(f"invalid scenario: {exc}") from exc


def load_scenario(path: str | os.PathLike) -> ScenarioConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read scenario {path}: {exc}") from exc
    return config_from_dict(data, os.path.dirname(os.path.abspath(path)))


def config_to_dict(cfg: ScenarioConfig) -> dict:
    """JSON-ready form (links and states flattened); inverse of :func:`config_from_dict`."""
    out = {}
    for f in dataclasses.fields(cfg):
        v = getattr(cfg, f.name)
        if f.name == "link":
            if v is None:
                v = {"type": "profile"}
            elif isinstance(v, LinkSpec):
                v = {"type": "shannon", **dataclasses.asdict(v)}
            else:
                v = {"type": "latency_distance", **dataclasses.asdict(v)}
        elif f.name == "constraints":
            v = v.to_dict()
        elif dataclasses.is_dataclass(v):
            v = dataclasses.asdict(v)
        elif isinstance(v, tuple):
            v = list(v)
        if isinstance(v, float) and math.isinf(v):
            v = "inf"
        out[f.name] = v
    return out
