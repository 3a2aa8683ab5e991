"""Shared domain types.

All types are frozen dataclasses. Types other than :class:`ProfileSample`
check their invariants on construction; profile rows are raw measurements
and are checked explicitly with :func:`validate_sample` so loaders can report
which row is bad.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import RangeError

# Curve id -> (polynomial degree, native variable). "q" means 1 - r.
CURVE_SPECS: dict[str, tuple[int, str]] = {
    "t1": (2, "r"),
    "t2": (2, "q"),
    "t3": (2, "r"),
    "e1": (3, "r"),
    "e2": (3, "q"),
    "m1": (2, "r"),
    "m2": (2, "q"),
}

# Device index convention for per-device caps: 0 = auxiliary, 1 = primary.
AUXILIARY = 0
PRIMARY = 1
DEVICE_NAMES = ("auxiliary", "primary")


def _check_fraction(name: str, value: float) -> None:
    if not (0.0 <= value <= 1.0):
        raise RangeError(name, f"{name}={value!r} not in [0, 1]")


def _check_nonneg(name: str, value: float) -> None:
    if not (value >= 0.0):
        raise RangeError(name, f"{name}={value!r} must be >= 0")


@dataclass(frozen=True)
class ProfileSample:
    """One profiling row: measurements of both devices at one split ratio."""

    split_ratio: float
    t_aux: float
    p_aux: float
    m_aux: float
    t_pri: float
    t_off: float
    p_pri: float
    m_pri: float


def validate_sample(sample: ProfileSample) -> None:
    """Raise :class:`RangeError` naming the first violated field, else return None."""
    _check_fraction("split_ratio", sample.split_ratio)
    for name in ("t_aux", "p_aux", "t_pri", "t_off", "p_pri"):
        _check_nonneg(name, getattr(sample, name))
    for name in ("m_aux", "m_pri"):
        v = getattr(sample, name)
        if not (0.0 <= v <= 100.0):
            raise RangeError(name, f"{name}={v!r} not in [0, 100]")
    if sample.split_ratio == 0.0:
        if sample.t_aux != 0.0:
            raise RangeError("t_aux", "t_aux must be 0 when split_ratio = 0")
        if sample.t_off != 0.0:
            raise RangeError("t_off", "t_off must be 0 when split_ratio = 0")
    if sample.split_ratio == 1.0 and sample.t_pri != 0.0:
        raise RangeError("t_pri", "t_pri must be 0 when split_ratio = 1")


@dataclass(frozen=True)
class CostCurves:
    """Fitted polynomial coefficients (highest degree first) for every curve.

    ``t2``, ``e2`` and ``m2`` are polynomials in ``1 - r``; the others in ``r``.
    ``fit_quality`` maps curve id to adjusted R^2.
    """

    t1_coeffs: tuple[float, ...]
    t2_coeffs: tuple[float, ...]
    t3_coeffs: tuple[float, ...]
    e1_coeffs: tuple[float, ...]
    e2_coeffs: tuple[float, ...]
    m1_coeffs: tuple[float, ...]
    m2_coeffs: tuple[float, ...]
    fit_quality: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        for cid, (degree, _) in CURVE_SPECS.items():
            coeffs = tuple(float(c) for c in getattr(self, f"{cid}_coeffs"))
            if len(coeffs) != degree + 1:
                raise RangeError(f"{cid}_coeffs", f"{cid} needs {degree + 1} coefficients, got {len(coeffs)}")
            object.__setattr__(self, f"{cid}_coeffs", coeffs)
        object.__setattr__(self, "fit_quality", dict(self.fit_quality))

    def coeffs(self, curve: str) -> tuple[float, ...]:
        return getattr(self, f"{curve}_coeffs")

    def to_dict(self) -> dict:
        out = {f"{cid}_coeffs": list(self.coeffs(cid)) for cid in CURVE_SPECS}
        out["fit_quality"] = dict(self.fit_quality)
        return out

    @classmethod
    def from_dict(cls, data: Mapping) -> "CostCurves":
        kwargs = {f"{cid}_coeffs": tuple(data[f"{cid}_coeffs"]) for cid in CURVE_SPECS}
        return cls(**kwargs, fit_quality=data.get("fit_quality", {}))


@dataclass(frozen=True)
class ConstraintSet:
    """Bounds for the split-ratio problem plus gating thresholds.

    ``w_max`` and ``m_max`` are indexed (auxiliary, primary). ``e_max`` is the
    power floor in watts below which the battery gate trips.
    """

    tau: float = math.inf
    k_devices: int = 2
    p_max: float = math.inf
    s_max: float = math.inf
    w_max: tuple[float, float] = (math.inf, math.inf)
    m_max: tuple[float, float] = (100.0, 100.0)
    beta: float = math.inf
    e_max: float = 0.0
    lambda_threshold: float = 0.2
    battery_bias: float = 1.5

    def __post_init__(self):
        if not self.tau > 0:
            raise RangeError("tau", "tau must be > 0")
        if int(self.k_devices) != self.k_devices or self.k_devices < 1:
            raise RangeError("k_devices", "k_devices must be an integer >= 1")
        if not self.beta > 0:
            raise RangeError("beta", "beta must be > 0")
        if not (self.p_max > 0 and self.s_max > 0):
            raise RangeError("p_max" if not self.p_max > 0 else "s_max", "caps must be > 0")
        object.__setattr__(self, "w_max", tuple(float(w) for w in self.w_max))
        object.__setattr__(self, "m_max", tuple(float(m) for m in self.m_max))
        if len(self.w_max) != 2 or len(self.m_max) != 2:
            raise RangeError("w_max" if len(self.w_max) != 2 else "m_max", "need one cap per device")
        for name in ("w_max", "m_max"):
            if any(not (v >= 0) for v in getattr(self, name)):
                raise RangeError(name, f"{name} caps must be >= 0")
        _check_nonneg("e_max", self.e_max)
        _check_fraction("lambda_threshold", self.lambda_threshold)
        if not self.battery_bias >= 1.0:
            raise RangeError("battery_bias", "battery_bias must be >= 1")

    @property
    def power_floor_w(self) -> float:
        return self.e_max

    def to_dict(self) -> dict:
        return {
            "tau": self.tau,
            "k_devices": self.k_devices,
            "p_max": self.p_max,
            "s_max": self.s_max,
            "w_max": list(self.w_max),
            "m_max": list(self.m_max),
            "beta": self.beta,
            "e_max": self.e_max,
            "lambda_threshold": self.lambda_threshold,
            "battery_bias": self.battery_bias,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "ConstraintSet":
        known = {f for f in cls.__dataclass_fields__}
        kwargs = {}
        for key, value in data.items():
            if key == "power_floor_w":
                key = "e_max"
            if key not in known:
                raise RangeError(key, f"unknown constraint field {key!r}")
            kwargs[key] = _decode_inf(value)
        for key in ("w_max", "m_max"):
            if key in kwargs:
                kwargs[key] = tuple(_decode_inf(v) for v in kwargs[key])
        return cls(**kwargs)


def _decode_inf(value):
    if isinstance(value, str) and value.lower() in ("inf", "infinity"):
        return math.inf
    return value


class GatingReason(str, enum.Enum):
    SOLVED = "SOLVED"
    LATENCY_HALT = "LATENCY_HALT"
    MEMORY_GATE = "MEMORY_GATE"
    BATTERY_GATE = "BATTERY_GATE"
    NO_FEASIBLE_RATIO = "NO_FEASIBLE_RATIO"


@dataclass(frozen=True)
class SplitDecision:
    ratio: float
    predicted_total_time: float
    predicted_energy: float
    predicted_memory: tuple[float, float]
    feasible: bool
    gating_reason: GatingReason
    violations: tuple[str, ...] = ()

    def __post_init__(self):
        _check_fraction("ratio", self.ratio)
        if self.gating_reason in (GatingReason.NO_FEASIBLE_RATIO, GatingReason.LATENCY_HALT) and self.ratio != 0.0:
            raise RangeError("ratio", f"{self.gating_reason.value} requires ratio 0")

    def to_dict(self) -> dict:
        return {
            "ratio": self.ratio,
            "predicted_total_time": self.predicted_total_time,
            "predicted_energy": self.predicted_energy,
            "predicted_memory": list(self.predicted_memory),
            "feasible": self.feasible,
            "gating_reason": self.gating_reason.value,
            "violations": list(self.violations),
        }


@dataclass(frozen=True)
class WorkloadSpec:
    input_bits: float
    cycles_per_bit: float
    batch_size: int = 1
    bytes_per_image: int = 1

    def __post_init__(self):
        for name in ("input_bits", "cycles_per_bit", "batch_size", "bytes_per_image"):
            if not getattr(self, name) > 0:
                raise RangeError(name, f"{name} must be > 0")


@dataclass(frozen=True)
class Frame:
    """8-bit raster, row-major, channels interleaved."""

    width: int
    height: int
    channels: int
    pixels: bytes

    def __post_init__(self):
        if self.channels not in (1, 3):
            raise RangeError("channels", "channels must be 1 or 3")
        if self.width <= 0 or self.height <= 0:
            raise RangeError("width" if self.width <= 0 else "height", "dimensions must be positive")
        pixels = bytes(self.pixels)
        if len(pixels) != self.width * self.height * self.channels:
            raise RangeError("pixels", "pixel buffer length != width * height * channels")
        object.__setattr__(self, "pixels", pixels)

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "Frame":
        arr = np.asarray(arr)
        if arr.ndim == 2:
            h, w = arr.shape
            c = 1
        elif arr.ndim == 3:
            h, w, c = arr.shape
        else:
            raise RangeError("pixels", "array must be HxW or HxWxC")
        if arr.size and (arr.min() < 0 or arr.max() > 255):
            raise RangeError("pixels", "pixel values must be in [0, 255]")
        return cls(w, h, c, arr.astype(np.uint8).tobytes())

    def to_array(self) -> np.ndarray:
        arr = np.frombuffer(self.pixels, dtype=np.uint8)
        if self.channels == 1:
            return arr.reshape(self.height, self.width)
        return arr.reshape(self.height, self.width, self.channels)

    @property
    def nbytes(self) -> int:
        return len(self.pixels)


JOULES_PER_WH = 3600.0


@dataclass(frozen=True)
class BatteryState:
    capacity_j: float
    discharge_rate: float
    e_dnn_j: float = 0.0
    e_drive_j: float = 0.0
    t_dnn_s: float = 0.0
    t_drive_s: float = 0.0

    def __post_init__(self):
        _check_fraction("discharge_rate", self.discharge_rate)
        for name in ("capacity_j", "e_dnn_j", "e_drive_j", "t_dnn_s", "t_drive_s"):
            _check_nonneg(name, getattr(self, name))

    @classmethod
    def from_mah(cls, capacity_mah: float, volts: float, discharge_rate: float, **kw) -> "BatteryState":
        """Build from a pack rating; the pack voltage has to come from the caller."""
        if not volts > 0:
            raise RangeError("volts", "nominal voltage must be > 0")
        return cls(capacity_j=capacity_mah / 1000.0 * volts * JOULES_PER_WH, discharge_rate=discharge_rate, **kw)

    def consume(self, *, e_dnn_j: float = 0.0, t_dnn_s: float = 0.0, e_drive_j: float = 0.0, t_drive_s: float = 0.0) -> "BatteryState":
        return BatteryState(
            self.capacity_j,
            self.discharge_rate,
            self.e_dnn_j + e_dnn_j,
            self.e_drive_j + e_drive_j,
            self.t_dnn_s + t_dnn_s,
            self.t_drive_s + t_drive_s,
        )


@dataclass(frozen=True)
class MobilityState:
    v_primary: float
    v_auxiliary: float
    elapsed: float = 0.0
    initial_distance: float = 0.0

    def __post_init__(self):
        for name in ("v_primary", "v_auxiliary", "elapsed", "initial_distance"):
            _check_nonneg(name, getattr(self, name))
