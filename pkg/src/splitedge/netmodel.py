"""Channel rate, offload latency and mobility-distance models."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

from .errors import FitError, ModelError, RangeError
from .model import MobilityState
from .profiler import fit_polynomial


@dataclass(frozen=True)
class LinkSpec:
    bandwidth_hz: float
    path_loss_exponent: float
    tx_power_w: float
    noise_power_w: float

    def __post_init__(self):
        if not self.bandwidth_hz > 0:
            raise RangeError("bandwidth_hz", "bandwidth must be > 0")
        if not self.noise_power_w > 0:
            raise RangeError("noise_power_w", "noise power must be > 0")
        if not self.path_loss_exponent >= 0:
            raise RangeError("path_loss_exponent", "path loss exponent must be >= 0")
        if not self.tx_power_w >= 0:
            raise RangeError("tx_power_w", "tx power must be >= 0")


@dataclass(frozen=True)
class LatencyDistanceModel:
    """Empirical latency ``L(d) = a1*d^2 - a2*d + a3`` (seconds, d in meters)."""

    a1: float
    a2: float
    a3: float

    def __call__(self, distance_m: float) -> float:
        return self.a1 * distance_m**2 - self.a2 * distance_m + self.a3

    def latency(self, distance_m: float) -> float:
        """Latency used at runtime: never negative."""
        return max(self(distance_m), 0.0)

    @property
    def vertex(self) -> float:
        """Distance beyond which L is non-decreasing (0 when the parabola opens downward or is flat)."""
        if self.a1 > 0:
            return max(self.a2 / (2 * self.a1), 0.0)
        return 0.0 if self.a2 <= 0 and self.a1 == 0 else math.inf


def data_rate(link: LinkSpec, distance_m: float) -> float:
    """Shannon-Hartley rate ``B log2(1 + d^-u P_t / N0)`` in bit/s."""
    u = link.path_loss_exponent
    if u == 0:
        gain = 1.0
    else:
        if distance_m == 0:
            raise ModelError("distance is 0 with a lossy channel", code="ZERO_DISTANCE_WITH_LOSS")
        if distance_m < 0:
            raise RangeError("distance_m", "distance must be >= 0")
        gain = distance_m ** (-u)
    return link.bandwidth_hz * math.log2(1.0 + gain * link.tx_power_w / link.noise_power_w)


def offload_latency(payload_bits: float, rate: float) -> float:
    if not rate > 0:
        raise ModelError("data rate must be > 0", code="ZERO_RATE")
    if payload_bits < 0:
        raise RangeError("payload_bits", "payload must be >= 0")
    return payload_bits / rate


def fit_latency_distance(samples: Iterable[tuple[float, float]]) -> LatencyDistanceModel:
    pts = list(samples)
    if len(pts) < 4:
        raise FitError("INSUFFICIENT_SAMPLES", f"need >= 4 (distance, latency) samples, got {len(pts)}")
    if len({d for d, _ in pts}) < 3:
        raise FitError("DEGENERATE_DESIGN", "need >= 3 distinct distances")
    fit = fit_polynomial([d for d, _ in pts], [lat for _, lat in pts], 2)
    c2, c1, c0 = fit.coefficients
    return LatencyDistanceModel(a1=c2, a2=-c1, a3=c0)


def distance_at(mob: MobilityState) -> float:
    return mob.initial_distance + (mob.v_primary + mob.v_auxiliary) * mob.elapsed


def should_halt(latency_s: float, beta_s: float) -> bool:
    if not beta_s > 0:
        raise RangeError("beta_s", "beta must be > 0")
    return latency_s >= beta_s
