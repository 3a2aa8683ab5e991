"""Execution / offloading energy and latency accounting, battery availability."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .errors import ModelError, RangeError
from .model import JOULES_PER_WH, BatteryState, WorkloadSpec


@dataclass(frozen=True)
class CpuModel:
    """CPU power ``P = mu * S^3`` with speed capped at ``speed_max`` cycles/s."""

    mu: float
    speed_max: float

    def __post_init__(self):
        if not self.mu > 0:
            raise RangeError("mu", "mu must be > 0")
        if not self.speed_max > 0:
            raise RangeError("speed_max", "speed_max must be > 0")

    def check_speed(self, speed: float) -> None:
        if not (0 < speed <= self.speed_max):
            raise ModelError(f"speed {speed!r} outside (0, {self.speed_max!r}]", code="SPEED_OUT_OF_RANGE")


def cpu_cycles(workload: WorkloadSpec) -> float:
    return workload.cycles_per_bit * workload.input_bits


def exec_time(cycles: float, speed: float, speed_max: float = float("inf")) -> float:
    if not (0 < speed <= speed_max):
        raise ModelError(f"speed {speed!r} outside (0, {speed_max!r}]", code="SPEED_OUT_OF_RANGE")
    return cycles / speed


def cpu_power(model: CpuModel, speed: float) -> float:
    return model.mu * speed**3


def exec_energy(cycles: float, model: CpuModel, speed: float) -> float:
    model.check_speed(speed)
    return cycles * model.mu * speed**2


def split_exec(t1: float, t2: float, e1: float, e2: float, r: float) -> tuple[float, float]:
    """Split-weighted execution time and energy."""
    if not (0.0 <= r <= 1.0):
        raise RangeError("r", f"r={r!r} not in [0, 1]")
    return t1 * r + t2 * (1.0 - r), e1 * r + e2 * (1.0 - r)


def offload_energy(t_off: float, node_powers: Sequence[float]) -> float:
    """Transfer time times the summed draw of every node taking part (sender, receiver, ...)."""
    if t_off < 0:
        raise RangeError("t_off", "t_off must be >= 0")
    if not node_powers:
        raise RangeError("node_powers", "need at least one node power")
    if any(p < 0 for p in node_powers):
        raise RangeError("node_powers", "node powers must be >= 0")
    return t_off * sum(node_powers)


def total_latency(t_exec: float, t_off: float, t_solver: float) -> float:
    return t_exec + t_off + t_solver


def solver_energy(power_w: float, t_solver: float) -> float:
    return power_w * t_solver


def total_energy(e_exec: float, e_solver: float, e_off: float) -> float:
    return e_exec + e_solver + e_off


def available_energy(b: BatteryState) -> float:
    """``C0*k - E_dnn - E_drive``; negative means the budget is overdrawn."""
    return b.capacity_j * b.discharge_rate - b.e_dnn_j - b.e_drive_j


def available_power(b: BatteryState) -> float:
    """Available energy spread over the elapsed DNN + drive hours, scaled by ``1/(1-k)``.

    The formula is applied to the battery's numbers as they are. Energies in
    joules give joules per hour; pass :func:`battery_in_wh` output to get watts.
    """
    hours = (b.t_dnn_s + b.t_drive_s) / 3600.0
    denom = (1.0 - b.discharge_rate) * hours
    if denom == 0.0:
        raise ModelError("(1 - k) * (t_dnn + t_drive) is zero", code="DIV_BY_ZERO")
    return available_energy(b) / denom


def joules_to_wh(joules: float) -> float:
    return joules / JOULES_PER_WH


def battery_in_wh(b: BatteryState) -> BatteryState:
    """Same battery with energy fields expressed in watt-hours (field names unchanged)."""
    return BatteryState(
        capacity_j=joules_to_wh(b.capacity_j),
        discharge_rate=b.discharge_rate,
        e_dnn_j=joules_to_wh(b.e_dnn_j),
        e_drive_j=joules_to_wh(b.e_drive_j),
        t_dnn_s=b.t_dnn_s,
        t_drive_s=b.t_drive_s,
    )


def available_power_w(b: BatteryState) -> float:
    """Available power in watts for a battery tracked in joules."""
    return available_power(battery_in_wh(b))
