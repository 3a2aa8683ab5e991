"""Split-ratio decision engine.

The problem is univariate once the cost curves are substituted, so the
optimum is found by an exhaustive scan of the open grid {0.001, ..., 0.999}
followed by a golden-section refinement inside the best grid cell. Gating
(mobility latency, memory availability, battery) runs before the solve.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable

from . import energy
from .errors import ModelError, RangeError
from .model import (
    DEVICE_NAMES,
    BatteryState,
    ConstraintSet,
    CostCurves,
    GatingReason,
    SplitDecision,
)
from .profiler import predict

logger = logging.getLogger(__name__)

GRID_STEP = 0.001
GRID = tuple(i / 1000 for i in range(1, 1000))
REFINE_TOL = 1e-5
TIE_RTOL = 1e-12  # objective differences below this are rounding noise, not improvements

INV_PHI = (math.sqrt(5) - 1) / 2
INV_PHI2 = (3 - math.sqrt(5)) / 2


@dataclass(frozen=True)
class Objective:
    curves: CostCurves


def _objective(curves: CostCurves, r: float, primary_weight: float = 1.0) -> float:
    t1 = predict(curves, "t1", r)
    t3 = predict(curves, "t3", r)
    t2 = predict(curves, "t2", r)
    return r * (t1 + t3) + primary_weight * (1.0 - r) * t2


def objective_value(obj: Objective, r: float) -> float:
    """Total time ``r (T1 + T3) + (1 - r) T2`` with clamped curve predictions."""
    if not (0.0 <= r <= 1.0):
        raise RangeError("r", f"r={r!r} not in [0, 1]")
    return _objective(obj.curves, r)


def predicted_power(curves: CostCurves, r: float) -> tuple[float, float]:
    """Average draw (auxiliary, primary) as energy / time; an idle device draws 0."""
    out = []
    for t_id, e_id in (("t1", "e1"), ("t2", "e2")):
        t = predict(curves, t_id, r)
        out.append(predict(curves, e_id, r) / t if t > 0 else 0.0)
    return out[0], out[1]


def predicted_memory(curves: CostCurves, r: float) -> tuple[float, float]:
    return predict(curves, "m1", r), predict(curves, "m2", r)


def predicted_energy(curves: CostCurves, r: float) -> float:
    return predict(curves, "e1", r) + predict(curves, "e2", r)


def feasible(
    r: float,
    constraints: ConstraintSet,
    curves: CostCurves,
    available_power_w: float = math.inf,
) -> tuple[bool, list[str]]:
    """Check every constraint at ``r`` and return all violations.

    ``available_power_w`` is an optional budget on the primary's draw, applied
    together with ``p_max``.
    """
    if not (0.0 <= r <= 1.0):
        raise RangeError("r", f"r={r!r} not in [0, 1]")
    violations = []
    if _objective(curves, r) > constraints.tau / constraints.k_devices:
        violations.append("C1")
    powers = predicted_power(curves, r)
    if powers[1] > min(constraints.p_max, available_power_w):
        violations.append("C2(primary)")
    if not (0.0 < r < 1.0):
        violations.append("C3")
    for dev, p in enumerate(powers):
        if p > constraints.w_max[dev]:
            violations.append(f"C5({DEVICE_NAMES[dev]})")
    for dev, m in enumerate(predicted_memory(curves, r)):
        if m > constraints.m_max[dev]:
            violations.append(f"C6({DEVICE_NAMES[dev]})")
    return not violations, violations


def golden_section(f: Callable[[float], float], a: float, b: float, tol: float = REFINE_TOL) -> float:
    """Minimiser of a unimodal ``f`` on ``[a, b]`` to within ``tol``."""
    h = b - a
    if h <= tol:
        return (a + b) / 2
    n = int(math.ceil(math.log(tol / h) / math.log(INV_PHI)))
    c, d = a + INV_PHI2 * h, a + INV_PHI * h
    yc, yd = f(c), f(d)
    for _ in range(n - 1):
        if yc <= yd:
            b, d, yd = d, c, yc
            h *= INV_PHI
            c = a + INV_PHI2 * h
            yc = f(c)
        else:
            a, c, yc = c, d, yd
            h *= INV_PHI
            d = a + INV_PHI * h
            yd = f(d)
    return (a + d) / 2 if yc <= yd else (c + b) / 2


def _improves(val: float, best: float) -> bool:
    return val < best - TIE_RTOL * max(1.0, abs(best)) if math.isfinite(best) else val < best


def _decision(curves: CostCurves, r: float, ok: bool, reason: GatingReason, violations=()) -> SplitDecision:
    return SplitDecision(
        ratio=r,
        predicted_total_time=_objective(curves, r),
        predicted_energy=predicted_energy(curves, r),
        predicted_memory=predicted_memory(curves, r),
        feasible=ok,
        gating_reason=reason,
        violations=tuple(violations),
    )


def _solve(
    curves: CostCurves,
    constraints: ConstraintSet,
    available_power_w: float,
    primary_weight: float,
    reason: GatingReason,
) -> SplitDecision:
    best_r, best_val = None, math.inf
    for r in GRID:
        if not feasible(r, constraints, curves, available_power_w)[0]:
            continue
        val = _objective(curves, r, primary_weight)
        if _improves(val, best_val):  # the smallest r wins ties
            best_r, best_val = r, val
    if best_r is None:
        _, violations = feasible(GRID[len(GRID) // 2], constraints, curves, available_power_w)
        logger.info("no feasible split ratio; falling back to all-local")
        return _decision(curves, 0.0, False, GatingReason.NO_FEASIBLE_RATIO, violations)

    lo, hi = max(best_r - GRID_STEP, GRID_STEP / 2), min(best_r + GRID_STEP, 1 - GRID_STEP / 2)
    cand = golden_section(lambda r: _objective(curves, r, primary_weight), lo, hi)
    if (
        _improves(_objective(curves, cand, primary_weight), best_val)
        and feasible(cand, constraints, curves, available_power_w)[0]
    ):
        best_r = cand
    return _decision(curves, best_r, True, reason)


def solve(
    obj: Objective,
    constraints: ConstraintSet,
    curves: CostCurves | None = None,
    available_power_w: float = math.inf,
) -> SplitDecision:
    """Feasible ``r`` in (0, 1) minimising :func:`objective_value`."""
    curves = curves if curves is not None else obj.curves
    return _solve(curves, constraints, available_power_w, 1.0, GatingReason.SOLVED)


def availability_factor(m1_free_pct: float, m2_free_pct: float) -> float:
    """Fraction of memory free on the tighter of the two devices."""
    for name, v in (("m1_free_pct", m1_free_pct), ("m2_free_pct", m2_free_pct)):
        if not (0.0 <= v <= 100.0):
            raise RangeError(name, f"{name}={v!r} not in [0, 100]")
    return min(m1_free_pct, m2_free_pct) / 100.0


@dataclass(frozen=True)
class SplitState:
    curves: CostCurves
    constraints: ConstraintSet
    current_latency_s: float = 0.0
    battery: BatteryState | None = None
    free_memory: tuple[float, float] = (100.0, 100.0)  # (auxiliary, primary) percent


def battery_power_w(battery: BatteryState | None) -> float:
    """Available power in watts; inf when there is no battery or no usage history yet."""
    if battery is None:
        return math.inf
    try:
        return energy.available_power_w(battery)
    except ModelError:
        return math.inf


def select_split(state: SplitState) -> SplitDecision:
    """Gate in order (latency, memory, battery), then solve."""
    curves, cons = state.curves, state.constraints
    if state.current_latency_s >= cons.beta:
        logger.info("offload latency %.3fs >= beta %.3fs: halting offload", state.current_latency_s, cons.beta)
        return _decision(curves, 0.0, False, GatingReason.LATENCY_HALT)

    lam = availability_factor(*state.free_memory)
    if lam < cons.lambda_threshold:
        logger.info("availability factor %.3f below %.3f: memory gate", lam, cons.lambda_threshold)
        return _decision(curves, 0.0, False, GatingReason.MEMORY_GATE)

    power = battery_power_w(state.battery)
    if power < cons.e_max:
        logger.info("available power %.2f W below floor %.2f W: biasing toward offload", power, cons.e_max)
        # A hard cap on the primary's draw could empty the feasible set and force all-local,
        # the opposite of what a low battery calls for; the bias alone steers the optimum.
        return _solve(curves, cons, math.inf, cons.battery_bias, GatingReason.BATTERY_GATE)

    return solve(Objective(curves), cons, curves)
