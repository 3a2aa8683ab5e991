import math

import numpy as np
import pytest
from curvegen import constant_curves, random_curves

from splitedge.errors import RangeError
from splitedge.model import BatteryState, ConstraintSet, GatingReason
from splitedge.solver import (
    GRID,
    Objective,
    SplitState,
    availability_factor,
    feasible,
    golden_section,
    objective_value,
    select_split,
    solve,
)

LOW_BATTERY = BatteryState(1000.0, 0.5, e_dnn_j=400.0, t_dnn_s=3600.0)  # ~0.03 W available


def test_objective_boundaries(curves):
    # PAPER: Table I r=0 row (68.34) and r=1 row (19.001 + 1.56)
    obj = Objective(curves)
    assert objective_value(obj, 0.0) == pytest.approx(68.34, rel=0.10)
    assert objective_value(obj, 1.0) == pytest.approx(19.001 + 1.56, rel=0.10)
    with pytest.raises(RangeError):
        objective_value(obj, 1.2)


def test_objective_constant_curves():
    assert objective_value(Objective(constant_curves(10, 20, 2)), 0.25) == pytest.approx(18.0)


def test_feasible_vacuous_caps(curves):
    ok, violations = feasible(0.5, ConstraintSet(), curves)
    assert ok and violations == []


def test_feasible_memory_violation(curves):
    # PAPER: Table I r=0.3 primary memory 63.77%
    ok, violations = feasible(0.3, ConstraintSet(m_max=(100.0, 50.0)), curves)
    assert not ok and violations == ["C6(primary)"]


def test_feasible_strict_interval(curves):
    for r in (0.0, 1.0):
        ok, violations = feasible(r, ConstraintSet(), curves)
        assert not ok and "C3" in violations


def test_feasible_reports_all_violations(curves):
    cons = ConstraintSet(tau=1.0, k_devices=2, w_max=(0.0, 0.0), m_max=(0.0, 0.0))
    _, violations = feasible(0.0, cons, curves)
    assert violations == ["C1", "C3", "C5(primary)", "C6(auxiliary)", "C6(primary)"]


def test_feasible_power_budget(curves):
    _, violations = feasible(0.5, ConstraintSet(), curves, available_power_w=1.0)
    assert violations == ["C2(primary)"]


def test_solve_paper_caps(curves, paper_caps):
    # PAPER: best split about 70%
    d = solve(Objective(curves), paper_caps, curves)
    assert d.gating_reason == GatingReason.SOLVED and d.feasible
    assert 0.6 <= d.ratio <= 0.8
    assert d.ratio == pytest.approx(0.7465, abs=1e-3)  # DERIVED: golden solve, frozen
    ok, _ = feasible(d.ratio, paper_caps, curves)
    assert ok == d.feasible


def test_solve_flat_objective_takes_smallest():
    c = constant_curves(10, 10, 0)
    d = solve(Objective(c), ConstraintSet(), c)
    assert d.ratio == GRID[0]


def test_solve_zero_memory_caps(curves):
    d = solve(Objective(curves), ConstraintSet(m_max=(0.0, 0.0)), curves)
    assert d.ratio == 0.0 and not d.feasible
    assert d.gating_reason == GatingReason.NO_FEASIBLE_RATIO


def test_golden_section_quadratic():
    assert golden_section(lambda x: (x - 0.3217) ** 2, 0.0, 1.0, 1e-7) == pytest.approx(0.3217, abs=1e-6)


def test_availability_factor():
    assert availability_factor(100, 100) == 1.0
    assert availability_factor(40, 80) == 0.4
    assert availability_factor(0, 50) == 0.0
    with pytest.raises(RangeError):
        availability_factor(120, 50)


def test_gate_order(curves, paper_caps):
    cons = ConstraintSet(**{**paper_caps.to_dict(), "beta": 5.0, "e_max": 1e6})
    halt = select_split(SplitState(curves, cons, current_latency_s=13.9, free_memory=(0, 0), battery=LOW_BATTERY))
    assert halt.gating_reason == GatingReason.LATENCY_HALT and halt.ratio == 0.0
    mem = select_split(SplitState(curves, cons, current_latency_s=1.0, free_memory=(10, 90), battery=LOW_BATTERY))
    assert mem.gating_reason == GatingReason.MEMORY_GATE and mem.ratio == 0.0
    bat = select_split(SplitState(curves, cons, current_latency_s=1.0, battery=LOW_BATTERY))
    assert bat.gating_reason == GatingReason.BATTERY_GATE
    ok = select_split(SplitState(curves, paper_caps))
    assert ok.gating_reason == GatingReason.SOLVED and ok.ratio == pytest.approx(0.7, abs=0.1)


def test_latency_boundary_inclusive(curves):
    d = select_split(SplitState(curves, ConstraintSet(beta=5.0), current_latency_s=5.0))
    assert d.gating_reason == GatingReason.LATENCY_HALT


def test_battery_gate_offloads_more(curves, paper_caps):
    base = select_split(SplitState(curves, paper_caps))
    cons = ConstraintSet(**{**paper_caps.to_dict(), "e_max": 1e6})
    gated = select_split(SplitState(curves, cons, battery=LOW_BATTERY))
    assert gated.ratio >= base.ratio


def test_no_battery_history_does_not_gate(curves):
    cons = ConstraintSet(e_max=1e6)
    d = select_split(SplitState(curves, cons, battery=BatteryState(1000.0, 0.5)))
    assert d.gating_reason == GatingReason.SOLVED


def _random_caps(rng):
    return ConstraintSet(
        m_max=(rng.uniform(40, 100), rng.uniform(40, 100)),
        w_max=(rng.uniform(5, 8), rng.uniform(5, 8)),
    )


def test_randomized_grid_global_and_baseline_dominance():
    rng = np.random.default_rng(21)
    checked = 0
    for _ in range(60):
        c = random_curves(rng)
        cons = _random_caps(rng)
        d = solve(Objective(c), cons, c)
        if not d.feasible:
            continue
        checked += 1
        best = objective_value(Objective(c), d.ratio)
        for r in GRID:
            if feasible(r, cons, c)[0]:
                assert objective_value(Objective(c), r) >= best - 1e-12 * max(1.0, best)
    assert checked >= 20


def test_randomized_tightening_and_determinism():
    rng = np.random.default_rng(22)
    for _ in range(60):
        c = random_curves(rng)
        cons = _random_caps(rng)
        d = solve(Objective(c), cons, c)
        assert all(solve(Objective(c), cons, c) == d for _ in range(3))
        tight = ConstraintSet(m_max=(cons.m_max[0] * 0.9, cons.m_max[1] * 0.95), w_max=cons.w_max)
        d2 = solve(Objective(c), tight, c)
        loose_val = d.predicted_total_time if d.feasible else math.inf
        tight_val = d2.predicted_total_time if d2.feasible else math.inf
        assert tight_val >= loose_val
