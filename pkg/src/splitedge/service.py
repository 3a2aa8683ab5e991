"""Operations behind both the CLI and the HTTP API; plain dicts in and out."""

from __future__ import annotations

import numpy as np

from . import formats
from .compression import apply_mask, compression_stats, synthetic_scene
from .model import ConstraintSet, CostCurves, GatingReason
from .profiler import build_cost_curves, fit_curves
from .runtime import config_from_dict, run_scenario
from .runtime.orchestrator import RunReport
from .schemas import FitRequest, MaskRequest, RunRequest, SolveRequest, SweepRequest
from .solver import SplitState, select_split

# Decisions that fall back to all-local processing.
FALLBACK_REASONS = frozenset(
    {GatingReason.NO_FEASIBLE_RATIO.value, GatingReason.LATENCY_HALT.value, GatingReason.MEMORY_GATE.value}
)


def fit(req: FitRequest) -> dict:
    samples = formats.parse_profile_csv(req.profile_csv)
    fits = fit_curves(samples)
    curves = build_cost_curves(samples)
    return {
        "samples": len(samples),
        "curves": curves.to_dict(),
        "fits": {
            cid: {"coefficients": list(f.coefficients), "degree": f.degree, "adjusted_r2": f.adjusted_r2, "sse": f.residual_sse}
            for cid, f in fits.items()
        },
    }


def solve(req: SolveRequest) -> dict:
    state = SplitState(
        curves=CostCurves.from_dict(req.curves),
        constraints=ConstraintSet.from_dict(req.constraints),
        current_latency_s=req.current_latency_s,
        free_memory=tuple(req.free_memory_pct),
    )
    return select_split(state).to_dict()


def _config(req: RunRequest):
    cfg = config_from_dict(req.scenario)
    changes = {}
    if req.force_ratio is not None:
        changes["force_ratio"] = req.force_ratio
    if req.seed is not None:
        changes["seed"] = req.seed
    return cfg.replace(**changes) if changes else cfg


def run(req: RunRequest) -> dict:
    return run_scenario(_config(req), req.transport).to_dict()


def sweep_row(r: float, rep: RunReport) -> dict:
    """Per-ratio totals in the layout of a time-vs-ratio table."""
    total = lambda key: sum(b[key] for b in rep.batches)  # noqa: E731
    return {
        "r": r,
        "t_aux": total("t_aux"),
        "t_pri": total("t_pri"),
        "t_off": total("t_off"),
        "t_total": rep.t_total_s,
        "e_total": rep.e_total_j,
        "images_offloaded": rep.images_offloaded,
    }


def sweep(req: SweepRequest) -> dict:
    cfg = _config(req)
    reports = [(r, run_scenario(cfg.replace(force_ratio=r), req.transport)) for r in req.ratios]
    return {"rows": [sweep_row(r, rep) for r, rep in reports], "reports": [rep.to_dict() for _, rep in reports]}


def mask(req: MaskRequest) -> dict:
    rng = np.random.default_rng(req.seed)
    masked = [
        apply_mask(*synthetic_scene(rng, req.width, req.height, req.background_fraction, req.channels))
        for _ in range(req.count)
    ]
    return compression_stats(masked)


def is_fallback(decision: dict) -> bool:
    return decision["gating_reason"] in FALLBACK_REASONS
