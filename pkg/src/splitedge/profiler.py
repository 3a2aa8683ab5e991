"""Polynomial cost-curve fitting from profiling samples."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import FitError, RangeError, UnknownCurveError
from .model import CURVE_SPECS, CostCurves, ProfileSample, validate_sample

logger = logging.getLogger(__name__)

MIN_SAMPLES = 5
MIN_DISTINCT_RATIOS = 4


@dataclass(frozen=True)
class FitResult:
    coefficients: tuple[float, ...]  # highest degree first
    degree: int
    adjusted_r2: float
    residual_sse: float

    def __call__(self, x: float) -> float:
        return polyval(self.coefficients, x)


def polyval(coeffs: Sequence[float], x: float) -> float:
    acc = 0.0
    for c in coeffs:
        acc = acc * x + c
    return acc


def _solve_partial_pivot(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Gaussian elimination with partial pivoting on a small dense system."""
    a = a.astype(float).copy()
    b = b.astype(float).copy()
    n = len(b)
    scale = np.max(np.abs(a)) or 1.0
    for col in range(n):
        pivot = col + int(np.argmax(np.abs(a[col:, col])))
        if abs(a[pivot, col]) <= 1e-13 * scale:
            raise FitError("DEGENERATE_DESIGN", "normal equations are rank deficient")
        if pivot != col:
            a[[col, pivot]] = a[[pivot, col]]
            b[[col, pivot]] = b[[pivot, col]]
        for row in range(col + 1, n):
            f = a[row, col] / a[col, col]
            if f:
                a[row, col:] -= f * a[col, col:]
                b[row] -= f * b[col]
    x = np.zeros(n)
    for row in range(n - 1, -1, -1):
        x[row] = (b[row] - a[row, row + 1 :] @ x[row + 1 :]) / a[row, row]
    return x


def adjusted_r2(sse: float, sst: float, n: int, degree: int) -> float:
    """Adjusted R^2, with the degenerate cases (no spread or no residual dof) pinned.

    A zero-SSE fit scores 1.0 whenever the usual formula would divide by zero.
    """
    dof = n - degree - 1
    exact = sse <= 1e-24 * max(1.0, sst)
    if sst == 0.0 or dof <= 0:
        if exact:
            return 1.0
        return 0.0 if sst == 0.0 else 1.0 - sse / sst
    r2 = 1.0 - sse / sst
    return 1.0 - (1.0 - r2) * (n - 1) / dof


def fit_polynomial(xs: Sequence[float], ys: Sequence[float], degree: int) -> FitResult:
    """Least-squares polynomial fit of the given degree.

    Needs at least ``degree + 1`` points at ``degree + 1`` distinct abscissae.
    With exactly ``degree + 1`` points the fit interpolates and the adjusted
    R^2 is reported as 1.0.
    """
    if degree not in (1, 2, 3):
        raise FitError("DEGENERATE_DESIGN", f"unsupported degree {degree}")
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise FitError("INSUFFICIENT_SAMPLES", "xs and ys must be equal-length 1-D sequences")
    if len(x) < degree + 1:
        raise FitError("INSUFFICIENT_SAMPLES", f"need >= {degree + 1} samples, got {len(x)}")
    if len(np.unique(x)) < degree + 1:
        raise FitError("DEGENERATE_DESIGN", f"need >= {degree + 1} distinct x values")

    # Sorting makes the accumulation order, and so the result, independent of row order.
    order = np.lexsort((y, x))
    x, y = x[order], y[order]
    design = np.vander(x, degree + 1)
    coeffs = _solve_partial_pivot(design.T @ design, design.T @ y)

    resid = y - design @ coeffs
    sse = float(resid @ resid)
    sst = float(((y - y.mean()) ** 2).sum())
    return FitResult(tuple(float(c) for c in coeffs), degree, adjusted_r2(sse, sst, len(x), degree), sse)


def curve_targets(samples: Sequence[ProfileSample]) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    """(native x, target y) arrays for every curve id."""
    r = np.array([s.split_ratio for s in samples], dtype=float)
    q = 1.0 - r
    col = lambda name: np.array([getattr(s, name) for s in samples], dtype=float)  # noqa: E731
    t_aux, t_pri = col("t_aux"), col("t_pri")
    return {
        "t1": (r, t_aux),
        "t2": (q, t_pri),
        "t3": (r, col("t_off")),
        # Energy is not measured directly; power x time gives joules per row.
        "e1": (r, col("p_aux") * t_aux),
        "e2": (q, col("p_pri") * t_pri),
        "m1": (r, col("m_aux")),
        "m2": (q, col("m_pri")),
    }


def fit_curves(samples: Sequence[ProfileSample]) -> dict[str, FitResult]:
    if len(samples) == 0:
        raise FitError("INSUFFICIENT_SAMPLES", "no samples")
    for s in samples:
        validate_sample(s)
    distinct = len({s.split_ratio for s in samples})
    if distinct < MIN_DISTINCT_RATIOS:
        raise FitError("DEGENERATE_DESIGN", f"samples span {distinct} distinct split ratios, need {MIN_DISTINCT_RATIOS}")
    if len(samples) < MIN_SAMPLES:
        raise FitError("INSUFFICIENT_SAMPLES", f"need >= {MIN_SAMPLES} samples, got {len(samples)}")

    fits = {}
    for cid, (x, y) in curve_targets(samples).items():
        try:
            fits[cid] = fit_polynomial(x, y, CURVE_SPECS[cid][0])
        except FitError as exc:
            raise FitError(exc.code, str(exc), curve=cid) from exc
        logger.debug("fitted %s: %s (adj R2 %.4f)", cid, fits[cid].coefficients, fits[cid].adjusted_r2)
    return fits


def build_cost_curves(samples: Sequence[ProfileSample]) -> CostCurves:
    fits = fit_curves(samples)
    return CostCurves(
        **{f"{cid}_coeffs": fit.coefficients for cid, fit in fits.items()},
        fit_quality={cid: fit.adjusted_r2 for cid, fit in fits.items()},
    )


class Prediction(NamedTuple):
    value: float
    clamped: bool


def evaluate(curves: CostCurves, which: str, r: float) -> Prediction:
    """Evaluate a curve at split ratio ``r``; negative outputs are clamped to 0 and flagged."""
    if which not in CURVE_SPECS:
        raise UnknownCurveError(f"unknown curve {which!r}")
    if not (0.0 <= r <= 1.0):
        raise RangeError("r", f"r={r!r} not in [0, 1]")
    x = r if CURVE_SPECS[which][1] == "r" else 1.0 - r
    value = polyval(curves.coeffs(which), x)
    if value < 0.0:
        return Prediction(0.0, True)
    return Prediction(value, False)


def predict(curves: CostCurves, which: str, r: float) -> float:
    return evaluate(curves, which, r).value
