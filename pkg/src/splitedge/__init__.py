"""Split-ratio offloading between a constrained primary edge node and an auxiliary node."""

from .errors import SplitEdgeError
from .model import (
    BatteryState,
    ConstraintSet,
    CostCurves,
    Frame,
    GatingReason,
    MobilityState,
    ProfileSample,
    SplitDecision,
    WorkloadSpec,
    validate_sample,
)

__version__ = "0.1.0"

__all__ = [
    "BatteryState",
    "ConstraintSet",
    "CostCurves",
    "Frame",
    "GatingReason",
    "MobilityState",
    "ProfileSample",
    "SplitDecision",
    "SplitEdgeError",
    "WorkloadSpec",
    "validate_sample",
]
