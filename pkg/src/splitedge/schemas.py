"""Request bodies shared by the HTTP service and the CLI thin client."""

from __future__ import annotations

from typing import Any, Literal, Optional

from pydantic import BaseModel, Field


class FitRequest(BaseModel):
    profile_csv: str = Field(description="Profile CSV text, header included")


class SolveRequest(BaseModel):
    curves: dict[str, Any]
    constraints: dict[str, Any] = Field(default_factory=dict)
    current_latency_s: float = 0.0
    free_memory_pct: tuple[float, float] = (100.0, 100.0)


class RunRequest(BaseModel):
    scenario: dict[str, Any] = Field(default_factory=dict)
    transport: Literal["inproc", "socket"] = "inproc"
    force_ratio: Optional[float] = Field(default=None, ge=0.0, le=1.0)
    seed: Optional[int] = Field(default=None, ge=0)


class SweepRequest(RunRequest):
    ratios: list[float] = Field(default_factory=lambda: [round(0.1 * i, 1) for i in range(2, 10)])


class MaskRequest(BaseModel):
    count: int = Field(default=50, gt=0, le=10_000)
    seed: int = Field(default=0, ge=0)
    width: int = Field(default=96, gt=0)
    height: int = Field(default=64, gt=0)
    background_fraction: float = Field(default=0.72, gt=0.0, lt=1.0)
    channels: Literal[1, 3] = 1


class ErrorBody(BaseModel):
    code: str
    detail: str
