"""Two-node scenario execution.

The auxiliary node announces its profile over PROFILE_REPORT messages, the
primary fits cost curves from them and then, batch by batch: drops similar
frames, masks the frames it will offload, picks a split ratio, ships the
offloaded share as a FRAME_BATCH and waits for the auxiliary's RESULT.

Node execution times are curve predictions, not measured inference. Time is
kept on a virtual clock; nothing wall-clock dependent enters the report, so a
seeded scenario reproduces byte for byte.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import time
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .. import energy, formats, netmodel, solver
from ..compression import apply_mask, dedup_indices, synthetic_scene
from ..errors import ConfigError, FitError, ProfileError, RangeError, TransportError
from ..model import BatteryState, CostCurves, Frame, GatingReason, ProfileSample, SplitDecision
from ..profiler import build_cost_curves, predict
from .messages import (
    MessageKind,
    WireFrame,
    decode_frame_batch,
    encode_frame_batch,
    pack_frame,
)
from .scenario import MOBILE, ScenarioConfig
from .transport import Endpoint, InProcBus, socket_pair

logger = logging.getLogger(__name__)

TOPIC_PROFILE = "splitedge/profile"
TOPIC_OFFLOAD = "splitedge/offload"
TOPIC_RESULT = "splitedge/result"
RESULT_TIMEOUT_S = 10.0


def offload_count(n: int, r: float) -> int:
    """Frames offloaded out of ``n`` at ratio ``r``; halves round to even."""
    if not (0.0 <= r <= 1.0):
        raise RangeError("r", f"r={r!r} not in [0, 1]")
    return int(round(r * n))  # Python's round() is round-half-to-even


def split_batch(frames: Sequence, r: float) -> tuple[list, list]:
    """(local, offload): the first ``offload_count`` frames are offloaded."""
    k = offload_count(len(frames), r)
    return list(frames[k:]), list(frames[:k])


@dataclass
class RunReport:
    split_ratio_used: float = 0.0
    frames_total: int = 0
    images_local: int = 0
    images_offloaded: int = 0
    images_deduped: int = 0
    t_total_s: float = 0.0
    t_compute_s: float = 0.0
    t_offload_s: float = 0.0
    t_solver_s: float = 0.0
    e_total_j: float = 0.0
    m_peak_pct: list = field(default_factory=lambda: [0.0, 0.0])
    ms_per_image: float = 0.0
    halts: list = field(default_factory=list)
    frame_batches_sent: int = 0
    frame_batches_after_halt: int = 0
    batches: list = field(default_factory=list)
    # Host time spent in run_scenario; kept out of the serialised report so runs compare byte for byte.
    wall_time_s: float = field(default=0.0, compare=False, repr=False)

    def to_dict(self) -> dict:
        out = asdict(self)
        del out["wall_time_s"]
        return out

    def to_json(self) -> str:
        return formats.dumps(self.to_dict())

    def decisions(self) -> list[tuple]:
        """Per-batch (ratio, gating reason, local, offloaded, deduped); transport independent."""
        return [(b["r"], b["gating_reason"], b["n_local"], b["n_offloaded"], b["n_deduped"]) for b in self.batches]


class FrameSource:
    """Seeded synthetic frame stream with ground-truth object masks."""

    def __init__(self, cfg: ScenarioConfig):
        self.cfg = cfg
        self.rng = np.random.default_rng(cfg.seed)
        self.next_id = 0
        self._last = None

    def batch(self) -> list[tuple[int, Frame, object]]:
        out = []
        for _ in range(self.cfg.batch_size):
            if self._last is not None and self.rng.random() < self.cfg.duplicate_rate:
                frame, mask = self._last
            else:
                frame, mask = synthetic_scene(
                    self.rng, self.cfg.frame_width, self.cfg.frame_height, self.cfg.background_fraction
                )
            self._last = (frame, mask)
            out.append((self.next_id, frame, mask))
            self.next_id += 1
        return out


class AuxiliaryNode:
    """Announces its profile, then executes offloaded batches and reports back."""

    def __init__(self, endpoint: Endpoint, samples: Sequence[ProfileSample], profile_batch_size: int):
        self.ep = endpoint
        self.samples = list(samples)
        self.curves = build_cost_curves(self.samples)
        self.profile_batch_size = profile_batch_size
        self._context: dict | None = None
        self.processed: list[int] = []
        self.ep.subscribe(TOPIC_OFFLOAD, callback=self._on_message)

    def announce(self) -> None:
        for s in self.samples:
            self.ep.publish(TOPIC_PROFILE, MessageKind.PROFILE_REPORT, formats.sample_to_csv_line(s).encode())
        self.ep.publish(TOPIC_PROFILE, MessageKind.CONTROL, json.dumps({"type": "profile_end"}).encode())

    def _on_message(self, msg) -> None:
        if msg.kind == MessageKind.CONTROL:
            self._context = json.loads(msg.payload)
            return
        if msg.kind != MessageKind.FRAME_BATCH:
            return
        ctx = self._context or {}
        frames = decode_frame_batch(msg.payload)
        for wf in frames:
            wf.frame()  # must decode
        n = ctx.get("n_total", len(frames))
        fr = len(frames) / n if n else 0.0
        scale = n / self.profile_batch_size
        ids = [wf.frame_id for wf in frames]
        self.processed.extend(ids)
        result = {
            "batch": ctx.get("batch"),
            "frame_ids": ids,
            "t_aux": predict(self.curves, "t1", fr) * scale,
            "e_aux": predict(self.curves, "e1", fr) * scale,
        }
        self.ep.publish(TOPIC_RESULT, MessageKind.RESULT, json.dumps(result).encode())


def _collect_profile(sub) -> list[ProfileSample]:
    samples = []
    while True:
        msg = sub.get(timeout=RESULT_TIMEOUT_S)
        if msg.kind == MessageKind.CONTROL:
            return samples
        if msg.kind == MessageKind.PROFILE_REPORT:
            samples.append(formats.parse_profile_line(msg.payload.decode("utf-8")))


def _load_profile(cfg: ScenarioConfig) -> list[ProfileSample]:
    return formats.load_profile_csv(cfg.profile_source)


def _forced_decision(curves: CostCurves, cons, r: float) -> SplitDecision:
    ok, violations = solver.feasible(r, cons, curves)
    return SplitDecision(
        ratio=r,
        predicted_total_time=solver.objective_value(solver.Objective(curves), r),
        predicted_energy=solver.predicted_energy(curves, r),
        predicted_memory=solver.predicted_memory(curves, r),
        feasible=ok,
        gating_reason=GatingReason.SOLVED,
        violations=tuple(violations),
    )


class _Primary:
    def __init__(self, cfg: ScenarioConfig, ep: Endpoint, curves: CostCurves, result_sub):
        self.cfg = cfg
        self.ep = ep
        self.curves = curves
        self.results = result_sub
        self.source = FrameSource(cfg)
        self.battery: BatteryState | None = cfg.battery
        self.clock = 0.0
        self.report = RunReport()
        self.halted = False
        self.seen_ids: set[int] = set()

    def _distance(self, index: int) -> float:
        if self.cfg.mode == MOBILE:
            mob = dataclasses.replace(self.cfg.mobility, elapsed=index * self.cfg.batch_interval_s)
            return netmodel.distance_at(mob)
        return self.cfg.distance_m

    def _link_latency(self, distance: float, n: int, bits: float, full_bits: float) -> tuple[float, float]:
        """(full-batch latency used for gating, latency of ``bits`` actually sent)."""
        link = self.cfg.link
        scale = n / self.cfg.profile_batch_size
        if isinstance(link, netmodel.LatencyDistanceModel):
            full = link.latency(distance)
            return full, (full * bits / full_bits if full_bits else 0.0)
        if isinstance(link, netmodel.LinkSpec):
            rate = netmodel.data_rate(link, distance)
            return netmodel.offload_latency(full_bits, rate), netmodel.offload_latency(bits, rate)
        full = predict(self.curves, "t3", 1.0) * scale
        return full, 0.0  # the per-share value is computed from T3 by the caller

    def run_batch(self, index: int) -> None:
        cfg = self.cfg
        batch = self.source.batch()
        if cfg.dedup_threshold is not None:
            keep = dedup_indices([f for _, f, _ in batch], cfg.dedup_threshold)
            kept = [batch[i] for i in keep]
        else:
            kept = batch
        n = len(kept)
        n_deduped = len(batch) - n
        scale = n / cfg.profile_batch_size
        full_bits = n * cfg.bytes_per_image * 8.0
        distance = self._distance(index)
        current_latency, _ = self._link_latency(distance, n, 0.0, full_bits)

        if cfg.force_ratio is not None:
            decision = _forced_decision(self.curves, cfg.constraints, cfg.force_ratio)
        else:
            decision = solver.select_split(
                solver.SplitState(
                    curves=self.curves,
                    constraints=cfg.constraints,
                    current_latency_s=current_latency,
                    battery=self.battery,
                    free_memory=cfg.free_memory_pct,
                )
            )
        halted = decision.gating_reason == GatingReason.LATENCY_HALT
        if halted:
            self.report.halts.append([self.clock, decision.gating_reason.value])
            self.halted = True

        local, offload = split_batch(kept, decision.ratio)
        k = len(offload)
        fr = k / n if n else 0.0

        wire: list[WireFrame] = []
        bits = 0.0
        for fid, frame, mask in offload:
            if cfg.masking_enabled:
                masked = apply_mask(frame, mask)
                wire.append(pack_frame(fid, masked.frame, rle=True))
                bits += cfg.bytes_per_image * 8.0 * (masked.compressed_bytes / masked.raw_bytes)
            else:
                wire.append(pack_frame(fid, frame))
                bits += cfg.bytes_per_image * 8.0

        if k == 0:
            t_off = 0.0
        elif cfg.link is None:
            t_off = predict(self.curves, "t3", fr) * scale * (bits / (k * cfg.bytes_per_image * 8.0))
        else:
            t_off = self._link_latency(distance, n, bits, full_bits)[1]

        t_aux = e_aux = 0.0
        if k:
            ctx = {"type": "batch", "batch": index, "n_total": n}
            self.ep.publish(TOPIC_OFFLOAD, MessageKind.CONTROL, json.dumps(ctx).encode())
            self.ep.publish(TOPIC_OFFLOAD, MessageKind.FRAME_BATCH, encode_frame_batch(wire), latency=t_off)
            self.report.frame_batches_sent += 1
            if self.halted:
                self.report.frame_batches_after_halt += 1
            t_aux, e_aux = self._await_result(index, [fid for fid, _, _ in offload])

        t_pri = predict(self.curves, "t2", fr) * scale
        e_pri = predict(self.curves, "e2", fr) * scale
        if cfg.masking_enabled:
            t_pri += cfg.detector_latency_s * k
        t_solver = 0.0 if cfg.force_ratio is not None else cfg.solver_time_s
        e_solver = energy.solver_energy(cfg.solver_power_w, t_solver)
        e_off = energy.offload_energy(t_off, cfg.radio_powers_w)
        t_compute = t_aux + t_pri
        t_total = energy.total_latency(t_compute, t_off, t_solver)
        e_total = energy.total_energy(e_aux + e_pri, e_solver, e_off)
        m1 = predict(self.curves, "m1", fr)
        m2 = predict(self.curves, "m2", fr)

        if self.battery is not None:
            self.battery = self.battery.consume(
                e_dnn_j=e_pri + e_solver,
                t_dnn_s=t_pri + t_solver,
                e_drive_j=cfg.drive_power_w * t_total,
                t_drive_s=t_total,
            )

        rep = self.report
        if index == 0:
            rep.split_ratio_used = decision.ratio
        rep.frames_total += len(batch)
        rep.images_local += len(local)
        rep.images_offloaded += k
        rep.images_deduped += n_deduped
        rep.t_total_s += t_total
        rep.t_compute_s += t_compute
        rep.t_offload_s += t_off
        rep.t_solver_s += t_solver
        rep.e_total_j += e_total
        rep.m_peak_pct = [max(rep.m_peak_pct[0], m1), max(rep.m_peak_pct[1], m2)]
        rep.batches.append(
            {
                "batch": index,
                "r": decision.ratio,
                "r_effective": fr,
                "gating_reason": decision.gating_reason.value,
                "feasible": decision.feasible,
                "violations": list(decision.violations),
                "forced": cfg.force_ratio is not None,
                "n_local": len(local),
                "n_offloaded": k,
                "n_deduped": n_deduped,
                "t_total": t_total,
                "t_compute": t_compute,
                "t_aux": t_aux,
                "t_pri": t_pri,
                "t_off": t_off,
                "t_solver": t_solver,
                "e_total": e_total,
                "m1": m1,
                "m2": m2,
                "distance": distance,
                "link_latency": current_latency,
                "payload_bytes": bits / 8.0,
                "halted": halted,
                "clock": self.clock,
            }
        )
        self.clock += t_total

    def _await_result(self, index: int, ids: list[int]) -> tuple[float, float]:
        while True:
            msg = self.results.get(timeout=RESULT_TIMEOUT_S)
            if msg.kind != MessageKind.RESULT:
                continue
            res = json.loads(msg.payload)
            if res.get("batch") != index:
                continue
            got = res["frame_ids"]
            if sorted(got) != sorted(ids) or len(set(got)) != len(got) or self.seen_ids.intersection(got):
                raise TransportError(f"batch {index}: result frame ids do not match the offloaded set")
            self.seen_ids.update(got)
            return float(res["t_aux"]), float(res["e_aux"])


def run_scenario(cfg: ScenarioConfig, transport: str = "inproc") -> RunReport:
    """Run a scenario end to end and return its report."""
    started = time.perf_counter()
    samples = _load_profile(cfg)
    if transport == "inproc":
        bus = InProcBus()
        primary_ep, aux_ep = bus.pair()
    elif transport == "socket":
        primary_ep, aux_ep = socket_pair()
    else:
        raise ConfigError(f"unknown transport {transport!r}")

    try:
        profile_sub = primary_ep.subscribe(TOPIC_PROFILE)
        result_sub = primary_ep.subscribe(TOPIC_RESULT)
        try:
            aux = AuxiliaryNode(aux_ep, samples, cfg.profile_batch_size)
        except FitError as exc:
            raise ProfileError(f"{cfg.profile_source}: {exc}") from exc
        aux.announce()
        curves = build_cost_curves(_collect_profile(profile_sub))
        primary = _Primary(cfg, primary_ep, curves, result_sub)
        for i in range(cfg.num_batches):
            primary.run_batch(i)
        primary_ep.publish(TOPIC_OFFLOAD, MessageKind.CONTROL, json.dumps({"type": "end"}).encode())
    finally:
        primary_ep.close()
        aux_ep.close()

    rep = primary.report
    processed = rep.images_local + rep.images_offloaded
    rep.ms_per_image = 1000.0 * rep.t_total_s / processed if processed else 0.0
    rep.wall_time_s = time.perf_counter() - started
    logger.info(
        "scenario done: r=%.3f t_total=%.2fs (%d batches, wall %.3fs, %s transport)",
        rep.split_ratio_used,
        rep.t_total_s,
        cfg.num_batches,
        rep.wall_time_s,
        transport,
    )
    return rep


def sweep(cfg: ScenarioConfig, ratios: Sequence[float], transport: str = "inproc") -> list[tuple[float, RunReport]]:
    return [(r, run_scenario(cfg.replace(force_ratio=r), transport)) for r in ratios]


def baseline_time(cfg: ScenarioConfig) -> float:
    """Total time with everything processed on the primary."""
    return run_scenario(cfg.replace(force_ratio=0.0)).t_total_s


__all__ = [
    "AuxiliaryNode",
    "FrameSource",
    "RunReport",
    "baseline_time",
    "offload_count",
    "run_scenario",
    "split_batch",
    "sweep",
]

