"""File formats: profile CSV, curves JSON, latency-distance CSV, per-batch report CSV."""

from __future__ import annotations

import csv
import io
import json
import math
import os
from importlib import resources
from typing import Iterable, Sequence

from .errors import ProfileError, RangeError
from .model import CostCurves, ProfileSample, validate_sample

PROFILE_COLUMNS = ("split_ratio", "t_aux_s", "p_aux_w", "m_aux_pct", "t_pri_s", "t_off_s", "p_pri_w", "m_pri_pct")
BATCH_COLUMNS = ("batch", "r", "t_total", "t_off", "e_total", "m1", "m2", "distance", "halted")


def bundled_path(name: str) -> str:
    return str(resources.files("splitedge") / "data" / name)


def resolve_path(path: str | os.PathLike, base_dir: str | None = None) -> str:
    """Expand ``bundled:<name>``; join relative paths onto ``base_dir``."""
    path = os.fspath(path)
    if path.startswith("bundled:"):
        return bundled_path(path[len("bundled:") :])
    if base_dir and not os.path.isabs(path):
        return os.path.join(base_dir, path)
    return path


def sample_to_row(s: ProfileSample) -> list[float]:
    return [s.split_ratio, s.t_aux, s.p_aux, s.m_aux, s.t_pri, s.t_off, s.p_pri, s.m_pri]


def sample_to_csv_line(s: ProfileSample) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="").writerow(repr(v) for v in sample_to_row(s))
    return buf.getvalue()


def parse_profile_line(line: str, lineno: int | None = None) -> ProfileSample:
    fields = next(csv.reader([line]))
    if len(fields) != len(PROFILE_COLUMNS):
        raise ProfileError(f"expected {len(PROFILE_COLUMNS)} columns, got {len(fields)}", lineno)
    try:
        sample = ProfileSample(*(float(f) for f in fields))
    except ValueError as exc:
        raise ProfileError(f"non-numeric field: {exc}", lineno) from exc
    try:
        validate_sample(sample)
    except RangeError as exc:
        raise ProfileError(str(exc), lineno) from exc
    return sample


def parse_profile_csv(text: str) -> list[ProfileSample]:
    lines = text.splitlines()
    if not lines or not lines[0].strip():
        raise ProfileError("no samples")
    header = tuple(h.strip() for h in next(csv.reader([lines[0]])))
    if header != PROFILE_COLUMNS:
        raise ProfileError(f"bad header {header!r}; expected {','.join(PROFILE_COLUMNS)}", 1)
    samples = [parse_profile_line(line, i) for i, line in enumerate(lines[1:], start=2) if line.strip()]
    if not samples:
        raise ProfileError("no samples")
    return samples


def load_profile_csv(path: str | os.PathLike) -> list[ProfileSample]:
    try:
        with open(resolve_path(path), encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ProfileError(f"cannot read profile {path}: {exc}") from exc
    return parse_profile_csv(text)


def write_profile_csv(path: str | os.PathLike, samples: Iterable[ProfileSample]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(PROFILE_COLUMNS) + "\n")
        for s in samples:
            fh.write(sample_to_csv_line(s) + "\n")


def load_table1() -> list[ProfileSample]:
    return load_profile_csv(bundled_path("table1.csv"))


def load_latency_samples(path: str | os.PathLike) -> list[tuple[float, float]]:
    with open(resolve_path(path), encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    try:
        return [(float(r["distance_m"]), float(r["latency_s"])) for r in rows]
    except (KeyError, ValueError) as exc:
        raise ProfileError(f"bad latency-distance CSV {path}: {exc}") from exc


def _json_default(obj):
    raise TypeError(f"not JSON serialisable: {type(obj)!r}")


def encode_floats(obj):
    """JSON has no infinity; encode it as the string "inf"."""
    if isinstance(obj, float) and math.isinf(obj):
        return "inf" if obj > 0 else "-inf"
    if isinstance(obj, dict):
        return {k: encode_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [encode_floats(v) for v in obj]
    return obj


def dumps(obj) -> str:
    return json.dumps(encode_floats(obj), indent=2, sort_keys=True, default=_json_default)


def save_curves(path: str | os.PathLike, curves: CostCurves) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(curves.to_dict()))


def load_curves(path: str | os.PathLike) -> CostCurves:
    with open(path, encoding="utf-8") as fh:
        return CostCurves.from_dict(json.load(fh))


def format_batch_row(rec: dict) -> list[str]:
    return [
        str(rec["batch"]),
        repr(float(rec["r"])),
        repr(float(rec["t_total"])),
        repr(float(rec["t_off"])),
        repr(float(rec["e_total"])),
        repr(float(rec["m1"])),
        repr(float(rec["m2"])),
        repr(float(rec["distance"])),
        "1" if rec["halted"] else "0",
    ]


def write_batch_csv(path: str | os.PathLike, records: Sequence[dict]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(BATCH_COLUMNS)
        for rec in records:
            w.writerow(format_batch_row(rec))


def read_batch_csv(path: str | os.PathLike) -> list[dict]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != BATCH_COLUMNS:
            raise ProfileError(f"bad batch CSV header {reader.fieldnames!r}")
        out = []
        for row in reader:
            rec = {k: float(row[k]) for k in BATCH_COLUMNS if k not in ("batch", "halted")}
            rec["batch"] = int(row["batch"])
            rec["halted"] = row["halted"] == "1"
            out.append(rec)
    return out
