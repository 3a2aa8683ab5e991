"""Command-line entry point.

Exit codes: 0 success, 2 input error, 3 fallback (no feasible ratio, memory
gate or latency halt), 4 transport error. ``HETEROEDGE_LOG`` sets the log level.
With ``--server URL`` the fit/solve/run/sweep/mask commands are sent to a
running HTTP service instead of executing in-process.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

from . import formats, service
from .compression import apply_mask, compression_stats
from .errors import SplitEdgeError, TransportError
from .model import CURVE_SPECS
from .pnm import read_frame, read_mask, write_frame
from .schemas import FitRequest, MaskRequest, RunRequest, SolveRequest, SweepRequest

EXIT_OK, EXIT_INPUT, EXIT_FALLBACK, EXIT_TRANSPORT = 0, 2, 3, 4

SWEEP_COLUMNS = ("r", "t_aux", "t_pri", "t_off", "t_total", "e_total", "images_offloaded")

logger = logging.getLogger("splitedge.cli")


class InputError(Exception):
    pass


def _call(args, endpoint: str, req) -> dict:
    if not args.server:
        return getattr(service, endpoint)(req)
    import httpx

    url = args.server.rstrip("/") + "/" + endpoint
    try:
        resp = httpx.post(url, json=req.model_dump(mode="json"), timeout=args.timeout)
    except httpx.HTTPError as exc:
        raise TransportError(f"{url}: {exc}") from exc
    if resp.status_code in (400, 422):
        raise InputError(resp.text)
    if resp.status_code != 200:
        raise TransportError(f"{url}: HTTP {resp.status_code} {resp.text}")
    return resp.json()


def _read_text(path: str) -> str:
    try:
        with open(formats.resolve_path(path), encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc


def _read_json(path: str) -> dict:
    try:
        return json.loads(_read_text(path))
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON: {exc}") from exc


def _out_dir(path: str | None) -> Path:
    out = Path(path or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write(path: Path, text: str) -> None:
    path.write_text(text if text.endswith("\n") else text + "\n", encoding="utf-8")
    logger.info("wrote %s", path)


def _scenario_dict(path: str | None) -> dict:
    """Scenario JSON with file references made absolute, so a server can resolve them too."""
    if path is None:
        return {}
    data = _read_json(path)
    if not isinstance(data, dict):
        raise InputError(f"{path}: scenario must be a JSON object")
    base = os.path.dirname(os.path.abspath(formats.resolve_path(path)))
    for key in ("profile", "profile_source"):
        if key in data:
            data[key] = os.path.abspath(formats.resolve_path(data[key], base))
    link = data.get("link")
    if isinstance(link, dict) and "samples" in link:
        link["samples"] = os.path.abspath(formats.resolve_path(link["samples"], base))
    return data


def cmd_fit(args) -> int:
    res = _call(args, "fit", FitRequest(profile_csv=_read_text(args.profile)))
    print(f"{res['samples']} samples")
    print(f"{'curve':<6} {'deg':>3} {'adj_R2':>8}  coefficients (highest degree first)")
    for cid in CURVE_SPECS:
        f = res["fits"][cid]
        coeffs = ", ".join(f"{c:.6g}" for c in f["coefficients"])
        print(f"{cid:<6} {f['degree']:>3} {f['adjusted_r2']:>8.4f}  [{coeffs}]")
    out = Path(args.out or "curves.json")
    out.parent.mkdir(parents=True, exist_ok=True)
    _write(out, formats.dumps(res["curves"]))
    return EXIT_OK


def cmd_solve(args) -> int:
    if args.curves:
        curves = _read_json(args.curves)
    elif args.profile:
        curves = _call(args, "fit", FitRequest(profile_csv=_read_text(args.profile)))["curves"]
    else:
        raise InputError("solve needs --curves or --profile")
    constraints = _read_json(args.constraints) if args.constraints else {}
    req = SolveRequest(
        curves=curves,
        constraints=constraints,
        current_latency_s=args.current_latency,
        free_memory_pct=tuple(args.free_memory),
    )
    decision = _call(args, "solve", req)
    text = formats.dumps(decision)
    print(text)
    if args.out:
        _write(Path(args.out), text)
    return EXIT_FALLBACK if service.is_fallback(decision) else EXIT_OK


def _run_request(args, cls=RunRequest, **extra):
    return cls(
        scenario=_scenario_dict(args.scenario),
        transport=args.transport,
        force_ratio=args.force_ratio,
        seed=args.seed,
        **extra,
    )


def cmd_run(args) -> int:
    report = _call(args, "run", _run_request(args))
    out = _out_dir(args.out)
    _write(out / "report.json", formats.dumps(report))
    formats.write_batch_csv(out / "batches.csv", report["batches"])
    print(
        f"r={report['split_ratio_used']:.4f} t_total={report['t_total_s']:.3f}s "
        f"e_total={report['e_total_j']:.2f}J local={report['images_local']} "
        f"offloaded={report['images_offloaded']} deduped={report['images_deduped']} halts={len(report['halts'])}"
    )
    fell_back = any(b["gating_reason"] in service.FALLBACK_REASONS for b in report["batches"])
    return EXIT_FALLBACK if fell_back else EXIT_OK


def cmd_sweep(args) -> int:
    if args.force_ratio is not None:
        raise InputError("sweep sets the ratio itself; use --ratios")
    ratios = [float(r) for r in args.ratios.split(",")] if args.ratios else None
    extra = {"ratios": ratios} if ratios is not None else {}
    res = _call(args, "sweep", _run_request(args, SweepRequest, **extra))
    out = _out_dir(args.out)
    with open(out / "sweep.csv", "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_COLUMNS)
        for row in res["rows"]:
            w.writerow([repr(row[c]) if isinstance(row[c], float) else row[c] for c in SWEEP_COLUMNS])
    for row, rep in zip(res["rows"], res["reports"]):
        _write(out / f"report_r{row['r']:.2f}.json", formats.dumps(rep))
    print(f"{'r':>5} {'t_aux':>8} {'t_pri':>8} {'t_off':>8} {'t_total':>8}")
    for row in res["rows"]:
        print(f"{row['r']:>5.2f} {row['t_aux']:>8.3f} {row['t_pri']:>8.3f} {row['t_off']:>8.3f} {row['t_total']:>8.3f}")
    return EXIT_OK


def _mask_files(args) -> dict:
    """Mask every ``<name>.pgm``/``.ppm`` in a directory with its ``<name>.pbm``."""
    src = Path(args.input)
    frames = sorted(p for p in src.iterdir() if p.suffix in (".pgm", ".ppm"))
    if not frames:
        raise InputError(f"no .pgm/.ppm frames in {src}")
    out = _out_dir(args.out) if args.out else None
    masked = []
    for p in frames:
        mask_path = p.with_suffix(".pbm")
        if not mask_path.exists():
            raise InputError(f"missing mask {mask_path}")
        m = apply_mask(read_frame(p), read_mask(mask_path))
        masked.append(m)
        if out is not None:
            write_frame(out / p.name, m.frame)
    return compression_stats(masked)


def cmd_mask(args) -> int:
    if args.input:
        if args.server:
            raise InputError("--input is read locally and cannot be combined with --server")
        stats = _mask_files(args)
    else:
        stats = _call(
            args,
            "mask",
            MaskRequest(count=args.count, seed=args.seed or 0, background_fraction=args.background_fraction),
        )
    text = formats.dumps(stats)
    print(text)
    if args.out:
        _write(_out_dir(args.out) / "mask_stats.json", text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="splitedge", description="Split-ratio offloading between two edge nodes.")
    p.add_argument("--server", help="base URL of a running splitedge HTTP service")
    p.add_argument("--timeout", type=float, default=60.0, help="HTTP timeout in seconds (with --server)")
    sub = p.add_subparsers(dest="command", required=True)

    f = sub.add_parser("fit", help="fit cost curves from a profile CSV")
    f.add_argument("--profile", required=True)
    f.add_argument("--out", help="curves JSON path (default curves.json)")
    f.set_defaults(func=cmd_fit)

    s = sub.add_parser("solve", help="pick a split ratio")
    s.add_argument("--curves", help="curves JSON from `fit`")
    s.add_argument("--profile", help="profile CSV to fit on the fly")
    s.add_argument("--constraints", help="constraints JSON")
    s.add_argument("--current-latency", type=float, default=0.0, help="measured offload latency in seconds")
    s.add_argument("--free-memory", type=float, nargs=2, default=(100.0, 100.0), metavar=("AUX", "PRI"))
    s.add_argument("--out")
    s.set_defaults(func=cmd_solve)

    for name, func, helptext in (
        ("run", cmd_run, "run a scenario"),
        ("sweep", cmd_sweep, "run a scenario at a series of forced ratios"),
    ):
        r = sub.add_parser(name, help=helptext)
        r.add_argument("--scenario", help="scenario JSON (default: built-in defaults)")
        r.add_argument("--out", help="output directory (default .)")
        r.add_argument("--force-ratio", type=float)
        r.add_argument("--transport", choices=("inproc", "socket"), default="inproc")
        r.add_argument("--seed", type=int)
        r.set_defaults(func=func)
    sub.choices["sweep"].add_argument("--ratios", help="comma-separated ratios (default 0.2,...,0.9)")

    m = sub.add_parser("mask", help="mask frames and report RLE compression")
    m.add_argument("--input", help="directory of .pgm/.ppm frames with matching .pbm masks")
    m.add_argument("--count", type=int, default=50, help="synthetic frames when --input is absent")
    m.add_argument("--background-fraction", type=float, default=0.72)
    m.add_argument("--seed", type=int)
    m.add_argument("--out")
    m.set_defaults(func=cmd_mask)
    return p


def main(argv=None) -> int:
    level = os.environ.get("HETEROEDGE_LOG", "WARNING").upper()
    if not isinstance(logging.getLevelName(level), int):
        level = "WARNING"
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except TransportError as exc:
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        return EXIT_TRANSPORT
    except SplitEdgeError as exc:
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except KeyError as exc:
        print(f"error: missing field {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
