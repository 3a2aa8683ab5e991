import csv
import json

import numpy as np
import pytest

from splitedge import formats
from splitedge.cli import main
from splitedge.compression import synthetic_scene
from splitedge.formats import bundled_path
from splitedge.pnm import write_frame, write_mask

STATIC = bundled_path("scenarios/static.json")
MOBILE = bundled_path("scenarios/mobile.json")


@pytest.fixture
def curves_json(tmp_path):
    out = tmp_path / "curves.json"
    assert main(["fit", "--profile", "bundled:table1.csv", "--out", str(out)]) == 0
    return out


def write_json(path, data):
    path.write_text(json.dumps(data))
    return str(path)


def test_fit_prints_seven_curves(tmp_path, capsys, curves_json):
    out = capsys.readouterr().out
    for cid in ("t1", "t2", "t3", "e1", "e2", "m1", "m2"):
        assert f"\n{cid} " in out
    data = json.loads(curves_json.read_text())
    assert set(data["fit_quality"]) == {"t1", "t2", "t3", "e1", "e2", "m1", "m2"}


def test_fit_empty_file(tmp_path, capsys):
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    assert main(["fit", "--profile", str(empty)]) == 2
    assert "no samples" in capsys.readouterr().err


def test_fit_bad_row_reports_line(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text(",".join(formats.PROFILE_COLUMNS) + "\n0.5,1,1,1,1,1,1,1\n1.5,1,1,1,0,1,1,1\n")
    assert main(["fit", "--profile", str(bad)]) == 2
    assert "line 3" in capsys.readouterr().err


def test_fit_exact_quadratic(tmp_path, capsys):
    rows = [",".join(formats.PROFILE_COLUMNS)]
    for r in (0.0, 0.2, 0.4, 0.6, 0.8, 1.0):
        q = 1 - r
        t_aux, t_pri = 10 * r * r, (20 * q * q + 5 * q if r < 1 else 0.0)
        rows.append(f"{r},{t_aux},5,{30 + 20 * r * r},{t_pri},{r * r},5,{40 + 10 * q * q}")
    path = tmp_path / "quad.csv"
    path.write_text("\n".join(rows) + "\n")
    out = tmp_path / "c.json"
    assert main(["fit", "--profile", str(path), "--out", str(out)]) == 0
    q = json.loads(out.read_text())["fit_quality"]
    for cid in ("t1", "t2", "t3", "m1", "m2"):
        assert q[cid] == pytest.approx(1.0, abs=1e-12)


def test_solve_paper_caps(tmp_path, capsys, curves_json):
    cons = write_json(tmp_path / "c.json", {"tau": 68.34, "k_devices": 2, "w_max": [7, 7], "m_max": [65, 65]})
    capsys.readouterr()
    assert main(["solve", "--curves", str(curves_json), "--constraints", cons]) == 0
    d = json.loads(capsys.readouterr().out)
    assert d["gating_reason"] == "SOLVED" and d["ratio"] == pytest.approx(0.7, abs=0.1)


def test_solve_zero_caps_exit_3(tmp_path, capsys, curves_json):
    cons = write_json(tmp_path / "c.json", {"m_max": [0, 0]})
    capsys.readouterr()
    assert main(["solve", "--curves", str(curves_json), "--constraints", cons]) == 3
    assert json.loads(capsys.readouterr().out)["gating_reason"] == "NO_FEASIBLE_RATIO"


def test_solve_latency_halt(tmp_path, capsys):
    cons = write_json(tmp_path / "c.json", {"beta": 0.001})
    assert main(["solve", "--profile", "bundled:table1.csv", "--constraints", cons, "--current-latency", "0.5"]) == 3
    assert json.loads(capsys.readouterr().out)["gating_reason"] == "LATENCY_HALT"


def test_solve_bad_inputs(tmp_path):
    assert main(["solve"]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["solve", "--curves", str(bad)]) == 2
    assert main(["solve", "--curves", write_json(tmp_path / "x.json", {"t1_coeffs": [1, 2, 3]})]) == 2
    assert main(["solve", "--profile", "bundled:table1.csv", "--constraints", write_json(tmp_path / "c.json", {"tau": -1})]) == 2


def test_run_static(tmp_path, capsys):
    assert main(["run", "--scenario", STATIC, "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert len({b["r"] for b in report["batches"]}) == 1
    with open(tmp_path / "batches.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == list(formats.BATCH_COLUMNS)
    assert formats.read_batch_csv(tmp_path / "batches.csv")[0]["r"] == report["batches"][0]["r"]


def test_run_mobile_distance_increases(tmp_path):
    assert main(["run", "--scenario", MOBILE, "--out", str(tmp_path)]) == 3  # halts are fallbacks
    rows = formats.read_batch_csv(tmp_path / "batches.csv")
    dist = [r["distance"] for r in rows]
    assert all(b > a for a, b in zip(dist, dist[1:]))
    assert any(r["halted"] for r in rows)


def test_run_force_ratio_and_seed(tmp_path):
    assert main(["run", "--scenario", STATIC, "--force-ratio", "0.3", "--seed", "9", "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["images_offloaded"] == 30


def test_run_socket_transport(tmp_path):
    assert main(["run", "--scenario", STATIC, "--transport", "socket", "--out", str(tmp_path / "s")]) == 0
    assert main(["run", "--scenario", STATIC, "--out", str(tmp_path / "i")]) == 0
    assert (tmp_path / "s" / "report.json").read_text() == (tmp_path / "i" / "report.json").read_text()


def test_run_missing_scenario(tmp_path):
    assert main(["run", "--scenario", str(tmp_path / "nope.json")]) == 2


def test_sweep_writes_eight_reports(tmp_path, capsys):
    assert main(["sweep", "--scenario", STATIC, "--out", str(tmp_path)]) == 0
    assert len(list(tmp_path.glob("report_r*.json"))) == 8
    with open(tmp_path / "sweep.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    t_off = [float(r["t_off"]) for r in rows]
    compute = [float(r["t_aux"]) + float(r["t_pri"]) for r in rows]
    assert all(b >= a for a, b in zip(t_off, t_off[1:]))
    assert all(b <= a for a, b in zip(compute, compute[1:]))
    assert main(["sweep", "--scenario", STATIC, "--force-ratio", "0.5"]) == 2


def test_mask_synthetic(capsys):
    assert main(["mask", "--count", "10", "--seed", "1"]) == 0
    stats = json.loads(capsys.readouterr().out)
    assert stats["frames"] == 10 and stats["mean_saving"] >= 0.25


def test_mask_directory(tmp_path, capsys):
    src = tmp_path / "in"
    src.mkdir()
    rng = np.random.default_rng(0)
    for i in range(3):
        frame, mask = synthetic_scene(rng, 32, 24)
        write_frame(src / f"f{i}.pgm", frame)
        write_mask(src / f"f{i}.pbm", mask)
    out = tmp_path / "out"
    assert main(["mask", "--input", str(src), "--out", str(out)]) == 0
    assert len(list(out.glob("*.pgm"))) == 3
    assert json.loads((out / "mask_stats.json").read_text())["frames"] == 3
    (src / "f0.pbm").unlink()
    assert main(["mask", "--input", str(src)]) == 2


def test_log_env(monkeypatch, capsys):
    monkeypatch.setenv("HETEROEDGE_LOG", "nonsense")
    assert main(["mask", "--count", "2"]) == 0


def test_unreachable_server(curves_json):
    assert main(["--server", "http://127.0.0.1:9", "--timeout", "2", "solve", "--curves", str(curves_json)]) == 4
