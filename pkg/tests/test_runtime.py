import json

import pytest

from splitedge import formats
from splitedge.errors import ConfigError, ProfileError
from splitedge.formats import bundled_path
from splitedge.model import BatteryState, ConstraintSet, MobilityState
from splitedge.netmodel import LatencyDistanceModel, LinkSpec
from splitedge.runtime import (
    MOBILE,
    ScenarioConfig,
    config_from_dict,
    load_scenario,
    offload_count,
    run_scenario,
    split_batch,
    sweep,
)
from splitedge.runtime.orchestrator import baseline_time
from splitedge.runtime.scenario import config_to_dict

CAPS = ConstraintSet(tau=68.34, k_devices=2, w_max=(7.0, 7.0), m_max=(65.0, 65.0))
MOBILE_LINK = LatencyDistanceModel(0.020319940476190476, 0.05781547619047624, 1.5019047619047643)


def static_cfg(**kw):
    kw.setdefault("constraints", CAPS)
    return ScenarioConfig(**kw)


def mobile_cfg(**kw):
    base = dict(
        mode=MOBILE,
        link=MOBILE_LINK,
        mobility=MobilityState(1.0, 3.0, initial_distance=2.0),
        batch_interval_s=1.0,
        num_batches=8,
        constraints=ConstraintSet(**{**CAPS.to_dict(), "beta": 5.0}),
        batch_size=20,
    )
    base.update(kw)
    return ScenarioConfig(**base)


def test_split_batch_rounding():
    frames = list(range(100))
    local, off = split_batch(frames, 0.7)
    assert len(off) == 70 and len(local) == 30 and off == frames[:70]
    assert split_batch(frames, 0.0) == (frames, [])
    assert offload_count(3, 0.5) == 2  # 1.5 -> 2
    assert offload_count(5, 0.5) == 2  # 2.5 -> 2
    assert offload_count(0, 0.7) == 0


def test_static_solved_run():
    # PAPER: split about 70%, total time 36.43 s after the reduction
    rep = run_scenario(static_cfg())
    assert rep.split_ratio_used == pytest.approx(0.7, abs=0.1)
    assert rep.t_total_s == pytest.approx(36.43, rel=0.15)
    assert rep.images_offloaded == 75 and rep.images_local == 25
    assert rep.frame_batches_sent == 1 and rep.halts == []
    assert rep.t_solver_s == pytest.approx(0.05)


def test_forced_zero_matches_baseline():
    # PAPER: Table I all-local time 68.34 s
    rep = run_scenario(static_cfg(force_ratio=0.0))
    assert rep.t_total_s == pytest.approx(68.34, rel=0.10)
    assert rep.images_offloaded == 0 and rep.frame_batches_sent == 0
    assert baseline_time(static_cfg()) == rep.t_total_s


def test_determinism_byte_identical():
    cfg = static_cfg(num_batches=3, masking_enabled=True, dedup_threshold=0.97, duplicate_rate=0.3, seed=5)
    assert run_scenario(cfg).to_json() == run_scenario(cfg).to_json()


@pytest.mark.parametrize("seed", [0, 1, 2, 3])
def test_conservation(seed):
    cfg = static_cfg(batch_size=37, num_batches=3, dedup_threshold=0.97, duplicate_rate=0.4, seed=seed)
    rep = run_scenario(cfg)
    assert rep.images_deduped > 0
    assert rep.images_local + rep.images_offloaded + rep.images_deduped == rep.frames_total == 37 * 3
    for b in rep.batches:
        assert b["n_local"] + b["n_offloaded"] + b["n_deduped"] == 37


def test_masking_shrinks_offload():
    plain = run_scenario(static_cfg())
    masked = run_scenario(static_cfg(masking_enabled=True))
    assert masked.t_offload_s < plain.t_offload_s
    assert masked.batches[0]["payload_bytes"] < plain.batches[0]["payload_bytes"]
    # detector overhead: 3.5 ms per offloaded frame on the primary
    assert masked.batches[0]["t_pri"] - plain.batches[0]["t_pri"] == pytest.approx(0.0035 * 75)


def test_sweep_directions():
    # PAPER: Table III directions, T3 up and T1 + T2 down as r grows
    ratios = [round(0.1 * i, 1) for i in range(2, 10)]
    rows = sweep(static_cfg(), ratios)
    t_off = [rep.t_offload_s for _, rep in rows]
    compute = [rep.t_compute_s for _, rep in rows]
    assert all(b >= a for a, b in zip(t_off, t_off[1:]))
    assert all(b <= a for a, b in zip(compute, compute[1:]))
    assert [rep.images_offloaded for _, rep in rows] == [20, 30, 40, 50, 60, 70, 80, 90]


def test_mobile_halts_and_stays_local():
    rep = run_scenario(mobile_cfg())
    dist = [b["distance"] for b in rep.batches]
    assert all(b > a for a, b in zip(dist, dist[1:]))
    halted = [b["halted"] for b in rep.batches]
    first = halted.index(True)
    assert all(halted[first:]) and not any(halted[:first])
    assert dist[first] < 26.0
    assert rep.halts
    assert rep.frame_batches_after_halt == 0
    assert rep.frame_batches_sent == first
    for b in rep.batches[first:]:
        assert b["r"] == 0.0 and b["n_offloaded"] == 0
    lat = [b["link_latency"] for b in rep.batches]
    assert all(b >= a for a, b in zip(lat, lat[1:]))


def test_shannon_link():
    lk = LinkSpec(bandwidth_hz=20e6, path_loss_exponent=2.0, tx_power_w=0.1, noise_power_w=1e-9)
    near = run_scenario(static_cfg(link=lk, distance_m=2.0))
    far = run_scenario(static_cfg(link=lk, distance_m=40.0))
    assert far.t_offload_s > near.t_offload_s > 0


def test_battery_gate_in_run():
    battery = BatteryState.from_mah(4000, 11.1, 0.7).consume(e_dnn_j=100_000, t_dnn_s=36_000)
    cons = ConstraintSet(**{**CAPS.to_dict(), "e_max": 10.0})
    rep = run_scenario(static_cfg(battery=battery, constraints=cons, num_batches=2))
    assert rep.batches[0]["gating_reason"] == "BATTERY_GATE"
    assert rep.split_ratio_used >= run_scenario(static_cfg()).split_ratio_used


def test_memory_gate_in_run():
    rep = run_scenario(static_cfg(free_memory_pct=(10.0, 90.0)))
    assert rep.batches[0]["gating_reason"] == "MEMORY_GATE" and rep.images_offloaded == 0


def test_socket_matches_inproc():
    cfg = mobile_cfg(masking_enabled=True, dedup_threshold=0.97, duplicate_rate=0.2)
    a = run_scenario(cfg)
    b = run_scenario(cfg, transport="socket")
    assert a.decisions() == b.decisions()
    assert a.to_json() == b.to_json()


def test_unknown_transport():
    with pytest.raises(ConfigError):
        run_scenario(static_cfg(), transport="carrier-pigeon")


def test_bad_profile_source(tmp_path):
    with pytest.raises(ProfileError):
        run_scenario(static_cfg(profile_source=str(tmp_path / "missing.csv")))
    bad = tmp_path / "bad.csv"
    bad.write_text(",".join(formats.PROFILE_COLUMNS) + "\n0.5,1,1,1,1,1,1\n")
    with pytest.raises(ProfileError) as exc:
        run_scenario(static_cfg(profile_source=str(bad)))
    assert exc.value.line == 2


def test_config_validation():
    with pytest.raises(ConfigError):
        ScenarioConfig(mode=MOBILE)
    with pytest.raises(ConfigError):
        ScenarioConfig(batch_size=0)
    with pytest.raises(ConfigError):
        ScenarioConfig(seed=-1)
    with pytest.raises(ConfigError):
        config_from_dict({"bogus": 1})
    with pytest.raises(ConfigError):
        config_from_dict({"link": {"type": "smoke-signals"}})
    with pytest.raises(ConfigError):
        config_from_dict({"battery": {"capacity_mah": 4000, "discharge_rate": 0.7}})


def test_bundled_scenarios():
    static = load_scenario(bundled_path("scenarios/static.json"))
    assert static.constraints == CAPS
    mobile = load_scenario(bundled_path("scenarios/mobile.json"))
    assert mobile.mode == MOBILE
    assert mobile.link(26.0) == pytest.approx(13.9, rel=0.10)


def test_config_dict_round_trip(tmp_path):
    cfg = load_scenario(bundled_path("scenarios/mobile.json"))
    d = config_to_dict(cfg)
    path = tmp_path / "s.json"
    path.write_text(formats.dumps(d))
    again = load_scenario(path)
    assert again == cfg


def test_batch_csv_round_trip(tmp_path):
    rep = run_scenario(mobile_cfg())
    path = tmp_path / "b.csv"
    formats.write_batch_csv(path, rep.batches)
    back = formats.read_batch_csv(path)
    for orig, row in zip(rep.batches, back):
        for key in formats.BATCH_COLUMNS:
            assert row[key] == orig[key]


def test_report_json_parses():
    rep = run_scenario(static_cfg())
    data = json.loads(rep.to_json())
    assert data["split_ratio_used"] == rep.split_ratio_used
    assert "wall_time_s" not in data and rep.wall_time_s > 0
