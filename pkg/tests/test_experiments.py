import filecmp
import json
import os

import numpy as np
import pytest
from dataclasses import replace

from busylab import CycleCaps, Exponential, QueueParams
from busylab import experiments as ex
from busylab.errors import ConfigError


def small_mm1_config(**extra):
    return ex.ExperimentConfig(
        queue=QueueParams(Exponential(0.5), Exponential(1.0)),
        n_cycles=20_000, pilot_cycles=5_000, master_seed=7,
        grid=ex.GridPolicy(lo_q=0.5, hi_q=0.999, points=12),
        extra=extra or {"quantities": ["tau", "area_w", "area_q"]},
    )


def test_config_json_round_trip():
    cmd, cfg = ex.load_preset("heavy-pareto")
    blob = json.dumps(cfg.to_config(), sort_keys=True)
    back = ex.ExperimentConfig.from_config(json.loads(blob))
    assert back.to_config() == cfg.to_config()
    assert back.queue.digest() == cfg.queue.digest()


def test_preset_registry():
    for name in ("engine-mm1-calibration", "heavy-pareto", "conjecture1-pareto",
                 "conjecture2-pareto", "busy-tail-pareto", "mm1-lighttail",
                 "critical-third", "tilt-bridge", "profile-pareto",
                 "profile-mm1", "risk-negative-area", "joint-parallel",
                 "power-discount-pareto"):
        cmd, cfg = ex.load_preset(name)
        assert cmd in ex.COMMAND_RUNNERS
        assert cfg.preset == name or cfg.preset == "heavy-pareto"
    with pytest.raises(ConfigError):
        ex.load_preset("no-such-preset")


def test_tail_experiment_outputs_deterministic(tmp_path):
    cfg = small_mm1_config()
    out1 = tmp_path / "a"
    out2 = tmp_path / "b"
    ex.run_tail_experiment(cfg, out_dir=str(out1))
    ex.run_tail_experiment(cfg, out_dir=str(out2))
    names = sorted(os.listdir(out1))
    assert names == sorted(os.listdir(out2))
    assert "config.json" in names and "summary.json" in names
    for name in names:
        assert filecmp.cmp(out1 / name, out2 / name, shallow=False), name


def test_verify_round_trip_and_tamper(tmp_path):
    cfg = small_mm1_config()
    out = tmp_path / "run"
    ex.run_tail_experiment(cfg, out_dir=str(out))
    report = ex.verify_outputs(str(out))
    assert report["ok"], report
    # tamper with one value
    target = out / "tail_tau.csv"
    text = target.read_text()
    target.write_text(text.replace(text.splitlines()[2],
                                   text.splitlines()[2] + "0"))
    report = ex.verify_outputs(str(out))
    assert not report["ok"]
    assert "tail_tau.csv" in report["differing"]


def test_cycles_experiment_summary(tmp_path):
    cfg = small_mm1_config()
    res = ex.run_cycles_experiment(cfg, out_dir=str(tmp_path))
    s = res["summary"]
    assert abs(s["mean_n"] - 2.0) < 0.1
    assert abs(s["mean_tau"] - 2.0) < 0.15
    assert (tmp_path / "cycles.csv").exists()
    lines = (tmp_path / "cycles.csv").read_text().strip().split("\n")
    assert len(lines) == cfg.n_cycles + 1


def test_fit_experiment_mm1(tmp_path):
    cmd, cfg = ex.load_preset("mm1-lighttail")
    cfg = replace(cfg, n_cycles=300_000, pilot_cycles=50_000)
    res = ex.run_fit_experiment(cfg, out_dir=str(tmp_path))
    info = res["fit_info"]
    assert "psi" in info["coefficients"]
    assert abs(info["candidates"]["mm1_psi"] - 0.3986) < 1e-3
    assert abs(info["candidates"]["kyprianou_comparator"] - 0.21013) < 1e-4
    fit_json = json.loads((tmp_path / "fit.json").read_text())
    assert fit_json["coefficients"]["psi"]["value"] == \
        info["coefficients"]["psi"]["value"]


def test_profile_experiment(tmp_path):
    cmd, cfg = ex.load_preset("profile-mm1")
    cfg = replace(cfg, n_cycles=20_000,
                  extra={**cfg.extra, "level_quantile": 0.995})
    res = ex.run_profile_experiment(cfg, out_dir=str(tmp_path))
    prof = res["profile"]
    assert 0.0 < prof.peak_fraction < 1.0
    assert prof.n_qualifying >= 30
    data = json.loads((tmp_path / "profile.json").read_text())
    assert data["peak_fraction"] == prof.peak_fraction
    csv_lines = (tmp_path / "profile.csv").read_text().strip().split("\n")
    assert len(csv_lines) == prof.n_bins + 2  # meta line + header + bins


def test_risk_experiment(tmp_path):
    cmd, cfg = ex.load_preset("risk-negative-area")
    cfg = replace(cfg, n_cycles=4_000)
    res = ex.run_risk_experiment(cfg, out_dir=str(tmp_path))
    m = res["moments"]
    assert m["mean"] <= 0.0
    assert 0.0 <= m["fraction_negative_paths"] <= 1.0
    assert (tmp_path / "risk.json").exists()


def test_joint_experiment(tmp_path):
    cmd, cfg = ex.load_preset("joint-parallel")
    cfg = replace(cfg, n_cycles=4_000)
    res = ex.run_joint_experiment(cfg, out_dir=str(tmp_path))
    rows = res["table"]
    by_xa = {(r["x"], r["a"]): r for r in rows}
    for r in rows:
        # joint tail dominated by both marginals; a = 0 equals marginal 1
        assert r["p_joint"] <= min(r["p_marginal_1"], r["p_marginal_2"]) + 1e-12
        if r["a"] == 0.0:
            assert r["p_joint"] == pytest.approx(r["p_marginal_1"])
    assert (tmp_path / "joint.csv").exists()


def test_tilt_experiment_small(tmp_path):
    cmd, cfg = ex.load_preset("tilt-bridge")
    cfg = replace(cfg, n_cycles=200_000, pilot_cycles=50_000,
                  extra={**cfg.extra, "n_tilted": 30_000,
                         "deep_levels": [60.0]})
    res = ex.run_tilt_experiment(cfg, out_dir=str(tmp_path))
    assert res["gamma"] == 0.26
    for o in res["overlap"]:
        assert o["ci_overlap"], o
    assert (tmp_path / "bridge.json").exists()


def test_grid_policy_variants():
    rng = np.random.default_rng(1)
    values = rng.exponential(1.0, 20_000)
    g1 = ex.GridPolicy(lo_q=0.9, hi_q=0.999, points=10).build(values)
    assert len(g1) == 10 and np.all(np.diff(g1) > 0)
    g2 = ex.GridPolicy(points=7, decades=2.0, lo_q=0.9).build(values)
    assert g2[-1] == pytest.approx(g2[0] * 100.0)
    g3 = ex.GridPolicy(points=5, x_lo=3.0, x_hi=30.0).build(values)
    assert g3[0] == 3.0 and g3[-1] == 30.0
    g4 = ex.GridPolicy(lo_q=0.9, hi_q=0.999, points=10, extend_hi=2.0).build(values)
    assert g4[-1] == pytest.approx(g1[-1] * 2.0)


def test_experiment_config_validation():
    with pytest.raises(ConfigError):
        ex.ExperimentConfig.from_config({"n_cycles": 10})
    with pytest.raises(ConfigError) as err:
        ex.ExperimentConfig.from_config({
            "queue": {"interarrival": {"family": "exponential", "rate": 1.0},
                      "service": {"family": "exponential", "rate": 1.0}},
            "n_cycles": 10})
    assert any("CycleCaps" in v for v in err.value.violations)
