import csv
import json
from dataclasses import replace

import numpy as np
import pytest

from optsensor import (ExperimentConfig, InitialCondition, PdeModel, TrainingConfig,
                       build_grid, builtin_experiment, export_plot_data, l1_error_over_time,
                       load_config, run_experiment, save_config, simulate, stability_margin)
from optsensor.cli import main
from optsensor.experiments import BUILTIN_NAMES, ExperimentError, alpha_sweep


def small(name="heat1d-ic1", **kw):
    cfg = builtin_experiment(name)
    cfg = replace(cfg, K=12, training=replace(cfg.training, epochs=60),
                  optimizer=replace(cfg.optimizer, max_outer_iters=8))
    return replace(cfg, **kw)


def test_builtin_parameters():
    heat = builtin_experiment("heat1d-ic1")
    assert heat.model.coefficient == 1e-4 and heat.alpha == 5.0 and heat.grid.c == 101
    assert heat.dt == 0.1 and heat.grid.h[0] == pytest.approx(1e-2)
    wave = builtin_experiment("wave1d-ic1")
    assert wave.model.coefficient == 3e-3 and wave.alpha == 2.0
    h2 = builtin_experiment("heat2d")
    assert h2.alpha == 10.0 and h2.grid.h[0] == pytest.approx(3e-2, rel=0.02)
    assert builtin_experiment("heat1d-step").initial_condition.kind.value == "heaviside_half"


@pytest.mark.parametrize("name", BUILTIN_NAMES)
def test_builtins_are_stable(name):
    cfg = builtin_experiment(name)
    assert stability_margin(cfg.model, cfg.grid, cfg.dt) < cfg.model.stability_bound


def test_unknown_builtin():
    with pytest.raises(KeyError):
        builtin_experiment("heat3d")


def test_alpha_sweep_values():
    cfgs = alpha_sweep(builtin_experiment("heat2d"))
    assert [c.alpha for c in cfgs] == [1.0, 10.0, 50.0]
    assert len({c.hash() for c in cfgs}) == 3


def test_l1_examples(rng):
    g = build_grid(1, 1.0, 11)
    traj = simulate(PdeModel("heat1d", 1e-2), rng.normal(size=11), g, 0.1, 6)
    np.testing.assert_array_equal(l1_error_over_time(traj, traj.snapshots[1:]), 0.0)
    np.testing.assert_allclose(l1_error_over_time(traj, traj.snapshots[1:] + 0.3), 0.3, rtol=1e-14)
    P = rng.normal(size=(6, 11))
    oracle = [sum(abs(traj.snapshots[k + 1, i] - P[k, i]) * g.quad_weights[i] for i in range(11))
              for k in range(6)]
    np.testing.assert_allclose(l1_error_over_time(traj, P), oracle, rtol=1e-12)
    with pytest.raises(ValueError):
        l1_error_over_time(traj, P[:5])


def test_l1_2d_constant_offset():
    g = build_grid(2, (1.0, 1.0), (5, 6))
    traj = simulate(PdeModel("heat2d", 1e-4), InitialCondition("poly2d"), g, 0.1, 3)
    np.testing.assert_allclose(l1_error_over_time(traj, traj.snapshots[1:] - 0.25), 0.25, rtol=1e-14)


@pytest.mark.parametrize("name", BUILTIN_NAMES)
def test_config_round_trip(tmp_path, name):
    cfg = replace(builtin_experiment(name).with_seed(7), snapshot_steps=(0, 3), output_dir="x")
    back = load_config(save_config(cfg, tmp_path / "c.json"))
    assert back == cfg
    assert back.hash() == cfg.hash()


def test_hash_ignores_output_dir():
    cfg = builtin_experiment("heat1d-ic2")
    assert replace(cfg, output_dir="elsewhere").hash() == cfg.hash()
    assert replace(cfg, alpha=1.0).hash() != cfg.hash()


def test_unstable_config_refused():
    cfg = small(dt=1.0)
    with pytest.raises(ExperimentError) as exc:
        run_experiment(cfg)
    assert exc.value.stage == "config"


def test_dimension_mismatch_rejected():
    with pytest.raises(ValueError):
        replace(builtin_experiment("heat1d-ic1"), initial_condition=InitialCondition("poly2d"))


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_training_failure_tagged(tmp_path):
    cfg = small(training=TrainingConfig(learning_rate=1e200, epochs=50))
    with pytest.raises(ExperimentError) as exc:
        run_experiment(cfg, tmp_path)
    assert exc.value.stage == "train"
    assert (tmp_path / "trajectory.npz").exists()  # partial artifacts kept


def read(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


@pytest.mark.parametrize("name", ["heat1d-ic1", "wave1d-ic2"])
def test_run_and_export(tmp_path, name):
    res = run_experiment(small(name), tmp_path)
    assert res.cost_final.total <= res.trace.records[0].J
    assert res.cost_final.total == min(res.trace.accepted_J())
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["config_hash"] == res.config.hash()
    assert read(tmp_path / "cost_trace.csv")[0] == \
        "iter,J,sensor_term,error_term,pg_norm,coverage,step,accepted".split(",")
    rows = read(tmp_path / "l1_error.csv")
    assert rows[0] == ["step", "t", "l1_error"] and len(rows) == 13
    assert read(tmp_path / "sensors.csv")[0] == ["index", "x", "omega", "sensor_active"]
    snaps = sorted(p.name for p in (tmp_path / "snapshots").iterdir())
    assert snaps == [f"step_{k:05d}.csv" for k in (0, 3, 6, 9, 12)]
    s0 = read(tmp_path / "snapshots" / "step_00000.csv")
    assert s0[0] == ["x", "u_r", "u_p", "sensor_active"]
    u_r = np.array([float(r[1]) for r in s0[1:]])
    np.testing.assert_array_equal(u_r, res.trajectory.snapshots[0])

    before = {p: p.read_bytes() for p in tmp_path.rglob("*.csv")}
    export_plot_data(res, tmp_path)
    assert {p: p.read_bytes() for p in tmp_path.rglob("*.csv")} == before


def test_2d_export_columns(tmp_path):
    cfg = small("heat2d", n_points=(8, 7), K=4)
    res = run_experiment(cfg, tmp_path)
    assert read(tmp_path / "snapshots" / "step_00002.csv")[0] == ["x", "y", "u_r", "u_p", "sensor_active"]
    assert len(read(tmp_path / "sensors.csv")) == 57
    assert res.l1_error.shape == (4,)


def test_same_seed_same_bytes(tmp_path):
    cfg = small("heat1d-step")
    run_experiment(cfg, tmp_path / "a")
    run_experiment(cfg, tmp_path / "b")
    for p in (tmp_path / "a").rglob("*"):
        if p.is_file():
            assert p.read_bytes() == (tmp_path / "b" / p.relative_to(tmp_path / "a")).read_bytes(), p


def test_seed_changes_result():
    a = run_experiment(small(), None)
    b = run_experiment(small().with_seed(1), None)
    assert a.trace.to_csv() != b.trace.to_csv()


def test_alpha_zero_full_sensing_never_worse():
    res = run_experiment(replace(builtin_experiment("heat1d-ic1"), alpha=0.0))
    sparser = [r.error_term for r in res.trace.records if r.coverage < 1]
    assert sparser
    assert res.cost_all_ones.error_term <= min(sparser)


def test_cli_run_and_report(tmp_path, capsys):
    cfg_path = save_config(small(), tmp_path / "cfg.json")
    assert main(["run", str(cfg_path), "--out", str(tmp_path / "r"), "--iters", "3"]) == 0
    assert (tmp_path / "r" / "manifest.json").exists()
    capsys.readouterr()
    assert main(["report", str(tmp_path / "r")]) == 0
    assert "config_hash" in capsys.readouterr().out


def test_cli_stages(tmp_path):
    cfg_path = save_config(small(), tmp_path / "cfg.json")
    assert main(["simulate", str(cfg_path), "--out", str(tmp_path / "s")]) == 0
    assert (tmp_path / "s" / "trajectory.npz").exists()
    assert main(["train", str(cfg_path), "--out", str(tmp_path / "t")]) == 0
    assert (tmp_path / "t" / "model.npz").exists()
    assert main(["optimize", str(cfg_path), "--out", str(tmp_path / "o"), "--alpha", "1",
                 "--seed", "3"]) == 0
    assert json.loads((tmp_path / "o" / "manifest.json").read_text())["alpha"] == 1.0


def test_cli_failure_has_stage_tag(tmp_path, capsys):
    cfg_path = save_config(small(dt=1.0), tmp_path / "bad.json")
    assert main(["run", str(cfg_path), "--out", str(tmp_path / "r")]) == 1
    assert "error [config]" in capsys.readouterr().err
    assert main(["report", str(tmp_path / "missing")]) == 1
    assert main(["run", "no-such-experiment", "--out", str(tmp_path / "x")]) == 1


@pytest.mark.slow
def test_heat2d_alpha_sweep_coverage_nonincreasing():
    # soft trend check: a larger per-sensor price never buys more sensors here
    cov = [run_experiment(c).coverage for c in alpha_sweep(builtin_experiment("heat2d"))]
    assert all(b <= a for a, b in zip(cov, cov[1:]))
