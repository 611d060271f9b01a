import hashlib
import json

import numpy as np
import pytest

from dualbev import cli
from dualbev.config import ConfigError, RunConfig, load_config
from dualbev.raster import read_pgm, read_ppm, write_pgm, write_trajectories_csv
from dualbev.world import WorldModel
from fixtures import road_fixture


def run(argv, capsys=None):
    try:
        code = cli.main([str(a) for a in argv])
    except SystemExit as exc:
        code = exc.code
    out = capsys.readouterr() if capsys else None
    return code, out


def digest(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


def save_world(occ, path, cell=0.5):
    write_pgm(WorldModel(occ, cell).obstacle_raster(), path)
    return path


# ---- configuration


def test_defaults_and_precedence(tmp_path, monkeypatch):
    monkeypatch.delenv("DUALBEV_SEED", raising=False)
    assert load_config() == RunConfig()
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"k": 0.2, "seed": 4, "step_budget": 50}))
    cfg = load_config(path, {"k": 0.9, "seed": None})
    assert (cfg.k, cfg.seed, cfg.step_budget) == (0.9, 4, 50)


def test_env_seed_fills_unset_seed(tmp_path, monkeypatch):
    monkeypatch.setenv("DUALBEV_SEED", "17")
    assert load_config().seed == 17
    assert load_config(overrides={"seed": 3}).seed == 3


def test_unknown_and_invalid_keys(tmp_path):
    with pytest.raises(ConfigError, match="unknown config keys: bogus"):
        RunConfig.from_dict({"bogus": 1})
    with pytest.raises(ConfigError, match="k must"):
        RunConfig(k=2.0)
    with pytest.raises(ConfigError, match="K=3"):
        RunConfig(K=3)
    path = tmp_path / "c.json"
    path.write_text("[1, 2]")
    with pytest.raises(ConfigError, match="JSON object"):
        load_config(path)


def test_config_feeds_planner_and_nav():
    cfg = RunConfig(k=0.3, seed=9, lookahead=6.0, step_budget=33)
    assert cfg.planner().seed == 9 and cfg.planner().lookahead == 6.0
    assert cfg.nav().k == 0.3 and cfg.nav().step_budget == 33
    assert json.loads(cfg.to_json())["curvatures"] == list(cfg.curvatures)


# ---- gen-world


def test_gen_world_files_and_determinism(tmp_path):
    a, b = tmp_path / "a.pgm", tmp_path / "b.pgm"
    for p in (a, b):
        assert run(["gen-world", "--kind", "SCATTER", "--seed", 5, "--dims", "40x30", "--out", p])[0] == 0
    assert (tmp_path / "a.geo.json").exists()
    assert digest(a) == digest(b)
    assert read_pgm(a).cells.shape == (30, 40)


def test_gen_world_usage_errors(tmp_path, capsys):
    code, out = run(["gen-world", "--kind", "empty"], capsys)
    assert code == 2 and "usage" in out.err
    assert run(["gen-world", "--kind", "lava", "--out", tmp_path / "x.pgm"])[0] == 2
    assert run(["gen-world", "--dims", "4x4", "--out", tmp_path / "x.pgm"])[0] == 1


def test_gen_world_io_failure(tmp_path):
    assert run(["gen-world", "--out", tmp_path / "missing" / "w.pgm"])[0] == 1


# ---- make-map


def test_make_map_synth_on_empty_world_fails(tmp_path, capsys):
    world = save_world(np.zeros((20, 20), bool), tmp_path / "w.pgm")
    code, out = run(["make-map", "--world", world, "--out", tmp_path / "m.pgm"], capsys)
    assert code == 1 and "no obstacles" in out.err


def test_make_map_synth_polarity(tmp_path):
    world = tmp_path / "w.pgm"
    run(["gen-world", "--kind", "corridor", "--seed", 1, "--dims", "40x40", "--out", world])
    assert run(["make-map", "--world", world, "--sigma", 2.0, "--out", tmp_path / "m.pgm"])[0] == 0
    occ = read_pgm(world).cells >= 0.5
    raw = np.frombuffer((tmp_path / "m.pgm").read_bytes()[-1600:], np.uint8).reshape(40, 40)
    assert np.all(raw[occ] == 255)
    assert raw[~occ].max() < 255


def test_make_map_fit_requires_trajectories(tmp_path, capsys):
    world = save_world(np.zeros((20, 20), bool), tmp_path / "w.pgm")
    code, out = run(["make-map", "--world", world, "--mode", "fit", "--out", tmp_path / "m.pgm"], capsys)
    assert code == 2 and "--trajectories" in out.err


def test_make_map_fit_logs_curve(tmp_path, capsys):
    _, logs, road = road_fixture()
    occ = ~road  # only the road is bright in the rendered overhead
    world = save_world(occ, tmp_path / "w.pgm")
    write_trajectories_csv(logs, tmp_path / "t.csv")
    code, out = run(["make-map", "--world", world, "--mode", "fit", "--trajectories", tmp_path / "t.csv",
                     "--stroke-radius", 1.0, "--epochs", 12, "--out", tmp_path / "m.pgm"], capsys)
    assert code == 0
    losses = [float(line.split()[-1]) for line in out.err.splitlines() if line.startswith("epoch ")]
    assert len(losses) >= 10 and losses[9] <= losses[0]
    hint = read_pgm(tmp_path / "m.pgm")
    assert (hint.cells[road] < 0.5).mean() >= 0.9


# ---- run


def test_run_success_outputs(tmp_path, capsys):
    world = save_world(np.zeros((40, 40), bool), tmp_path / "w.pgm")
    prefix = tmp_path / "ep"
    code, out = run(["run", "--world", world, "--start", "3,10,0", "--goal", "8,10", "--render", "--out-prefix", prefix], capsys)
    assert code == 0
    result = json.loads(out.out)
    assert result["outcome"] == "SUCCESS"
    assert json.loads((tmp_path / "ep.json").read_text()) == result
    assert (tmp_path / "ep.csv").read_text().startswith("step,x,y")
    assert read_ppm(tmp_path / "ep.ppm").shape == (40, 40, 3)


def test_run_render_matches_map_size(tmp_path):
    world = tmp_path / "w.pgm"
    run(["gen-world", "--kind", "scatter", "--seed", 2, "--dims", "48x36", "--out", world])
    run(["make-map", "--world", world, "--out", tmp_path / "m.pgm"])
    occ = read_pgm(world).cells >= 0.5
    r, c = np.argwhere(~occ)[0]
    start = f"{(c + 0.5) * 0.5},{(r + 0.5) * 0.5}"
    run(["run", "--world", world, "--map", tmp_path / "m.pgm", "--start", start, "--goal", "12,9",
         "--step-budget", 5, "--render", "--out-prefix", tmp_path / "e"])
    assert read_ppm(tmp_path / "e.ppm").shape == (36, 48, 3)


def test_run_sealed_goal_times_out(tmp_path):
    occ = np.zeros((40, 40), dtype=bool)
    occ[10:21, 10] = occ[10:21, 20] = occ[10, 10:21] = occ[20, 10:21] = True
    world = save_world(occ, tmp_path / "w.pgm")
    code, _ = run(["run", "--world", world, "--start", "2,2,0", "--goal", "7.5,7.5", "--step-budget", 40,
                   "--out-prefix", tmp_path / "e"])
    assert code == 4


def test_run_collision_exit_code(tmp_path):
    occ = np.ones((20, 20), dtype=bool)
    occ[9:12, 9:12] = False  # a 1.5 m pocket: no full step fits
    world = save_world(occ, tmp_path / "w.pgm")
    code, _ = run(["run", "--world", world, "--start", "5.25,5.25,0", "--goal", "9,9", "--out-prefix", tmp_path / "e"])
    assert code == 3
    assert json.loads((tmp_path / "e.json").read_text())["outcome"] == "COLLISION"


def test_run_input_errors(tmp_path, capsys):
    occ = np.zeros((20, 20), dtype=bool)
    occ[0, 0] = True
    world = save_world(occ, tmp_path / "w.pgm")
    assert run(["run", "--world", world, "--start", "0.1,0.1", "--goal", "5,5", "--out-prefix", tmp_path / "e"])[0] == 1
    assert run(["run", "--world", tmp_path / "nope.pgm", "--goal", "5,5", "--out-prefix", tmp_path / "e"])[0] == 1
    assert run(["run", "--world", world, "--goal", "5", "--out-prefix", tmp_path / "e"])[0] == 2
    cfg = tmp_path / "c.json"
    cfg.write_text('{"colour": 1}')
    code, out = run(["run", "--world", world, "--config", cfg, "--goal", "5,5", "--out-prefix", tmp_path / "e"], capsys)
    assert code == 2 and "colour" in out.err


def test_run_deterministic_csv(tmp_path):
    world = tmp_path / "w.pgm"
    run(["gen-world", "--kind", "scatter", "--seed", 4, "--dims", "60x60", "--out", world])
    run(["make-map", "--world", world, "--out", tmp_path / "m.pgm"])
    occ = read_pgm(world).cells >= 0.5
    r, c = np.argwhere(~occ)[len(np.argwhere(~occ)) // 3]
    args = ["run", "--world", world, "--map", tmp_path / "m.pgm", "--start", f"{(c + .5) / 2},{(r + .5) / 2},0.5",
            "--goal", "20,20", "--seed", 3, "--step-budget", 60]
    run(args + ["--out-prefix", tmp_path / "a"])
    run(args + ["--out-prefix", tmp_path / "b"])
    assert digest(tmp_path / "a.csv") == digest(tmp_path / "b.csv")


# ---- eval and benchmark


def test_eval_temporal_oracle(capsys):
    code, out = run(["eval", "--suite", "temporal", "--trials", 100, "--seed", 1], capsys)
    assert code == 0
    rep = json.loads(out.out)["reports"][0]
    assert rep["far_close_accuracy"] == 100.0
    assert set(rep["dist_accuracy"].values()) == {100.0}
    assert "far_or_close(%)" in out.err


def test_eval_exploration_format(capsys):
    code, out = run(["eval", "--suite", "exploration", "--trials", 2, "--seed", 0, "--worlds", 2], capsys)
    assert code == 0
    reports = json.loads(out.out)["reports"]
    assert [r["label"] for r in reports] == ["local-only", "local+map"]
    for r in reports:
        assert all(n == 2 for _, n in r["success"].values())
    assert "Hard" in out.err and "/2" in out.err


def test_eval_unknown_suite():
    assert run(["eval", "--suite", "vision"])[0] == 2


def test_benchmark_pooling_json(capsys):
    code, out = run(["benchmark-pooling", "--n", 2000, "--channels", 4, "--seed", 1, "--repeats", 1], capsys)
    assert code == 0
    data = json.loads(out.out)
    assert data["n_points"] == 2000 and data["equal"] is True
    assert run(["benchmark-pooling", "--n", 0])[0] == 2


def test_no_command_is_usage_error():
    assert run([])[0] == 2
