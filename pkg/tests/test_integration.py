import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dualbev import integration
from dualbev.global_map import score_path, synth_hint_map
from dualbev.integration import (
    COLLISION,
    SUCCESS,
    TIMEOUT,
    NavConfig,
    control_step,
    from_world,
    path_cost,
    run_cycle,
    select_path,
    to_world,
)
from dualbev.local_planner import CandidatePath, OraclePlanner, StubPlanner
from dualbev.raster import ProbabilityMap
from dualbev.world import Pose2D, WorldModel

ZERO_MAP = ProbabilityMap(np.zeros((60, 60)), (0.0, 0.0), 0.5)


def cand(y, td, n=5):
    wps = np.column_stack([0.75 * np.arange(1, n + 1), np.full(n, float(y))])
    return CandidatePath(wps, td, [0.0, 0.0])


def fixed_scores(monkeypatch, by_y):
    """Make the map score of a candidate depend only on its lateral offset."""
    monkeypatch.setattr(integration, "score_path", lambda m, path: by_y[round(float(path[-1][1]), 6)])


# ---- frames


def test_to_world_examples():
    c = CandidatePath(np.array([[1.0, 0.0], [2.0, 3.0]]), 1.0, [0, 0])
    np.testing.assert_allclose(to_world(c, Pose2D(0, 0, 0)), c.waypoints)
    np.testing.assert_allclose(to_world(c, Pose2D(1, 2, math.pi / 2))[0], [1.0, 3.0], atol=1e-15)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_frame_round_trip(seed):
    rng = np.random.default_rng(seed)
    pose = Pose2D(*rng.uniform(-50, 50, 2), rng.uniform(-4, 4))
    pts = rng.uniform(-10, 10, (6, 2))
    back = from_world(to_world(CandidatePath(pts, 0.0, [0, 0]), pose), pose)
    np.testing.assert_allclose(back, pts, atol=1e-12)


# ---- selection


def test_hand_evaluated_three_candidates(monkeypatch):
    fixed_scores(monkeypatch, {1.0: 0.9, 2.0: 0.2, 3.0: 0.5})
    cands = [cand(1, 2.0), cand(2, 10.0), cand(3, 10.0)]
    winner, scored = select_path(cands, Pose2D(0, 0), ZERO_MAP, k=0.5)
    assert [sp.cost for sp in scored] == pytest.approx([0.50, 0.35, 0.50], abs=1e-15)
    assert winner.index == 1 and winner.cost == pytest.approx(0.35)
    # without #2 the tie between #1 and #3 goes to the lower temporal distance
    winner, _ = select_path([cands[2], cands[0]], Pose2D(0, 0), ZERO_MAP, k=0.5)
    assert winner.candidate is cands[0]


def test_full_tie_goes_to_lower_index(monkeypatch):
    fixed_scores(monkeypatch, {1.0: 0.4, 2.0: 0.4})
    winner, _ = select_path([cand(1, 6.0), cand(2, 6.0)], Pose2D(0, 0), ZERO_MAP)
    assert winner.index == 0


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_gating(seed):
    rng = np.random.default_rng(seed)
    hint = ProbabilityMap(rng.random((60, 60)), (0, 0), 0.5)
    pose = Pose2D(15.0, 15.0, rng.uniform(-3, 3))
    cands = [CandidatePath(rng.uniform(-5, 5, (5, 2)), float(td), [0, 0]) for td in rng.permutation(7) * 2.5 + 1]
    w0, scored = select_path(cands, pose, hint, k=0.0)
    assert w0.candidate.temporal_distance == min(c.temporal_distance for c in cands)
    w1, _ = select_path(cands, pose, hint, k=1.0)
    assert w1.score == min(sp.score for sp in scored)


def test_scored_polyline_starts_at_pose():
    cells = np.zeros((60, 60))
    cells[30, 30] = 1.0
    hint = ProbabilityMap(cells, (0, 0), 0.5)
    pose = Pose2D(15.25, 15.25, 0.0)
    _, scored = select_path([cand(0, 1.0)], pose, hint)
    expect = score_path(hint, np.vstack([pose.xy, to_world(cand(0, 1.0), pose)]))
    assert scored[0].score == expect > 0.0


def test_untraversable_candidates_do_not_compete():
    hint = ProbabilityMap(np.zeros((60, 60)), (0, 0), 0.5)
    cands = [cand(0, math.inf), cand(1, 30.0)]
    winner, scored = select_path(cands, Pose2D(5, 5), hint, k=1.0)
    assert winner.index == 1 and len(scored) == 2
    winner, _ = select_path([cand(0, math.inf), cand(1, math.inf)], Pose2D(5, 5), hint, k=1.0)
    assert winner.index == 0


def test_select_errors():
    with pytest.raises(ValueError, match="at least one"):
        select_path([], Pose2D(0, 0), ZERO_MAP)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_cost_affine_and_winner_changes_bounded(seed):
    rng = np.random.default_rng(seed)
    hint = ProbabilityMap(rng.random((60, 60)), (0, 0), 0.5)
    pose = Pose2D(15.0, 15.0, 0.0)
    cands = [CandidatePath(rng.uniform(-5, 5, (5, 2)), float(rng.uniform(0, 25)), [0, 0]) for _ in range(7)]
    ks = np.linspace(0, 1, 401)
    winners = []
    for k in ks:
        w, scored = select_path(cands, pose, hint, k=k)
        winners.append(w.index)
        for sp in scored:
            assert sp.cost == pytest.approx(path_cost(sp.score, sp.normalized_distance, k), abs=1e-15)
    changes = sum(a != b for a, b in zip(winners[:-1], winners[1:]))
    assert changes <= len(cands) - 1


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.05, 0.95), st.floats(0.1, 10.0))
def test_argmin_invariant_to_score_rescaling(seed, k, c):
    rng = np.random.default_rng(seed)
    s, d = rng.random(7), rng.random(7)
    k2 = k / (k + c * (1 - k))
    assert np.argmin(path_cost(s, d, k)) == np.argmin(path_cost(c * s, d, k2))


# ---- control


def test_control_step_examples():
    sp = lambda wp: integration.ScoredPath(0, None, np.array([wp]), 0, 0, 0)  # noqa: E731
    p = control_step(sp([5.0, 0.0]), Pose2D(0, 0, 0))
    assert (p.x, p.y, p.heading) == pytest.approx((0.75, 0.0, 0.0))
    p = control_step(sp([-5.0, 0.1]), Pose2D(0, 0, 0))
    assert p.heading == pytest.approx(0.6, abs=1e-15)
    assert (p.x, p.y) == pytest.approx((0.75 * math.cos(0.6), 0.75 * math.sin(0.6)))


def test_control_converges_to_fixed_waypoint():
    target = np.array([6.0, -4.0])
    pose = Pose2D(0, 0, 2.5)
    sp = integration.ScoredPath(0, None, target[None], 0, 0, 0)
    best = math.inf
    for _ in range(60):
        pose = control_step(sp, pose)
        best = min(best, math.hypot(*(pose.xy - target)))
    assert best < 0.75


# ---- closed loop


def empty_world():
    return WorldModel(np.zeros((60, 60), dtype=bool), 0.5)


@pytest.mark.parametrize("k", [0.0, 0.5, 1.0])
def test_empty_world_goal_ahead(k):
    res = run_cycle(OraclePlanner(), ZERO_MAP, empty_world(), Pose2D(5, 15, 0), (10, 15), NavConfig(k=k))
    assert res.outcome == SUCCESS and res.steps <= 12
    assert math.hypot(res.final_xy[0] - 10, res.final_xy[1] - 15) <= 2.0


def test_sealed_goal_times_out():
    occ = np.zeros((40, 40), dtype=bool)
    occ[10:21, 10] = occ[10:21, 20] = occ[10, 10:21] = occ[20, 10:21] = True
    world = WorldModel(occ, 0.5)
    hint = synth_hint_map(world.obstacle_raster())
    res = run_cycle(OraclePlanner(), hint, world, Pose2D(2, 2, 0), (7.5, 7.5), NavConfig(step_budget=80))
    assert res.outcome == TIMEOUT and res.steps == 80


def grass_fixture():
    """Open field with a costly (but passable) patch on the straight line to the goal."""
    world = WorldModel(np.zeros((40, 60), dtype=bool), 0.5)
    cells = np.zeros((40, 60))
    cells[12:28, 20:40] = 1.0  # x in [10, 20), y in [6, 14)
    return world, ProbabilityMap(cells, (0, 0), 0.5)


def hint_exposure(res, hint):
    return score_path(hint, np.array([[r.x, r.y] for r in res.trajectory]))


def test_hint_changes_route():
    world, hint = grass_fixture()
    runs = {k: run_cycle(OraclePlanner(), hint, world, Pose2D(3, 10, 0), (27, 10), NavConfig(k=k)) for k in (0.0, 0.9)}
    assert all(r.outcome == SUCCESS for r in runs.values())
    assert runs[0.0].trajectory_csv() != runs[0.9].trajectory_csv()
    assert hint_exposure(runs[0.9], hint) < hint_exposure(runs[0.0], hint)


def test_episode_invariants_and_determinism():
    world = WorldModel(np.random.default_rng(0).random((50, 50)) < 0.06, 0.5)
    world = WorldModel(world.occupied & ~np.pad(np.ones((6, 6), bool), ((2, 42), (2, 42))), 0.5)
    hint = synth_hint_map(world.obstacle_raster())
    args = (hint, world, Pose2D(2.5, 2.5, 0.7), (20.0, 20.0), NavConfig(k=0.5))
    a, b = run_cycle(OraclePlanner(), *args), run_cycle(OraclePlanner(), *args)
    assert a.trajectory_csv() == b.trajectory_csv()
    assert a.displacement == pytest.approx(a.steps * 0.75, abs=1e-9)
    xy = np.array([[r.x, r.y] for r in a.trajectory])
    assert np.hypot(*np.diff(xy, axis=0).T).sum() == pytest.approx(a.steps * 0.75, abs=1e-9)
    if a.outcome == SUCCESS:
        assert math.hypot(a.final_xy[0] - 20, a.final_xy[1] - 20) <= 2.0


def test_stub_planner_runs_closed_loop():
    res = run_cycle(StubPlanner(), ZERO_MAP, empty_world(), Pose2D(15, 15, 0), (28, 28), NavConfig(step_budget=5))
    assert res.outcome in (SUCCESS, TIMEOUT, COLLISION) and len(res.trajectory) == res.steps + 1


def test_start_must_be_free():
    occ = np.zeros((10, 10), dtype=bool)
    occ[0, 0] = True
    with pytest.raises(ValueError, match="impassable"):
        run_cycle(OraclePlanner(), ZERO_MAP, WorldModel(occ, 0.5), Pose2D(0.1, 0.1), (3, 3))


def test_json_and_csv_format():
    res = run_cycle(OraclePlanner(), ZERO_MAP, empty_world(), Pose2D(5, 15, 0), (9, 15))
    assert '"outcome": "SUCCESS"' in res.to_json()
    lines = res.trajectory_csv().splitlines()
    assert lines[0] == "step,x,y,heading,cost,score,dist" and len(lines) == res.steps + 2


def test_nav_config_validation():
    with pytest.raises(ValueError, match="k must"):
        NavConfig(k=1.5)
