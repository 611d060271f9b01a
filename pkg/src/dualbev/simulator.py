"""Synthetic worlds and the evaluation batteries.

Temporal-distance metrics: far/close classification at the 10-step threshold
and the share of predictions within 3, 2 and 1 steps of the oracle label.
Exploration: goal-reaching success at Easy (<10 m), Medium (10-20 m) and
Hard (>20 m) goal distances, plus displacement and speed of the runs.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .global_map import distance_transform, synth_hint_map
from .integration import SUCCESS, run_cycle
from .local_planner import OraclePlanner, PlannerConfig, steps_field
from .raster import OverheadRaster, ProbabilityMap
from .world import Pose2D, WorldModel

KINDS = ("EMPTY", "CORRIDOR", "SCATTER", "ROOMS")
CLOSE_THRESHOLD = 10.0
MAX_LABEL = 20.0
ERROR_THRESHOLDS = (3, 2, 1)
# Easy < 10 m, Medium 10-20 m, Hard > 20 m; bounded above so goals fit desk-scale worlds
LEVELS = {"Easy": (3.0, 10.0), "Medium": (10.0, 20.0), "Hard": (20.0, 30.0)}


def parse_dims(dims) -> tuple[int, int]:
    if isinstance(dims, str):
        parts = dims.lower().split("x")
        if len(parts) != 2 or not all(p.strip().isdigit() for p in parts):
            raise ValueError(f"dims must look like 64x64, got {dims!r}")
        dims = tuple(int(p) for p in parts)
    w, h = int(dims[0]), int(dims[1])
    return w, h


def gen_world(kind: str, seed: int, dims=(64, 64), cell_size: float = 0.5) -> WorldModel:
    """Deterministic synthetic world; ``dims`` is (width, height) in cells."""
    kind = kind.upper()
    if kind not in KINDS:
        raise ValueError(f"unknown world kind {kind!r}; choose from {', '.join(KINDS)}")
    w, h = parse_dims(dims)
    if w < 10 or h < 10:
        raise ValueError(f"world must be at least 10x10 cells, got {w}x{h}")
    rng = np.random.default_rng([seed, KINDS.index(kind)])
    occ = np.zeros((h, w), dtype=bool)
    if kind == "CORRIDOR":
        occ = _corridor(rng, h, w)
    elif kind == "SCATTER":
        occ = _scatter(rng, h, w, cell_size)
    elif kind == "ROOMS":
        occ = _rooms(rng, h, w)
    return WorldModel(occ, cell_size)


def _corridor(rng, h, w):
    occ = np.ones((h, w), dtype=bool)
    half = max(1, min(h, w) // 16)
    row = int(rng.integers(half + 1, h - half - 1))
    for col in range(w):
        nxt = int(np.clip(row + rng.integers(-1, 2), half + 1, h - half - 2))
        lo, hi = min(row, nxt) - half, max(row, nxt) + half
        occ[max(lo, 0):min(hi + 1, h), col] = False
        row = nxt
    return occ


def _scatter(rng, h, w, cell_size, density=0.15):
    occ = np.zeros((h, w), dtype=bool)
    rr, cc = np.mgrid[0:h, 0:w]
    while occ.mean() < density:
        r, c = rng.integers(0, h), rng.integers(0, w)
        radius = rng.uniform(0.75, 2.0) / cell_size
        blob = (rr - r) ** 2 + (cc - c) ** 2 <= radius**2
        if (occ | blob).mean() > 0.3:
            break
        occ |= blob
    return occ


def _rooms(rng, h, w):
    occ = np.zeros((h, w), dtype=bool)
    occ[0, :] = occ[-1, :] = occ[:, 0] = occ[:, -1] = True
    step = max(5, min(h, w) // 3)
    for r in range(step, h - 1, step):
        occ[r, :] = True
        for c0 in range(0, w, step):
            door = int(rng.integers(c0 + 1, min(c0 + step, w - 1))) if c0 + 1 < min(c0 + step, w - 1) else c0 + 1
            occ[r, max(door - 1, 1):min(door + 2, w - 1)] = False
    for c in range(step, w - 1, step):
        occ[:, c] = True
        for r0 in range(0, h, step):
            lo, hi = r0 + 1, min(r0 + step, h - 1)
            door = int(rng.integers(lo, hi)) if lo < hi else lo
            occ[max(door - 1, 1):min(door + 2, h - 1), c] = False
    return occ


def connected(world: WorldModel, a, b) -> bool:
    return math.isfinite(steps_field(world, a)[world.cell_of(np.asarray(b, dtype=float))])


@dataclass
class MetricReport:
    label: str = ""
    far_close_accuracy: Optional[float] = None
    dist_accuracy: dict = field(default_factory=dict)  # error threshold -> %
    success: dict = field(default_factory=dict)  # level -> [successes, trials]
    avg_displacement: Optional[float] = None
    avg_velocity: Optional[float] = None
    n_pairs: int = 0

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "far_close_accuracy": self.far_close_accuracy,
            "dist_accuracy": {str(k): v for k, v in self.dist_accuracy.items()},
            "success": {k: list(v) for k, v in self.success.items()},
            "avg_displacement": self.avg_displacement,
            "avg_velocity": self.avg_velocity,
            "n_pairs": self.n_pairs,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def format_table(reports) -> str:
    """Aligned plain-text table: one row per report, one column per metric."""
    reports = list(reports)
    cols = ["Method"]
    if any(r.far_close_accuracy is not None for r in reports):
        cols += ["far_or_close(%)"] + [f"error={e}(%)" for e in ERROR_THRESHOLDS]
    if any(r.success for r in reports):
        cols += [f"{lvl}" for lvl in LEVELS] + ["Avg. Displacement(m)", "Avg. Velocity(m/s)"]
    rows = []
    for r in reports:
        row = [r.label or "-"]
        if "far_or_close(%)" in cols:
            row += [_fmt(r.far_close_accuracy)] + [_fmt(r.dist_accuracy.get(e)) for e in ERROR_THRESHOLDS]
        if "Easy" in cols:
            row += [f"{r.success[l][0]}/{r.success[l][1]}" if l in r.success else "-" for l in LEVELS]
            row += [_fmt(r.avg_displacement, 1), _fmt(r.avg_velocity, 2)]
        rows.append(row)
    widths = [max(len(c), *(len(row[i]) for row in rows)) for i, c in enumerate(cols)]
    line = lambda cells: "  ".join(c.ljust(wd) for c, wd in zip(cells, widths)).rstrip()
    return "\n".join([line(cols), line(["-" * wd for wd in widths])] + [line(r) for r in rows])


def _fmt(v, digits=2):
    return "-" if v is None else f"{v:.{digits}f}"


def oracle_predictor(world, start, goal, v=1.5, dt=0.5):
    return float(steps_field(world, start, v, dt)[world.cell_of(np.asarray(goal, dtype=float))])


def sample_pairs(world: WorldModel, n_pairs: int, seed: int, max_label: float = MAX_LABEL, v=1.5, dt=0.5):
    """Uniform free start cells with goals drawn uniformly among cells whose oracle label is <= max_label."""
    free_cells = np.argwhere(world.free)
    if len(free_cells) < 2:
        raise ValueError("world needs at least two free cells")
    rng = np.random.default_rng(seed)
    pairs = []
    attempts = 0
    while len(pairs) < n_pairs:
        attempts += 1
        if attempts > 100 * n_pairs + 1000:
            raise ValueError("could not sample enough reachable pairs")
        r, c = free_cells[rng.integers(len(free_cells))]
        start = world.cell_center(r, c)
        labels = steps_field(world, start, v, dt)
        ok = np.argwhere(labels <= max_label)
        ok = ok[~((ok[:, 0] == r) & (ok[:, 1] == c))]
        if len(ok) == 0:
            continue
        gr, gc = ok[rng.integers(len(ok))]
        pairs.append((start, world.cell_center(gr, gc), float(labels[gr, gc])))
    return pairs


def eval_temporal_metrics(predictor: Callable, world: WorldModel, n_pairs: int, seed: int, label: str = "") -> MetricReport:
    """``predictor(world, start_xy, goal_xy) -> steps``; labels come from the grid oracle."""
    if n_pairs < 1:
        raise ValueError("n_pairs must be >= 1")
    pairs = sample_pairs(world, n_pairs, seed)
    labels = np.array([p[2] for p in pairs])
    preds = np.array([float(predictor(world, p[0], p[1])) for p in pairs])
    close_true = labels <= CLOSE_THRESHOLD
    close_pred = preds <= CLOSE_THRESHOLD
    err = np.abs(preds - labels)
    return MetricReport(
        label=label,
        far_close_accuracy=100.0 * float(np.mean(close_true == close_pred)),
        # small epsilon absorbs float noise in labels built from sqrt(2) sums
        dist_accuracy={e: 100.0 * float(np.mean(err <= e + 1e-9)) for e in ERROR_THRESHOLDS},
        n_pairs=n_pairs,
    )


def sample_start_goal(world: WorldModel, level: str, rng, clearance: float = 1.0, tries: int = 200):
    """Start and reachable goal, both ``clearance`` meters from obstacles and the world edge,
    at a Euclidean distance inside the level's band; the robot starts facing the goal."""
    lo, hi = LEVELS[level]
    clear = world.free & (_clearance(world) >= clearance)
    cells = np.argwhere(clear)
    if len(cells) == 0:
        raise ValueError("no free cell has the requested clearance")
    centers = world.cell_center(cells[:, 0], cells[:, 1]).T
    for _ in range(tries):
        i = rng.integers(len(cells))
        start = centers[i]
        reach = steps_field(world, start)[cells[:, 0], cells[:, 1]]
        d = np.hypot(*(centers - start).T)
        idx = np.flatnonzero((d >= lo) & (d < hi) & np.isfinite(reach))
        if len(idx):
            goal = centers[idx[rng.integers(len(idx))]]
            heading = math.atan2(goal[1] - start[1], goal[0] - start[0])
            return Pose2D(start[0], start[1], heading), goal
    raise ValueError(f"level {level} is unsatisfiable in a {world.shape[1]}x{world.shape[0]} world")


def _clearance(world: WorldModel) -> np.ndarray:
    """Distance (m) from each cell center to the nearest obstacle or the world edge."""
    padded = np.pad(world.occupied, 1, constant_values=True)
    dist = distance_transform(OverheadRaster(padded.astype(float), (0.0, 0.0), world.cell_size)).cells
    return dist[1:-1, 1:-1] - 0.5 * world.cell_size


def eval_exploration(configs: dict, worlds, trials_per_level: int, seed: int, hint_maps=None, planner=None, levels=tuple(LEVELS)) -> dict:
    """Paired battery: every config runs the same (world, start, goal) trials.

    ``configs`` maps a label to a NavConfig. ``hint_maps`` defaults to the
    analytic map of each world (an all-zero map for obstacle-free worlds).
    """
    if trials_per_level < 1:
        raise ValueError("trials_per_level must be >= 1")
    worlds = list(worlds)
    if hint_maps is None:
        hint_maps = [default_hint_map(w) for w in worlds]
    planner = planner or OraclePlanner(PlannerConfig())
    rng = np.random.default_rng(seed)
    trials = []
    for level in levels:
        for t in range(trials_per_level):
            wi = t % len(worlds)
            start, goal = sample_start_goal(worlds[wi], level, rng)
            trials.append((level, wi, start, goal))
    reports = {}
    for name, cfg in configs.items():
        rep = MetricReport(label=name, success={lvl: [0, 0] for lvl in levels})
        disp_ok, total_disp, total_time = [], 0.0, 0.0
        for level, wi, start, goal in trials:
            res = run_cycle(planner, hint_maps[wi], worlds[wi], start, goal, cfg)
            rep.success[level][1] += 1
            total_disp += res.displacement
            total_time += res.steps * cfg.dt
            if res.outcome == SUCCESS:
                rep.success[level][0] += 1
                disp_ok.append(res.displacement)
        rep.avg_displacement = float(np.mean(disp_ok)) if disp_ok else 0.0
        rep.avg_velocity = total_disp / total_time if total_time > 0 else cfg.v
        reports[name] = rep
    return reports


def default_hint_map(world: WorldModel, sigma: float = 2.0) -> ProbabilityMap:
    if not world.occupied.any():
        return ProbabilityMap(np.zeros(world.shape), world.origin, world.cell_size)
    return synth_hint_map(world.obstacle_raster(), sigma)
