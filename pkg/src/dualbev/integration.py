"""Dual-layer path selection and the closed-loop control cycle.

Each cycle the local planner proposes candidates, each is projected onto the
global hint map, and the candidate minimizing

    cost = k * score + (1 - k) * min(temporal_distance, d_max) / d_max

is followed for one control step.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .global_map import score_path
from .local_planner import CandidatePath, ObservationContext, to_world_xy
from .raster import ProbabilityMap
from .world import Pose2D, WorldModel, wrap_angle

SUCCESS = "SUCCESS"
COLLISION = "COLLISION"
TIMEOUT = "TIMEOUT"


@dataclass(frozen=True)
class NavConfig:
    k: float = 0.5
    d_max: float = 20.0
    v: float = 1.5
    dt: float = 0.5
    omega_max: float = 1.2
    goal_radius: float = 2.0
    step_budget: int = 200
    P: int = 5

    def __post_init__(self):
        if not 0.0 <= self.k <= 1.0:
            raise ValueError(f"k must lie in [0, 1], got {self.k}")
        if self.d_max <= 0 or self.v <= 0 or self.dt <= 0 or self.omega_max <= 0:
            raise ValueError("d_max, v, dt and omega_max must be positive")
        if self.goal_radius < 0 or self.step_budget < 1:
            raise ValueError("goal_radius must be >= 0 and step_budget >= 1")


@dataclass(frozen=True)
class ScoredPath:
    index: int
    candidate: CandidatePath
    world_waypoints: np.ndarray
    score: float
    normalized_distance: float
    cost: float


def to_world(path: CandidatePath, pose: Pose2D) -> np.ndarray:
    """Rotate robot-frame waypoints by the heading, then translate to the pose."""
    return to_world_xy(path.waypoints, pose)


def from_world(points, pose: Pose2D) -> np.ndarray:
    c, s = math.cos(pose.heading), math.sin(pose.heading)
    d = np.asarray(points, dtype=float) - pose.xy
    return np.column_stack([c * d[:, 0] + s * d[:, 1], -s * d[:, 0] + c * d[:, 1]])


def path_cost(score, normalized_distance, k):
    return k * score + (1.0 - k) * normalized_distance


def rank_key(sp: ScoredPath):
    return (sp.cost, sp.candidate.temporal_distance, sp.index)


def select_path(candidates, pose: Pose2D, hint_map: ProbabilityMap, k: float = 0.5, d_max: float = 20.0):
    """Return ``(winner, scored)``; ties go to lower temporal distance, then lower index.

    The scored polyline starts at the robot position so the first leg counts.
    Only traversable candidates (finite temporal distance) compete; when none
    is traversable all of them do. ``scored`` always lists every candidate.
    """
    if not candidates:
        raise ValueError("select_path needs at least one candidate")
    if d_max <= 0:
        raise ValueError("d_max must be positive")
    scored = []
    for i, cand in enumerate(candidates):
        wps = to_world(cand, pose)
        score = score_path(hint_map, np.vstack([pose.xy, wps]))
        nd = min(cand.temporal_distance, d_max) / d_max
        scored.append(ScoredPath(i, cand, wps, score, nd, path_cost(score, nd, k)))
    pool = [sp for sp in scored if math.isfinite(sp.candidate.temporal_distance)] or scored
    return min(pool, key=rank_key), scored


def control_step(winner: ScoredPath, pose: Pose2D, v: float = 1.5, dt: float = 0.5, omega_max: float = 1.2) -> Pose2D:
    """Unicycle update: turn toward the first waypoint (rate-limited), then move v*dt."""
    target = np.asarray(winner.world_waypoints, dtype=float)[0]
    dx, dy = target[0] - pose.x, target[1] - pose.y
    if dx == 0.0 and dy == 0.0:
        turn = 0.0
    else:
        limit = omega_max * dt
        turn = min(max(wrap_angle(math.atan2(dy, dx) - pose.heading), -limit), limit)
    heading = pose.heading + turn
    return Pose2D(pose.x + v * dt * math.cos(heading), pose.y + v * dt * math.sin(heading), heading)


@dataclass
class TrajectoryRow:
    step: int
    x: float
    y: float
    heading: float
    cost: float = math.nan
    score: float = math.nan
    dist: float = math.nan


@dataclass
class EpisodeResult:
    outcome: str
    steps: int
    displacement: float
    start: tuple
    goal: tuple
    trajectory: list = field(default_factory=list)

    @property
    def final_xy(self):
        return (self.trajectory[-1].x, self.trajectory[-1].y)

    def to_json(self) -> str:
        return json.dumps(
            {
                "outcome": self.outcome,
                "steps": self.steps,
                "displacement": self.displacement,
                "start": list(self.start),
                "goal": list(self.goal),
                "final": list(self.final_xy),
            },
            sort_keys=True,
        )

    def trajectory_csv(self) -> str:
        buf = io.StringIO()
        buf.write("step,x,y,heading,cost,score,dist\n")
        for r in self.trajectory:
            buf.write(f"{r.step},{r.x:.9f},{r.y:.9f},{r.heading:.9f},{r.cost:.9f},{r.score:.9f},{r.dist:.9f}\n")
        return buf.getvalue()


def run_cycle(planner, hint_map: ProbabilityMap, world: WorldModel, start: Pose2D, goal, config: NavConfig = NavConfig()) -> EpisodeResult:
    """Plan, select and step until the goal is within reach, the robot collides, or the budget runs out."""
    if not world.is_free(start.xy):
        raise ValueError(f"start {start} is in an impassable cell")
    goal = (float(goal[0]), float(goal[1]))
    goal_xy = np.array(goal)
    pose = start
    rows = [TrajectoryRow(0, pose.x, pose.y, pose.heading)]
    displacement = 0.0
    history = [0] * config.P
    outcome = TIMEOUT
    steps = 0
    while True:
        if math.hypot(pose.x - goal[0], pose.y - goal[1]) <= config.goal_radius:
            outcome = SUCCESS
            break
        if steps >= config.step_budget:
            break
        ctx = ObservationContext(steps, tuple(history[-config.P:]) if config.P else (), goal_xy, config.P)
        candidates = planner.plan_candidates(ctx, pose, world)
        winner, _ = select_path(candidates, pose, hint_map, config.k, config.d_max)
        nxt = control_step(winner, pose, config.v, config.dt, config.omega_max)
        steps += 1
        history.append(steps)
        displacement += math.hypot(nxt.x - pose.x, nxt.y - pose.y)
        rows.append(TrajectoryRow(steps, nxt.x, nxt.y, nxt.heading, winner.cost, winner.score, winner.candidate.temporal_distance))
        collided = not world.segment_free(pose.xy, nxt.xy)
        pose = nxt
        if collided:
            outcome = COLLISION
            break
    return EpisodeResult(outcome, steps, displacement, (start.x, start.y, start.heading), goal, rows)
