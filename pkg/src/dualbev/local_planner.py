"""Local candidate-path generators.

Two planners share one contract, ``plan_candidates(ctx, pose, world)``:

* ``OraclePlanner`` sweeps fixed-curvature arc primitives and labels each
  with a ground-truth temporal distance from grid search over the world.
* ``StubPlanner`` runs the full lift -> pool -> decode pipeline on synthetic
  images with fixed random weights. It checks plumbing and shapes only.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from . import _kernels
from .geometry import BevGridSpec, CameraModel, FeaturePointCloud, lift, make_frustum, normalize_depth
from .losses import LatentGoal
from .pooling import pool_interval
from .world import Pose2D, WorldModel

_BOUNDARY_BACKOFF = 1e-6
UNREACHABLE = math.inf
DEFAULT_CURVATURES = (-0.3, -0.2, -0.1, 0.0, 0.1, 0.2, 0.3)
SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class CandidatePath:
    waypoints: np.ndarray  # (H, 2) robot frame, meters
    temporal_distance: float  # control steps
    gps_offset: np.ndarray  # (2,) world frame, meters

    def __post_init__(self):
        wp = np.asarray(self.waypoints, dtype=float)
        if wp.ndim != 2 or wp.shape[1] != 2 or wp.shape[0] < 1:
            raise ValueError(f"waypoints must be (H, 2) with H >= 1, got {wp.shape}")
        if not np.all(np.isfinite(wp)):
            raise ValueError("waypoints must be finite")
        if not self.temporal_distance >= 0:
            raise ValueError(f"temporal distance must be >= 0, got {self.temporal_distance}")
        object.__setattr__(self, "waypoints", wp)
        object.__setattr__(self, "gps_offset", np.asarray(self.gps_offset, dtype=float).reshape(2))


@dataclass(frozen=True)
class ObservationContext:
    """Observation handles: current, the P previous ones (oldest first), and the goal."""

    current: Any
    past: tuple
    goal: Any
    P: int = 5

    def __post_init__(self):
        object.__setattr__(self, "past", tuple(self.past))
        if len(self.past) != self.P:
            raise ValueError(f"context needs exactly P={self.P} past observations, got {len(self.past)}")


@dataclass(frozen=True)
class PlannerConfig:
    K: int = 7
    H: int = 5
    P: int = 5
    curvatures: tuple = DEFAULT_CURVATURES
    v: float = 1.5
    dt: float = 0.5
    lookahead: float = 10.0  # steps to the implicit sub-goal along the shortest route
    margin: float = 0.0  # extra clearance (m) the oracle keeps from obstacles
    noise: float = 0.0  # half-width (steps) of uniform error added to oracle distances
    seed: int = 0

    def __post_init__(self):
        if self.K < 1 or self.H < 1 or self.P < 0:
            raise ValueError("K, H must be >= 1 and P >= 0")
        if self.v <= 0 or self.dt <= 0:
            raise ValueError("v and dt must be positive")

    @property
    def step_length(self) -> float:
        return self.v * self.dt


def step_arc(curvature: float, step: float, n: int) -> np.ndarray:
    """Robot-frame vertices of ``n`` turn-then-move steps of length ``step``.

    Each step first turns by ``curvature * step`` and then drives straight, which
    is exactly what the unicycle controller executes, so the tail of a chosen
    primitive is again a primitive from the next pose. The vertices lie on a
    circle of radius ``step / (2 sin(curvature * step / 2))``, close to ``1 / curvature``.
    """
    heading = curvature * step * np.arange(1, n + 1)
    return np.cumsum(step * np.column_stack([np.cos(heading), np.sin(heading)]), axis=0)


def to_world_xy(points, pose: Pose2D) -> np.ndarray:
    c, s = math.cos(pose.heading), math.sin(pose.heading)
    pts = np.asarray(points, dtype=float)
    return np.column_stack([pose.x + c * pts[:, 0] - s * pts[:, 1], pose.y + s * pts[:, 0] + c * pts[:, 1]])


def steps_field(world: WorldModel, xy, v: float = 1.5, dt: float = 0.5, backend=None) -> np.ndarray:
    """Temporal distance (steps) from every cell to the cell containing ``xy``; inf where unreachable.

    Uses 8-connected BFS; among hop-minimal routes the one with the fewest
    diagonals is taken, and diagonals count sqrt(2) cell lengths.
    """
    kernels = _kernels.BACKENDS[backend] if backend else _kernels
    row, col = world.cell_of(xy)
    free = np.ascontiguousarray(world.free, dtype=np.uint8)
    hops, diags = kernels.grid_bfs(free, int(row), int(col))
    hops = np.asarray(hops)
    diags = np.asarray(diags)
    meters = ((hops - diags) + SQRT2 * diags) * world.cell_size
    return np.where(hops >= 0, meters / (v * dt), UNREACHABLE)


def inflate(world: WorldModel, margin: float) -> WorldModel:
    """World whose obstacles are grown by ``margin`` meters; the world edge counts as an obstacle."""
    from .global_map import distance_transform
    from .raster import OverheadRaster

    padded = np.pad(world.occupied, 1, constant_values=True).astype(float)
    dist = distance_transform(OverheadRaster(padded, (0.0, 0.0), world.cell_size)).cells[1:-1, 1:-1]
    occ = dist <= margin
    if occ.all():
        return world
    return WorldModel(occ, world.cell_size, world.origin)


def oracle_temporal_distance(world: WorldModel, start, goal, v: float = 1.5, dt: float = 0.5) -> float:
    """Control steps from ``start`` to ``goal`` along the grid's shortest route, or UNREACHABLE."""
    start = np.asarray(start, dtype=float)
    goal = np.asarray(goal, dtype=float)
    if not (world.inside(start) and world.inside(goal)):
        raise ValueError("start and goal must lie inside the world bounds")
    if not world.is_free(start):
        raise ValueError(f"start {tuple(start)} is in an impassable cell")
    field_ = steps_field(world, start, v, dt)
    row, col = world.cell_of(goal)
    return float(field_[row, col])


class OraclePlanner:
    """Arc-sweep proposals scored with grid-search temporal distances.

    A candidate's temporal distance is the H steps spent on the arc plus the
    remaining steps from its end to a sub-goal ``lookahead`` steps down the
    shortest route (the goal itself when closer). Arcs are truncated where they
    first meet blocked space, so every proposal lies in free space; a proposal
    whose first step is blocked is labelled UNREACHABLE.
    """

    def __init__(self, config: PlannerConfig = PlannerConfig()):
        if len(config.curvatures) != config.K:
            raise ValueError(f"need K={config.K} curvatures, got {len(config.curvatures)}")
        self.config = config
        self._fields: dict = {}

    def _free_world(self, world: WorldModel) -> WorldModel:
        if self.config.margin <= 0:
            return world
        cached = getattr(self, "_inflated", None)
        if cached is None or cached[0] is not world:
            self._inflated = (world, inflate(world, self.config.margin))
        return self._inflated[1]

    def goal_field(self, world: WorldModel, goal) -> np.ndarray:
        row, col = world.cell_of(np.asarray(goal, dtype=float))
        key = (id(world), int(row), int(col))
        cached = self._fields.get(key)
        if cached is None or cached[0] is not world:
            if not world.is_free(goal):
                f = np.full(world.shape, UNREACHABLE)
            else:
                f = steps_field(world, goal, self.config.v, self.config.dt)
            self._fields = {key: (world, f)}
            return f
        return cached[1]

    def plan_candidates(self, ctx: ObservationContext, pose: Pose2D, world: WorldModel) -> list[CandidatePath]:
        cfg = self.config
        if not world.inside(pose.xy):
            raise ValueError(f"pose {pose} is outside the world")
        goal = np.asarray(ctx.goal, dtype=float)
        field_ = self.goal_field(world, goal)
        h, w = world.shape

        def lookup(xy):
            r, c = world.cell_of(xy)
            if 0 <= r < h and 0 <= c < w:
                return field_[r, c]
            return UNREACHABLE

        here = lookup(pose.xy)
        level = max(here - cfg.lookahead, 0.0)
        step = cfg.step_length
        free_world = self._free_world(world)
        out = []
        for kappa in cfg.curvatures:
            local = np.vstack([[0.0, 0.0], step_arc(kappa, step, cfg.H)])
            cum = np.concatenate([[0.0], np.cumsum(np.hypot(*np.diff(local, axis=0).T))])
            full = cum[-1]
            blocked_at = free_world.free_prefix(to_world_xy(local, pose))
            if blocked_at is None:
                reach = full
            else:
                # stop just short of the blocked cell's boundary
                reach = max(blocked_at - _BOUNDARY_BACKOFF, 0.0)
            wps = local[1:] if blocked_at is None else _truncate(local, reach)
            end_world = to_world_xy(wps[-1:], pose)[0]
            if reach < step:
                td = UNREACHABLE
            else:
                remaining = lookup(end_world)
                # a truncated arc still costs all H steps plus a penalty for the blocked remainder
                penalty = 2.0 * (full - reach) / step
                if math.isfinite(here) and math.isfinite(remaining):
                    td = cfg.H + max(remaining - level, 0.0) + penalty
                else:
                    # goal unknown or sealed off: prefer long free arcs
                    td = cfg.lookahead + cfg.H + penalty
            out.append(CandidatePath(wps, td, goal - end_world))
        if cfg.noise > 0:
            rng = np.random.default_rng([cfg.seed, 4, _handle_key(ctx.current)])
            err = rng.uniform(-cfg.noise, cfg.noise, len(out))
            out = [
                CandidatePath(c.waypoints, max(c.temporal_distance + e, 0.0), c.gps_offset)
                for c, e in zip(out, err)
            ]
        return out


def _handle_key(handle) -> int:
    try:
        return int(handle) & 0x7FFFFFFF
    except (TypeError, ValueError):
        return zlib.crc32(repr(handle).encode())


def _truncate(polyline, reach):
    """Resample waypoints so none lies beyond arc length ``reach`` along ``polyline``."""
    seg = np.hypot(*np.diff(polyline, axis=0).T)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    s = np.minimum(cum[1:], reach)
    return np.column_stack([np.interp(s, cum, polyline[:, 0]), np.interp(s, cum, polyline[:, 1])])


def _block_mean(bev, block):
    nx, ny, c = bev.shape
    return bev.reshape(nx // block, block, ny // block, block, c).mean(axis=(1, 3))


@dataclass
class StubPlanner:
    """Fixed-random-weight stand-in for a learned local planner, exercising lift -> pool -> decode."""

    config: PlannerConfig = field(default_factory=PlannerConfig)
    image_w: int = 16
    image_h: int = 12
    channels: int = 8
    latent_dim: int = 8
    block: int = 10
    mode: str = "exploration"
    grid: BevGridSpec = field(default_factory=BevGridSpec)
    camera: Optional[CameraModel] = None

    def __post_init__(self):
        if self.mode not in ("exploration", "navigation"):
            raise ValueError(f"mode must be exploration or navigation, got {self.mode!r}")
        if self.camera is None:
            self.camera = CameraModel.forward(self.image_w, self.image_h, hfov_deg=90.0, height=0.5)
        self.frustum = make_frustum(self.image_w, self.image_h, self.camera, self.grid)
        rng = np.random.default_rng([self.config.seed, 1])
        n_feat = (self.grid.nx // self.block) * (self.grid.ny // self.block) * self.channels
        self.n_out = 1 + 2 * self.config.H + 2
        self.enc_w = rng.standard_normal((2 * self.latent_dim, n_feat)) / math.sqrt(n_feat)
        n_in = 2 * n_feat + self.latent_dim
        self.dec_w = rng.standard_normal((self.n_out, n_in)) / math.sqrt(n_in)
        self.dec_b = 0.1 * rng.standard_normal(self.n_out)

    def observation(self, handle):
        """Synthetic (features, depth distribution) for an integer observation handle."""
        rng = np.random.default_rng([self.config.seed, 2, int(handle)])
        feats = rng.standard_normal((self.image_h, self.image_w, self.channels))
        depth = normalize_depth(2.0 * rng.standard_normal((self.image_h, self.image_w, self.grid.n_depth)))
        return feats, depth

    def bev_features(self, handle) -> np.ndarray:
        feats, depth = self.observation(handle)
        cloud = FeaturePointCloud.from_lifted(lift(feats, depth), self.frustum, self.grid)
        bev = pool_interval(cloud, self.grid).data
        return _block_mean(bev, self.block).ravel()

    def latent(self, ctx: ObservationContext, rng) -> LatentGoal:
        if self.mode == "exploration":
            return LatentGoal.prior(self.latent_dim, rng)
        stats = self.enc_w @ self.bev_features(ctx.goal)
        mu, logvar = stats[: self.latent_dim], np.clip(stats[self.latent_dim:], -5.0, 5.0)
        return LatentGoal.draw(mu, logvar, rng)

    def plan_candidates(self, ctx: ObservationContext, pose: Pose2D, world=None, seed=None) -> list[CandidatePath]:
        cfg = self.config
        current = self.bev_features(ctx.current)
        context = np.mean([self.bev_features(h) for h in ctx.past], axis=0) if ctx.past else np.zeros_like(current)
        base = np.concatenate([current, context])
        rng = np.random.default_rng([cfg.seed if seed is None else seed, 3, int(ctx.current)])
        out = []
        for _ in range(cfg.K):
            z = self.latent(ctx, rng).sample
            raw = self.dec_w @ np.concatenate([base, z]) + self.dec_b
            out.append(self._decode(raw))
        return out

    def _decode(self, raw) -> CandidatePath:
        H = self.config.H
        step = self.config.step_length
        td = float(np.logaddexp(0.0, raw[0]) * 10.0)
        # bounded turn per step keeps the first waypoint exactly one step from the origin
        heading = np.cumsum(0.6 * np.tanh(raw[1:1 + H]))
        speed = step * (0.5 + 0.5 * 1.0 / (1.0 + np.exp(-raw[1 + H:1 + 2 * H])))
        speed[0] = step
        wps = np.cumsum(np.column_stack([speed * np.cos(heading), speed * np.sin(heading)]), axis=0)
        return CandidatePath(wps, td, 10.0 * np.tanh(raw[1 + 2 * H:3 + 2 * H]))
