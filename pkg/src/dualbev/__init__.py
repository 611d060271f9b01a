"""Dual-layer BEV navigation: BEV lift/pool geometry, hint maps, arc-sweep planning and a closed-loop simulator."""

from ._kernels import BACKEND
from .geometry import BevGridSpec, CameraModel, FeaturePointCloud, lift, make_frustum, project_to_grid
from .global_map import distance_transform, fit_tiny_gbpm, rasterize_trajectories, score_path, synth_hint_map
from .integration import NavConfig, run_cycle, select_path
from .local_planner import OraclePlanner, PlannerConfig, StubPlanner, oracle_temporal_distance
from .pooling import pool_interval, pool_naive
from .raster import OverheadRaster, ProbabilityMap
from .world import Pose2D, WorldModel

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BevGridSpec",
    "CameraModel",
    "FeaturePointCloud",
    "NavConfig",
    "OraclePlanner",
    "OverheadRaster",
    "PlannerConfig",
    "Pose2D",
    "ProbabilityMap",
    "StubPlanner",
    "WorldModel",
    "distance_transform",
    "fit_tiny_gbpm",
    "lift",
    "make_frustum",
    "oracle_temporal_distance",
    "pool_interval",
    "pool_naive",
    "project_to_grid",
    "rasterize_trajectories",
    "run_cycle",
    "score_path",
    "select_path",
    "synth_hint_map",
]
