"""Shared constructed fixtures (importable from any test module)."""

import numpy as np

from dualbev.raster import OverheadRaster, TrajectoryLog

ROAD_ROWS = slice(18, 22)


def road_fixture(seed=0, size=40, mpp=0.5):
    """Overhead with a bright horizontal road and one trajectory driven along its center line.

    Returns (overhead, logs, road_mask) where ``road_mask`` marks the road pixels.
    """
    rng = np.random.default_rng(seed)
    img = 0.35 + 0.04 * rng.standard_normal((size, size))
    road = np.zeros((size, size), dtype=bool)
    road[ROAD_ROWS] = True
    img[road] = 0.85 + 0.04 * rng.standard_normal(road.sum())
    overhead = OverheadRaster(np.clip(img, 0, 1), (0.0, 0.0), mpp)
    y = (ROAD_ROWS.start + ROAD_ROWS.stop) / 2 * mpp
    xs = np.linspace(0.25, size * mpp - 0.25, 30)
    logs = [TrajectoryLog(np.column_stack([xs, np.full_like(xs, y)]))]
    return overhead, logs, road


def brute_force_distance(mask):
    """Nearest-foreground Euclidean distance in pixels by scanning every pair."""
    fg = np.argwhere(mask)
    rr, cc = np.indices(mask.shape)
    pts = np.stack([rr.ravel(), cc.ravel()], axis=1)
    d2 = ((pts[:, None, :] - fg[None, :, :]) ** 2).sum(-1).min(axis=1)
    return np.sqrt(d2).reshape(mask.shape)
