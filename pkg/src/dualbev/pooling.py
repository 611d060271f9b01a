"""BEV pooling: sum lifted feature points into grid cells.

``pool_naive`` is a direct scatter-add and serves as the reference.
``pool_interval`` groups points by linearized cell index with a stable sort
and reduces each contiguous interval once. Grouping and reduction are the
compiled hot loop (a counting sort, since the key range is the cell count).
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .geometry import BevGridSpec, FeaturePointCloud


@dataclass
class BevFeatureMap:
    data: np.ndarray  # (nx, ny, C)
    mode: str = "SUM"

    @property
    def channels(self) -> int:
        return self.data.shape[-1]

    def checksum(self) -> str:
        return hashlib.sha256(np.ascontiguousarray(self.data).tobytes()).hexdigest()[:16]


def _valid(points: FeaturePointCloud, grid: BevGridSpec):
    gx, gy = points.grid_x, points.grid_y
    inside = (gx >= 0) & (gy >= 0)
    if np.any(gx[inside] >= grid.nx) or np.any(gy[inside] >= grid.ny):
        raise ValueError(f"grid index out of range for a {grid.nx}x{grid.ny} grid")
    return inside


def linear_index(gx, gy, grid: BevGridSpec):
    return np.asarray(gx, dtype=np.int64) * grid.ny + np.asarray(gy, dtype=np.int64)


def pool_naive(points: FeaturePointCloud, grid: BevGridSpec) -> BevFeatureMap:
    inside = _valid(points, grid)
    out = np.zeros((grid.n_cells, points.channels))
    np.add.at(out, linear_index(points.grid_x[inside], points.grid_y[inside], grid), points.features[inside])
    return BevFeatureMap(out.reshape(grid.nx, grid.ny, points.channels))


def pool_interval(points: FeaturePointCloud, grid: BevGridSpec, backend=None) -> BevFeatureMap:
    """Sorted interval reduction; ``backend`` picks a kernel set from ``_kernels.BACKENDS``."""
    kernels = _kernels.BACKENDS[backend] if backend else _kernels
    inside = _valid(points, grid)
    keys = np.ascontiguousarray(linear_index(points.grid_x[inside], points.grid_y[inside], grid), dtype=np.int64)
    feats = np.ascontiguousarray(points.features[inside], dtype=np.float64)
    out = kernels.interval_pool(keys, feats, grid.n_cells)
    return BevFeatureMap(np.asarray(out).reshape(grid.nx, grid.ny, points.channels))


def random_cloud(n_points, channels, seed, grid=None, out_fraction=0.1, dyadic=True):
    """Deterministic benchmark workload; dyadic features make sums order-exact."""
    grid = grid or BevGridSpec()
    rng = np.random.default_rng(seed)
    gx = rng.integers(0, grid.nx, n_points)
    gy = rng.integers(0, grid.ny, n_points)
    out = rng.random(n_points) < out_fraction
    gx[out] = -1
    if dyadic:
        feats = rng.integers(-1024, 1024, (n_points, channels)) / 1024.0
    else:
        feats = rng.standard_normal((n_points, channels))
    return FeaturePointCloud(gx, gy, feats, channels)


def _time_ns(fn, repeats):
    best = None
    for _ in range(repeats):
        t0 = time.perf_counter_ns()
        result = fn()
        dt = time.perf_counter_ns() - t0
        best = dt if best is None else min(best, dt)
    return max(best, 1), result


def bench_pooling(n_points: int, channels: int, seed: int, repeats: int = 3, stream=None) -> dict:
    """Time naive vs interval pooling on a seeded workload; return the report (also written to ``stream`` if given)."""
    if n_points < 1:
        raise ValueError("n_points must be >= 1")
    grid = BevGridSpec()
    cloud = random_cloud(n_points, channels, seed, grid)
    naive_ns, naive = _time_ns(lambda: pool_naive(cloud, grid), repeats)
    interval_ns, interval = _time_ns(lambda: pool_interval(cloud, grid), repeats)
    report = {
        "n_points": n_points,
        "channels": channels,
        "seed": seed,
        "backend": _kernels.BACKEND,
        "naive_ns": naive_ns,
        "interval_ns": interval_ns,
        "points_per_sec": n_points / (interval_ns * 1e-9),
        "speedup": naive_ns / interval_ns,
        "naive_checksum": naive.checksum(),
        "interval_checksum": interval.checksum(),
        "equal": bool(np.array_equal(naive.data, interval.data)),
    }
    if stream is not None:
        print(json.dumps(report), file=stream)
    return report
