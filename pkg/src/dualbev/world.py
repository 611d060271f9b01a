"""Robot pose and the occupancy-grid world used by the oracle and the simulator."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .raster import OverheadRaster


def wrap_angle(a: float) -> float:
    """Map an angle into (-pi, pi]."""
    a = math.fmod(a + math.pi, 2.0 * math.pi)
    if a <= 0.0:
        a += 2.0 * math.pi
    return a - math.pi


@dataclass(frozen=True)
class Pose2D:
    x: float
    y: float
    heading: float = 0.0

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.x, self.y, self.heading)):
            raise ValueError(f"pose must be finite, got {self}")
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))
        object.__setattr__(self, "heading", wrap_angle(float(self.heading)))

    @property
    def xy(self) -> np.ndarray:
        return np.array([self.x, self.y])


@dataclass(frozen=True)
class WorldModel:
    """Occupancy grid; ``occupied[row, col]`` is True for impassable cells.

    Cell ``(row, col)`` spans world x in ``[col*cell, (col+1)*cell)`` and y in
    ``[row*cell, (row+1)*cell)`` measured from ``origin``.
    """

    occupied: np.ndarray
    cell_size: float = 0.5
    origin: tuple = (0.0, 0.0)

    def __post_init__(self):
        occ = np.array(self.occupied, dtype=bool)
        if occ.ndim != 2:
            raise ValueError(f"occupancy grid must be 2-D, got shape {occ.shape}")
        if occ.all():
            raise ValueError("world has no free cell")
        if not self.cell_size > 0:
            raise ValueError("cell_size must be positive")
        occ.setflags(write=False)
        object.__setattr__(self, "occupied", occ)
        object.__setattr__(self, "origin", (float(self.origin[0]), float(self.origin[1])))

    @property
    def shape(self):
        return self.occupied.shape

    @property
    def bounds(self):
        """(x_min, y_min, x_max, y_max) in meters."""
        h, w = self.shape
        ox, oy = self.origin
        return ox, oy, ox + w * self.cell_size, oy + h * self.cell_size

    @property
    def free(self) -> np.ndarray:
        return ~self.occupied

    def cell_of(self, xy):
        """(row, col) integer indices; may lie outside the grid."""
        xy = np.asarray(xy, dtype=float)
        col = np.floor((xy[..., 0] - self.origin[0]) / self.cell_size).astype(int)
        row = np.floor((xy[..., 1] - self.origin[1]) / self.cell_size).astype(int)
        return row, col

    def cell_center(self, row, col):
        return np.array([
            self.origin[0] + (col + 0.5) * self.cell_size,
            self.origin[1] + (row + 0.5) * self.cell_size,
        ])

    def inside(self, xy) -> np.ndarray:
        row, col = self.cell_of(xy)
        h, w = self.shape
        return (row >= 0) & (row < h) & (col >= 0) & (col < w)

    def is_free(self, xy) -> np.ndarray:
        """True where the point is on the grid and its cell is passable."""
        xy = np.asarray(xy, dtype=float)
        row, col = self.cell_of(xy)
        ok = self.inside(xy)
        h, w = self.shape
        out = np.zeros(np.shape(row), dtype=bool)
        out[ok] = ~self.occupied[np.clip(row, 0, h - 1), np.clip(col, 0, w - 1)][ok]
        return out

    def segment_free(self, a, b) -> bool:
        """Exact check that the straight segment a->b never touches an impassable or off-grid cell."""
        return self.free_prefix(np.array([a, b], dtype=float)) is None

    def free_prefix(self, polyline):
        """Arc length at which ``polyline`` first enters blocked space, or None if it never does.

        Cells are found by exact grid-line crossings rather than sampling, so a
        segment grazing a blocked cell's corner is caught.
        """
        pts = np.asarray(polyline, dtype=float)
        if not self.is_free(pts[0]):
            return 0.0
        travelled = 0.0
        for a, b in zip(pts[:-1], pts[1:]):
            seg = float(np.hypot(*(b - a)))
            t_enter = self._segment_entry(a, b)
            if t_enter is not None:
                return travelled + seg * t_enter
            travelled += seg
        return None

    def _segment_entry(self, a, b):
        """Parameter t in [0, 1] where a->b first enters a blocked cell, else None."""
        ua = (a - self.origin) / self.cell_size
        ub = (b - self.origin) / self.cell_size
        d = ub - ua
        ts = [np.array([0.0, 1.0])]
        for k in range(2):
            if d[k] != 0.0:
                lo, hi = sorted((ua[k], ub[k]))
                lines = np.arange(math.ceil(lo), math.floor(hi) + 1, dtype=float)
                ts.append((lines - ua[k]) / d[k])
        t = np.unique(np.clip(np.concatenate(ts), 0.0, 1.0))
        # one probe inside every piece between crossings, plus the end point itself
        probes = np.concatenate([(t[:-1] + t[1:]) / 2.0, [1.0]])
        starts = np.concatenate([t[:-1], [1.0]])
        ok = self.is_free(a + probes[:, None] * (b - a))
        if ok.all():
            return None
        return float(starts[int(np.argmin(ok))])

    def obstacle_raster(self) -> OverheadRaster:
        return OverheadRaster(self.occupied.astype(float), self.origin, self.cell_size)

    def overhead(self, seed: int = 0, noise: float = 0.05, free_level=0.7, obstacle_level=0.2) -> OverheadRaster:
        """Satellite-like intensity view: obstacles dark, free ground bright, plus Gaussian noise."""
        rng = np.random.default_rng(seed)
        img = np.where(self.occupied, obstacle_level, free_level) + noise * rng.standard_normal(self.shape)
        return OverheadRaster(np.clip(img, 0.0, 1.0), self.origin, self.cell_size)

    @classmethod
    def from_raster(cls, raster: OverheadRaster, threshold: float = 0.5):
        return cls(np.asarray(raster.cells) >= threshold, raster.meters_per_pixel, raster.origin)
