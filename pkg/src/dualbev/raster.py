"""Georeferenced rasters and their PGM/PPM + sidecar-JSON file formats.

Pixel ``(row, col)`` covers world ``x in [ox + col*mpp, ox + (col+1)*mpp)`` and
``y in [oy + row*mpp, oy + (row+1)*mpp)``; rows grow with world y.
"""

from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class RasterFormatError(ValueError):
    pass


@dataclass(frozen=True)
class OverheadRaster:
    cells: np.ndarray
    origin: tuple = (0.0, 0.0)
    meters_per_pixel: float = 1.0

    def __post_init__(self):
        cells = np.array(self.cells, dtype=float)
        if cells.ndim != 2 or cells.shape[0] < 1 or cells.shape[1] < 1:
            raise ValueError(f"raster must be a non-empty 2-D grid, got shape {cells.shape}")
        if not self.meters_per_pixel > 0:
            raise ValueError(f"meters_per_pixel must be positive, got {self.meters_per_pixel}")
        cells.setflags(write=False)
        object.__setattr__(self, "cells", cells)
        object.__setattr__(self, "origin", (float(self.origin[0]), float(self.origin[1])))
        object.__setattr__(self, "meters_per_pixel", float(self.meters_per_pixel))

    @property
    def height(self) -> int:
        return self.cells.shape[0]

    @property
    def width(self) -> int:
        return self.cells.shape[1]

    @property
    def geo(self) -> dict:
        return {"origin_x": self.origin[0], "origin_y": self.origin[1], "meters_per_pixel": self.meters_per_pixel}

    def same_geo(self, other) -> bool:
        return self.cells.shape == other.cells.shape and self.geo == other.geo

    def with_cells(self, cells):
        return type(self)(cells, self.origin, self.meters_per_pixel)

    def pixel_coords(self, xy):
        """Continuous (col, row) coordinates of world points; pixel centers sit at +0.5."""
        xy = np.asarray(xy, dtype=float)
        return (xy[..., 0] - self.origin[0]) / self.meters_per_pixel, (xy[..., 1] - self.origin[1]) / self.meters_per_pixel

    def contains(self, xy):
        col, row = self.pixel_coords(xy)
        return (col >= 0) & (col < self.width) & (row >= 0) & (row < self.height)

    def pixel_center(self, row, col):
        mpp = self.meters_per_pixel
        return self.origin[0] + (np.asarray(col) + 0.5) * mpp, self.origin[1] + (np.asarray(row) + 0.5) * mpp


class ProbabilityMap(OverheadRaster):
    """Hint-cost raster in [0, 1]; higher means the cell should be avoided."""

    def __post_init__(self):
        super().__post_init__()
        c = self.cells
        if not np.all(np.isfinite(c)) or c.min() < 0.0 or c.max() > 1.0:
            raise ValueError(f"probability map values must lie in [0, 1], got range [{c.min()}, {c.max()}]")


def sidecar_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".geo.json")


def write_pgm(raster: OverheadRaster, path) -> None:
    """Binary P5, 8-bit round(v*255), plus ``<stem>.geo.json`` georeferencing."""
    c = raster.cells
    if c.min() < 0.0 or c.max() > 1.0:
        raise ValueError("PGM export requires values in [0, 1]")
    data = np.round(c * 255.0).astype(np.uint8)
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{raster.width} {raster.height}\n255\n".encode("ascii"))
        fh.write(data.tobytes())
    sidecar_path(path).write_text(json.dumps(raster.geo, sort_keys=True) + "\n")


_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")


def _header(buf: bytes, magic: bytes):
    if buf[:2] != magic:
        raise RasterFormatError(f"bad magic number {buf[:2]!r}, expected {magic!r}")
    pos = 2
    fields = []
    for _ in range(3):
        m = _TOKEN.match(buf, pos)
        if not m or not m.group(1).isdigit():
            got = m.group(1)[:16] if m else buf[pos:pos + 16]
            raise RasterFormatError(f"malformed header field {got!r}")
        fields.append(int(m.group(1)))
        pos = m.end()
    if pos >= len(buf) or not buf[pos:pos + 1].isspace():
        raise RasterFormatError("header not terminated by whitespace")
    width, height, maxval = fields
    if width < 1 or height < 1 or not 0 < maxval < 256:
        raise RasterFormatError(f"unsupported header values width={width} height={height} maxval={maxval}")
    return width, height, maxval, pos + 1


def read_pgm(path, cls=OverheadRaster) -> OverheadRaster:
    path = Path(path)
    buf = path.read_bytes()
    width, height, maxval, start = _header(buf, b"P5")
    payload = buf[start:start + width * height]
    if len(payload) < width * height:
        raise RasterFormatError(f"truncated payload: expected {width * height} bytes, found {len(payload)}")
    side = sidecar_path(path)
    if not side.exists():
        raise RasterFormatError(f"missing georeferencing sidecar {side}")
    geo = json.loads(side.read_text())
    try:
        origin = (geo["origin_x"], geo["origin_y"])
        mpp = geo["meters_per_pixel"]
    except KeyError as exc:
        raise RasterFormatError(f"sidecar {side} lacks key {exc}") from None
    cells = np.frombuffer(payload, dtype=np.uint8).reshape(height, width) / float(maxval)
    return cls(cells, origin, mpp)


def write_ppm(rgb: np.ndarray, path) -> None:
    rgb = np.asarray(rgb, dtype=np.uint8)
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise ValueError(f"expected (H, W, 3) image, got {rgb.shape}")
    with open(path, "wb") as fh:
        fh.write(f"P6\n{rgb.shape[1]} {rgb.shape[0]}\n255\n".encode("ascii"))
        fh.write(rgb.tobytes())


def read_ppm(path) -> np.ndarray:
    buf = Path(path).read_bytes()
    width, height, _, start = _header(buf, b"P6")
    payload = buf[start:start + width * height * 3]
    if len(payload) < width * height * 3:
        raise RasterFormatError("truncated payload")
    return np.frombuffer(payload, dtype=np.uint8).reshape(height, width, 3)


@dataclass(frozen=True)
class TrajectoryLog:
    points: np.ndarray
    times: np.ndarray | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 2:
            raise ValueError(f"trajectory needs >= 2 (x, y) points, got shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise ValueError("trajectory coordinates must be finite")
        object.__setattr__(self, "points", pts)


def read_trajectories_csv(path) -> list[TrajectoryLog]:
    """CSV ``t,x,y``; a time that does not increase starts a new trajectory."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["t", "x", "y"]:
            raise RasterFormatError(f"trajectory CSV header must be t,x,y, got {reader.fieldnames}")
        rows = [(float(r["t"]), float(r["x"]), float(r["y"])) for r in reader]
    logs, cur = [], []
    for t, x, y in rows:
        if cur and t <= cur[-1][0]:
            logs.append(cur)
            cur = []
        cur.append((t, x, y))
    if cur:
        logs.append(cur)
    return [TrajectoryLog(np.array(c)[:, 1:], np.array(c)[:, 0]) for c in logs if len(c) >= 2]


def write_trajectories_csv(logs, path, dt=1.0) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("t,x,y\n")
        for log in logs:
            times = log.times if log.times is not None else np.arange(len(log.points)) * dt
            for t, (x, y) in zip(times, log.points):
                fh.write(f"{t:.6f},{x:.6f},{y:.6f}\n")
