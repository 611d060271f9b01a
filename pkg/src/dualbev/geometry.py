"""Camera frustum lattice, depth lifting and BEV grid indexing.

Frames: the camera frame has z forward, x right, y down. The robot frame has
x forward, y left, z up. ``CameraModel.rotation``/``translation`` map camera
coordinates into the robot frame.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

OUT = -1
"""Grid index value for points outside the BEV grid."""

# camera (x right, y down, z forward) -> robot (x forward, y left, z up)
CAM_TO_ROBOT = np.array([[0.0, 0.0, 1.0], [-1.0, 0.0, 0.0], [0.0, -1.0, 0.0]])


@dataclass(frozen=True)
class CameraModel:
    fx: float
    fy: float
    cx: float
    cy: float
    rotation: np.ndarray = field(default_factory=lambda: CAM_TO_ROBOT.copy())
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError(f"focal lengths must be positive, got fx={self.fx}, fy={self.fy}")
        rot = np.asarray(self.rotation, dtype=float)
        trans = np.asarray(self.translation, dtype=float)
        if rot.shape != (3, 3) or trans.shape != (3,):
            raise ValueError(f"extrinsics must be 3x3 + 3, got {rot.shape} and {trans.shape}")
        if not np.allclose(rot @ rot.T, np.eye(3), atol=1e-9, rtol=0) or abs(np.linalg.det(rot) - 1.0) > 1e-9:
            raise ValueError("extrinsic rotation is not orthonormal with determinant +1")
        object.__setattr__(self, "rotation", rot)
        object.__setattr__(self, "translation", trans)

    @classmethod
    def identity(cls, fx, fy, cx, cy):
        """Camera whose frame coincides with the robot frame (useful in tests)."""
        return cls(fx, fy, cx, cy, np.eye(3), np.zeros(3))

    @classmethod
    def forward(cls, image_w, image_h, hfov_deg=90.0, height=0.0):
        """Forward-looking pinhole camera at the robot origin, ``height`` meters up."""
        fx = (image_w / 2.0) / np.tan(np.radians(hfov_deg) / 2.0)
        return cls(fx, fx, image_w / 2.0, image_h / 2.0, CAM_TO_ROBOT.copy(), np.array([0.0, 0.0, height]))


@dataclass(frozen=True)
class BevGridSpec:
    x_min: float = -5.0
    x_max: float = 20.0
    x_step: float = 0.25
    y_min: float = -10.0
    y_max: float = 10.0
    y_step: float = 0.2
    depth_min: float = 1.0
    depth_max: float = 20.0
    depth_step: float = 0.25

    def __post_init__(self):
        for name in ("x_step", "y_step", "depth_step"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.x_max <= self.x_min or self.y_max <= self.y_min or self.depth_max < self.depth_min:
            raise ValueError("grid bounds are empty")

    @property
    def nx(self) -> int:
        return int(round((self.x_max - self.x_min) / self.x_step))

    @property
    def ny(self) -> int:
        return int(round((self.y_max - self.y_min) / self.y_step))

    @property
    def n_cells(self) -> int:
        return self.nx * self.ny

    @property
    def n_depth(self) -> int:
        return int(round((self.depth_max - self.depth_min) / self.depth_step)) + 1

    def depth_bins(self) -> np.ndarray:
        """Depth bin centers in meters."""
        return self.depth_min + self.depth_step * np.arange(self.n_depth)

    def cell_center(self, gx, gy):
        return (
            self.x_min + (np.asarray(gx) + 0.5) * self.x_step,
            self.y_min + (np.asarray(gy) + 0.5) * self.y_step,
        )


def normalize_depth(logits, axis=-1):
    """Softmax over depth bins; each pixel's weights sum to one."""
    logits = np.asarray(logits, dtype=float)
    shifted = logits - logits.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=axis, keepdims=True)


def make_frustum(image_w: int, image_h: int, cam: CameraModel, grid: BevGridSpec) -> np.ndarray:
    """Robot-frame 3D point for every (row, col, depth bin); shape (H, W, D, 3).

    Pixel (row v, col u) at depth d sits at camera coordinates
    (d (u - cx) / fx, d (v - cy) / fy, d).
    """
    if image_w < 1 or image_h < 1:
        raise ValueError(f"image size must be >= 1, got {image_w}x{image_h}")
    depths = grid.depth_bins()
    u = np.arange(image_w, dtype=float)
    v = np.arange(image_h, dtype=float)
    d = depths[None, None, :]
    xc = d * ((u[None, :, None] - cam.cx) / cam.fx)
    yc = d * ((v[:, None, None] - cam.cy) / cam.fy)
    shape = (image_h, image_w, depths.size)
    cam_pts = np.stack(
        [np.broadcast_to(xc, shape), np.broadcast_to(yc, shape), np.broadcast_to(d, shape)], axis=-1
    )
    return cam_pts @ cam.rotation.T + cam.translation


def lift(pixel_features: np.ndarray, depth: np.ndarray) -> np.ndarray:
    """Outer product of per-pixel depth weights (H, W, D) and features (H, W, C) -> (H, W, D, C)."""
    pixel_features = np.asarray(pixel_features, dtype=float)
    depth = np.asarray(depth, dtype=float)
    if pixel_features.ndim != 3 or depth.ndim != 3 or pixel_features.shape[:2] != depth.shape[:2]:
        raise ValueError(
            f"shape mismatch: pixel_features {pixel_features.shape} vs depth {depth.shape}"
        )
    return depth[..., :, None] * pixel_features[..., None, :]


def project_to_grid(points: np.ndarray, grid: BevGridSpec) -> tuple[np.ndarray, np.ndarray]:
    """Floor-index robot-frame points into half-open BEV cells; OUT (-1) outside."""
    pts = np.asarray(points, dtype=float)
    x = pts[..., 0]
    y = pts[..., 1]
    inside = (x >= grid.x_min) & (x < grid.x_max) & (y >= grid.y_min) & (y < grid.y_max)
    gx = np.floor((x - grid.x_min) / grid.x_step)
    gy = np.floor((y - grid.y_min) / grid.y_step)
    # float rounding can push a point just below x_max into index nx
    inside &= (gx >= 0) & (gx < grid.nx) & (gy >= 0) & (gy < grid.ny)
    gx = np.where(inside, gx, OUT).astype(np.int64)
    gy = np.where(inside, gy, OUT).astype(np.int64)
    return gx, gy


@dataclass
class FeaturePointCloud:
    """Lifted feature points with precomputed BEV indices (OUT = -1)."""

    grid_x: np.ndarray
    grid_y: np.ndarray
    features: np.ndarray
    channels: Optional[int] = None

    def __post_init__(self):
        self.grid_x = np.asarray(self.grid_x, dtype=np.int64).ravel()
        self.grid_y = np.asarray(self.grid_y, dtype=np.int64).ravel()
        feats = np.asarray(self.features, dtype=float)
        if self.channels is None:
            if feats.ndim != 2:
                raise ValueError(f"features must be (N, C), got shape {feats.shape}")
            self.channels = feats.shape[1]
        if feats.ndim != 2 or feats.shape[1] != self.channels:
            raise ValueError(f"channel count mismatch: expected {self.channels}, got {feats.shape}")
        if not (len(self.grid_x) == len(self.grid_y) == feats.shape[0]):
            raise ValueError(
                f"length mismatch: {len(self.grid_x)} x-indices, {len(self.grid_y)} y-indices, {feats.shape[0]} features"
            )
        self.features = feats

    def __len__(self):
        return self.features.shape[0]

    @classmethod
    def from_lifted(cls, lifted: np.ndarray, frustum: np.ndarray, grid: BevGridSpec):
        """Flatten a lifted (H, W, D, C) tensor against its (H, W, D, 3) frustum."""
        if lifted.shape[:3] != frustum.shape[:3]:
            raise ValueError(f"shape mismatch: lifted {lifted.shape} vs frustum {frustum.shape}")
        gx, gy = project_to_grid(frustum, grid)
        c = lifted.shape[-1]
        return cls(gx.ravel(), gy.ravel(), lifted.reshape(-1, c), c)

    @classmethod
    def from_points(cls, points):
        """Build from a list of ``(grid_x, grid_y, feature)`` tuples."""
        if not points:
            raise ValueError("use FeaturePointCloud.empty(C) for an empty cloud")
        lengths = {len(np.atleast_1d(f)) for _, _, f in points}
        if len(lengths) != 1:
            raise ValueError(f"channel count mismatch among points: {sorted(lengths)}")
        gx = [p[0] for p in points]
        gy = [p[1] for p in points]
        feats = np.array([np.atleast_1d(p[2]) for p in points], dtype=float)
        return cls(gx, gy, feats)

    @classmethod
    def empty(cls, channels: int):
        return cls(np.zeros(0), np.zeros(0), np.zeros((0, channels)), channels)
