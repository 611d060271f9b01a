"""Global traversability hint maps.

Maps store a *cost* in [0, 1]: 1 on impassable ground, decaying away from it.
A trained segmentation model is replaced here by two stand-ins: an analytic
map synthesized from known obstacles, and a per-pixel logistic model fit to
trajectory masks with focal loss.
"""

from __future__ import annotations

import logging
import math

import numpy as np

from . import _kernels
from .losses import DEFAULT_ALPHA, DEFAULT_GAMMA, focal_loss_logits, sigmoid
from .raster import OverheadRaster, ProbabilityMap, TrajectoryLog

log = logging.getLogger(__name__)

DEFAULT_SIGMA = 2.0
DEFAULT_STROKE_RADIUS = 0.5
PATH_SAMPLE_PITCH = 0.5


def _segment_distance(px, py, a, b):
    ab = b - a
    denom = float(ab @ ab)
    if denom == 0.0:
        return np.hypot(px - a[0], py - a[1])
    t = np.clip(((px - a[0]) * ab[0] + (py - a[1]) * ab[1]) / denom, 0.0, 1.0)
    return np.hypot(px - (a[0] + t * ab[0]), py - (a[1] + t * ab[1]))


def rasterize_trajectories(logs, raster_spec: OverheadRaster, radius: float = DEFAULT_STROKE_RADIUS) -> OverheadRaster:
    """Binary mask: 1 where a pixel center lies within ``radius`` of any trajectory segment."""
    mask = np.zeros(raster_spec.cells.shape)
    mpp = raster_spec.meters_per_pixel
    for tlog in logs:
        if not isinstance(tlog, TrajectoryLog):
            tlog = TrajectoryLog(tlog)
        pts = tlog.points
        if not np.all(raster_spec.contains(pts)):
            raise ValueError("trajectory leaves the raster bounds")
        for a, b in zip(pts[:-1], pts[1:]):
            lo = np.minimum(a, b) - radius
            hi = np.maximum(a, b) + radius
            c0, r0 = raster_spec.pixel_coords(lo)
            c1, r1 = raster_spec.pixel_coords(hi)
            c0, r0 = max(int(math.floor(c0)), 0), max(int(math.floor(r0)), 0)
            c1, r1 = min(int(math.ceil(c1)), raster_spec.width), min(int(math.ceil(r1)), raster_spec.height)
            if c0 >= c1 or r0 >= r1:
                continue
            xs, ys = raster_spec.pixel_center(np.arange(r0, r1)[:, None], np.arange(c0, c1)[None, :])
            hit = _segment_distance(xs, ys, a, b) <= radius + 1e-12 * mpp
            mask[r0:r1, c0:c1][hit] = 1.0
    return OverheadRaster(mask, raster_spec.origin, mpp)


def distance_transform(mask: OverheadRaster, backend=None) -> OverheadRaster:
    """Exact Euclidean distance (meters) from each pixel center to the nearest foreground pixel."""
    kernels = _kernels.BACKENDS[backend] if backend else _kernels
    fg = np.ascontiguousarray(np.asarray(mask.cells) > 0.5, dtype=np.uint8)
    if not fg.any():
        raise ValueError("distance transform needs at least one foreground pixel")
    d2 = np.asarray(kernels.edt_sq(fg))
    return OverheadRaster(np.sqrt(d2) * mask.meters_per_pixel, mask.origin, mask.meters_per_pixel)


def synth_hint_map(obstacle_mask: OverheadRaster, sigma: float = DEFAULT_SIGMA) -> ProbabilityMap:
    """exp(-d / sigma) of the distance to the nearest obstacle."""
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    dist = distance_transform(obstacle_mask)
    return ProbabilityMap(np.exp(-dist.cells / sigma), dist.origin, dist.meters_per_pixel)


def sample_polyline(path, pitch: float = PATH_SAMPLE_PITCH) -> np.ndarray:
    """``max(2, ceil(length / pitch))`` points equally spaced by arc length, endpoints included."""
    path = np.atleast_2d(np.asarray(path, dtype=float))
    if path.shape[0] < 1 or path.shape[1] != 2:
        raise ValueError(f"path must be (N, 2) with N >= 1, got {path.shape}")
    seg = np.hypot(*np.diff(path, axis=0).T) if len(path) > 1 else np.zeros(0)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    length = cum[-1]
    n = max(2, math.ceil(length / pitch))
    if length == 0.0:
        return np.repeat(path[:1], n, axis=0)
    s = np.linspace(0.0, length, n)
    return np.column_stack([np.interp(s, cum, path[:, 0]), np.interp(s, cum, path[:, 1])])


def bilinear(raster: OverheadRaster, xy, outside: float = 1.0) -> np.ndarray:
    """Interpolate between pixel centers (edge-clamped); points off the raster get ``outside``."""
    xy = np.atleast_2d(np.asarray(xy, dtype=float))
    col, row = raster.pixel_coords(xy)
    inside = raster.contains(xy)
    fc = np.clip(col - 0.5, 0.0, raster.width - 1)
    fr = np.clip(row - 0.5, 0.0, raster.height - 1)
    c0 = np.minimum(np.floor(fc).astype(int), raster.width - 1)
    r0 = np.minimum(np.floor(fr).astype(int), raster.height - 1)
    c1 = np.minimum(c0 + 1, raster.width - 1)
    r1 = np.minimum(r0 + 1, raster.height - 1)
    tc = fc - c0
    tr = fr - r0
    g = raster.cells
    val = (
        (1 - tr) * ((1 - tc) * g[r0, c0] + tc * g[r0, c1])
        + tr * ((1 - tc) * g[r1, c0] + tc * g[r1, c1])
    )
    return np.where(inside, val, outside)


def score_path(hint_map: ProbabilityMap, path, pitch: float = PATH_SAMPLE_PITCH) -> float:
    """Mean hint cost along a world-frame polyline; samples off the map count as 1.0."""
    return float(np.mean(bilinear(hint_map, sample_polyline(path, pitch), outside=1.0)))


def _box_mean(img, k):
    pad = k // 2
    p = np.pad(img, pad, mode="edge")
    cs = np.pad(p.cumsum(0).cumsum(1), ((1, 0), (1, 0)))
    h, w = img.shape
    return (cs[k:k + h, k:k + w] - cs[:h, k:k + w] - cs[k:k + h, :w] + cs[:h, :w]) / (k * k)


def intensity_features(overhead: OverheadRaster) -> np.ndarray:
    """Per-pixel features (H*W, F): bias, intensity, its square, 3x3 and 7x7 box means (standardized)."""
    img = np.asarray(overhead.cells, dtype=float)
    raw = np.stack([img, img**2, _box_mean(img, 3), _box_mean(img, 7)], axis=-1).reshape(-1, 4)
    std = raw.std(axis=0)
    raw = (raw - raw.mean(axis=0)) / np.where(std > 0, std, 1.0)
    return np.column_stack([np.ones(len(raw)), raw])


def fit_tiny_gbpm(
    masks,
    overhead: OverheadRaster,
    epochs: int = 50,
    alpha: float = DEFAULT_ALPHA,
    gamma: float = DEFAULT_GAMMA,
    lr: float = 10.0,
    tol: float = 1e-7,
    history: list | None = None,
) -> ProbabilityMap:
    """Per-pixel logistic traversability model trained with focal loss on trajectory masks.

    Returns ``1 - P(traversable)`` as hint cost. Full-batch gradient descent with a
    backtracking step keeps the loss non-increasing; training stops early once the
    relative improvement drops below ``tol``. Per-epoch losses go to ``history``.
    """
    if isinstance(masks, OverheadRaster):
        masks = [masks]
    if not masks:
        raise ValueError("need at least one trajectory mask")
    labels = np.zeros(overhead.cells.shape)
    for m in masks:
        if not m.same_geo(overhead):
            raise ValueError("trajectory mask and overhead raster must share georeferencing")
        labels = np.maximum(labels, np.asarray(m.cells) > 0.5)
    labels = labels.ravel()
    if labels.all() or not labels.any():
        raise ValueError("degenerate trajectory mask: needs both foreground and background pixels")

    feats = intensity_features(overhead)
    w = np.zeros(feats.shape[1])

    def objective(weights):
        loss, g_logit = focal_loss_logits(feats @ weights, labels, alpha, gamma)
        return loss, feats.T @ g_logit

    loss, grad = objective(w)
    step = lr
    for epoch in range(1, epochs + 1):
        while True:
            cand = w - step * grad
            cand_loss, cand_grad = objective(cand)
            if cand_loss <= loss - 1e-4 * step * float(grad @ grad):
                break
            step *= 0.5
            if step < 1e-12:
                cand = None
                break
        if cand is None:
            log.info("gbpm fit: no descent step at epoch %d; stopping", epoch)
            break
        improvement = (loss - cand_loss) / max(loss, 1e-300)
        w, loss, grad = cand, cand_loss, cand_grad
        step = min(step * 2.0, lr)
        if history is not None:
            history.append(loss)
        log.info("gbpm fit epoch %d focal loss %.8f", epoch, loss)
        if improvement < tol:
            break
    cost = 1.0 - sigmoid(feats @ w).reshape(overhead.cells.shape)
    return ProbabilityMap(np.clip(cost, 0.0, 1.0), overhead.origin, overhead.meters_per_pixel)
