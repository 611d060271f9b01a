"""Pure-Python/NumPy versions of the kernels in ``_core.pyx``.

Selected at import when the compiled extension is unavailable, or forced with
``DUALBEV_PURE_PYTHON=1``. Results match the compiled kernels to float rounding.
"""

from collections import deque

import numpy as np

_INF = 1e20


def segment_sum_sorted(keys, feats, n_cells):
    """Sum feature rows over contiguous runs of equal ``keys`` (already sorted)."""
    keys = np.asarray(keys, dtype=np.int64)
    feats = np.asarray(feats, dtype=np.float64)
    out = np.zeros((n_cells, feats.shape[1]), dtype=np.float64)
    if keys.size == 0:
        return out
    starts = np.flatnonzero(np.r_[True, keys[1:] != keys[:-1]])
    out[keys[starts]] = np.add.reduceat(feats, starts, axis=0)
    return out


def interval_pool(keys, feats, n_cells):
    """Group rows by cell with a stable sort, then reduce each contiguous interval."""
    keys = np.asarray(keys, dtype=np.int64)
    order = np.argsort(keys, kind="stable")
    return segment_sum_sorted(keys[order], np.asarray(feats, dtype=np.float64)[order], n_cells)


def _edt_1d(f):
    n = len(f)
    v = [0] * n
    z = [0.0] * (n + 1)
    k = 0
    z[0] = -_INF
    z[1] = _INF
    for q in range(1, n):
        fq = f[q] + q * q
        s = (fq - (f[v[k]] + v[k] * v[k])) / (2.0 * q - 2.0 * v[k])
        while s <= z[k]:
            k -= 1
            s = (fq - (f[v[k]] + v[k] * v[k])) / (2.0 * q - 2.0 * v[k])
        k += 1
        v[k] = q
        z[k] = s
        z[k + 1] = _INF
    out = [0.0] * n
    k = 0
    for q in range(n):
        while z[k + 1] < q:
            k += 1
        out[q] = (q - v[k]) ** 2 + f[v[k]]
    return out


def edt_sq(mask):
    """Squared Euclidean distance (pixel units) from each pixel to the nearest nonzero pixel."""
    mask = np.asarray(mask)
    grid = np.where(mask != 0, 0.0, _INF)
    for col in range(grid.shape[1]):
        grid[:, col] = _edt_1d(grid[:, col].tolist())
    for row in range(grid.shape[0]):
        grid[row, :] = _edt_1d(grid[row, :].tolist())
    return grid


_MOVES = [(dr, dc) for dr in (-1, 0, 1) for dc in (-1, 0, 1) if dr or dc]


def grid_bfs(free, sr, sc):
    """8-connected BFS; see ``_core.grid_bfs`` for the contract."""
    free = np.asarray(free, dtype=bool)
    h, w = free.shape
    hops = np.full((h, w), -1, dtype=np.int32)
    diags = np.full((h, w), -1, dtype=np.int32)
    if not free[sr, sc]:
        return hops, diags
    fl = free.tolist()
    hp = hops.tolist()
    dg = diags.tolist()
    hp[sr][sc] = 0
    dg[sr][sc] = 0
    queue = deque([(sr, sc)])
    while queue:
        r, c = queue.popleft()
        nh = hp[r][c] + 1
        for dr, dc in _MOVES:
            nr, nc = r + dr, c + dc
            if nr < 0 or nr >= h or nc < 0 or nc >= w or not fl[nr][nc]:
                continue
            isdiag = 1 if dr and dc else 0
            if isdiag and not (fl[r][nc] and fl[nr][c]):
                continue
            nd = dg[r][c] + isdiag
            if hp[nr][nc] < 0:
                hp[nr][nc] = nh
                dg[nr][nc] = nd
                queue.append((nr, nc))
            elif hp[nr][nc] == nh and nd < dg[nr][nc]:
                dg[nr][nc] = nd
    return np.array(hp, dtype=np.int32), np.array(dg, dtype=np.int32)
