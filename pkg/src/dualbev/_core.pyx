# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels. Signatures mirror ``dualbev._fallback`` exactly."""

import numpy as np
cimport numpy as cnp

cnp.import_array()

cdef double _INF = 1e20


def segment_sum_sorted(const cnp.int64_t[::1] keys, const double[:, ::1] feats, Py_ssize_t n_cells):
    """Sum feature rows over contiguous runs of equal ``keys`` (already sorted)."""
    cdef Py_ssize_t n = keys.shape[0]
    cdef Py_ssize_t c = feats.shape[1]
    out_arr = np.zeros((n_cells, c), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i = 0, j, k, start
    cdef cnp.int64_t key
    while i < n:
        key = keys[i]
        start = i
        while i < n and keys[i] == key:
            i += 1
        # rows of one run are contiguous; accumulate straight into the cell row
        for j in range(start, i):
            for k in range(c):
                out[key, k] += feats[j, k]
    return out_arr


def interval_pool(const cnp.int64_t[::1] keys, const double[:, ::1] feats, Py_ssize_t n_cells):
    """Stable counting sort of rows by cell, then one reduction per cell interval.

    Rows inside an interval keep their input order and are summed sequentially.
    """
    cdef Py_ssize_t n = keys.shape[0]
    cdef Py_ssize_t c = feats.shape[1]
    out_arr = np.zeros((n_cells, c), dtype=np.float64)
    offsets_arr = np.zeros(n_cells + 1, dtype=np.int64)
    order_arr = np.empty(n, dtype=np.int64)
    cdef double[:, ::1] out = out_arr
    cdef cnp.int64_t[::1] offsets = offsets_arr
    cdef cnp.int64_t[::1] order = order_arr
    cdef Py_ssize_t i, j, k, cell
    for i in range(n):
        offsets[keys[i] + 1] += 1
    for cell in range(n_cells):
        offsets[cell + 1] += offsets[cell]
    # offsets[cell] now marks the start of each interval; fill it as a cursor
    cursor_arr = offsets_arr[:n_cells].copy()
    cdef cnp.int64_t[::1] cursor = cursor_arr
    for i in range(n):
        order[cursor[keys[i]]] = i
        cursor[keys[i]] += 1
    for cell in range(n_cells):
        for j in range(offsets[cell], offsets[cell + 1]):
            i = order[j]
            for k in range(c):
                out[cell, k] += feats[i, k]
    return out_arr


cdef void _edt_1d(double* f, Py_ssize_t n, Py_ssize_t stride,
                  double* d, int* v, double* z) noexcept nogil:
    # lower envelope of parabolas rooted at (q, f[q]); f is updated in place
    cdef Py_ssize_t q, k = 0
    cdef double s
    v[0] = 0
    z[0] = -_INF
    z[1] = _INF
    for q in range(1, n):
        s = ((f[q * stride] + q * q) - (f[v[k] * stride] + v[k] * v[k])) / (2.0 * q - 2.0 * v[k])
        while s <= z[k]:
            k -= 1
            s = ((f[q * stride] + q * q) - (f[v[k] * stride] + v[k] * v[k])) / (2.0 * q - 2.0 * v[k])
        k += 1
        v[k] = q
        z[k] = s
        z[k + 1] = _INF
    k = 0
    for q in range(n):
        while z[k + 1] < q:
            k += 1
        d[q] = (q - v[k]) * (q - v[k]) + f[v[k] * stride]
    for q in range(n):
        f[q * stride] = d[q]


def edt_sq(const cnp.uint8_t[:, ::1] mask):
    """Squared Euclidean distance (pixel units) from each pixel to the nearest nonzero pixel."""
    cdef Py_ssize_t h = mask.shape[0], w = mask.shape[1]
    cdef Py_ssize_t r, col, m = h if h > w else w
    out_arr = np.empty((h, w), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    for r in range(h):
        for col in range(w):
            out[r, col] = 0.0 if mask[r, col] else _INF
    d_arr = np.empty(m, dtype=np.float64)
    z_arr = np.empty(m + 1, dtype=np.float64)
    v_arr = np.empty(m, dtype=np.intc)
    cdef double[::1] d = d_arr
    cdef double[::1] z = z_arr
    cdef int[::1] v = v_arr
    cdef double* base = &out[0, 0]
    with nogil:
        for col in range(w):
            _edt_1d(base + col, h, w, &d[0], &v[0], &z[0])
        for r in range(h):
            _edt_1d(base + r * w, w, 1, &d[0], &v[0], &z[0])
    return out_arr


def grid_bfs(const cnp.uint8_t[:, ::1] free, Py_ssize_t sr, Py_ssize_t sc):
    """8-connected BFS from (sr, sc) over nonzero cells of ``free``.

    Returns ``(hops, diags)`` int32 arrays: minimal hop count, and the fewest
    diagonal moves among hop-minimal paths. Unreached cells hold -1. Diagonal
    moves require both adjacent orthogonal cells to be free.
    """
    cdef Py_ssize_t h = free.shape[0], w = free.shape[1]
    hops_arr = np.full((h, w), -1, dtype=np.int32)
    diags_arr = np.full((h, w), -1, dtype=np.int32)
    cdef int[:, ::1] hops = hops_arr
    cdef int[:, ::1] diags = diags_arr
    if not free[sr, sc]:
        return hops_arr, diags_arr
    queue_arr = np.empty(h * w, dtype=np.int64)
    cdef cnp.int64_t[::1] queue = queue_arr
    cdef Py_ssize_t head = 0, tail = 0, r, c, nr, nc, idx
    cdef int dr, dc, isdiag, nd
    hops[sr, sc] = 0
    diags[sr, sc] = 0
    queue[tail] = sr * w + sc
    tail += 1
    while head < tail:
        idx = queue[head]
        head += 1
        r = idx // w
        c = idx % w
        for dr in range(-1, 2):
            for dc in range(-1, 2):
                if dr == 0 and dc == 0:
                    continue
                nr = r + dr
                nc = c + dc
                if nr < 0 or nr >= h or nc < 0 or nc >= w or not free[nr, nc]:
                    continue
                isdiag = 1 if (dr != 0 and dc != 0) else 0
                if isdiag and (not free[r, nc] or not free[nr, c]):
                    continue
                nd = diags[r, c] + isdiag
                if hops[nr, nc] < 0:
                    hops[nr, nc] = hops[r, c] + 1
                    diags[nr, nc] = nd
                    queue[tail] = nr * w + nc
                    tail += 1
                elif hops[nr, nc] == hops[r, c] + 1 and nd < diags[nr, nc]:
                    diags[nr, nc] = nd
    return hops_arr, diags_arr
