# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled backend for the hot kernels.

Mirrors py_backend exactly: same Bresenham walk, same upwind update
expression, same (value, index) heap ordering, so results are
bit-identical across backends.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport floor, sqrt

cnp.import_array()

BACKEND = "compiled"

cdef double INF = float("inf")


cdef inline bint _los_clear(const unsigned char[:, ::1] blocked,
                            Py_ssize_t r0, Py_ssize_t c0,
                            Py_ssize_t r1, Py_ssize_t c1) nogil:
    cdef Py_ssize_t dx = c1 - c0
    cdef Py_ssize_t dy = r1 - r0
    cdef Py_ssize_t sx = 1 if c1 >= c0 else -1
    cdef Py_ssize_t sy = 1 if r1 >= r0 else -1
    if dx < 0:
        dx = -dx
    if dy < 0:
        dy = -dy
    cdef Py_ssize_t err = dx - dy
    cdef Py_ssize_t x = c0
    cdef Py_ssize_t y = r0
    cdef Py_ssize_t e2
    while True:
        if (x != c0 or y != r0) and (x != c1 or y != r1) and blocked[y, x]:
            return False
        if x == c1 and y == r1:
            return True
        e2 = 2 * err
        if e2 > -dy:
            err -= dy
            x += sx
        if e2 < dx:
            err += dx
            y += sy


def visible_cells(const unsigned char[:, ::1] blocked,
                  double ax, double ay,
                  double cos_h, double sin_h,
                  double cos_half_fov, bint full_fov,
                  double range_m, double res):
    cdef Py_ssize_t rows = blocked.shape[0]
    cdef Py_ssize_t cols = blocked.shape[1]
    out_arr = np.zeros((rows, cols), dtype=np.uint8)
    cdef unsigned char[:, ::1] out = out_arr
    cdef Py_ssize_t ar = <Py_ssize_t>floor(ay / res)
    cdef Py_ssize_t ac = <Py_ssize_t>floor(ax / res)
    if ar < 0:
        ar = 0
    if ar > rows - 1:
        ar = rows - 1
    if ac < 0:
        ac = 0
    if ac > cols - 1:
        ac = cols - 1
    cdef Py_ssize_t r0 = <Py_ssize_t>floor((ay - range_m) / res)
    cdef Py_ssize_t r1 = <Py_ssize_t>floor((ay + range_m) / res)
    cdef Py_ssize_t c0 = <Py_ssize_t>floor((ax - range_m) / res)
    cdef Py_ssize_t c1 = <Py_ssize_t>floor((ax + range_m) / res)
    if r0 < 0:
        r0 = 0
    if r1 > rows - 1:
        r1 = rows - 1
    if c0 < 0:
        c0 = 0
    if c1 > cols - 1:
        c1 = cols - 1
    cdef double rng2 = range_m * range_m
    cdef Py_ssize_t i, j
    cdef double dx, dy, d2, dot
    with nogil:
        for i in range(r0, r1 + 1):
            dy = (i + 0.5) * res - ay
            for j in range(c0, c1 + 1):
                dx = (j + 0.5) * res - ax
                d2 = dx * dx + dy * dy
                if d2 > rng2:
                    continue
                if i == ar and j == ac:
                    out[i, j] = 1
                    continue
                if not full_fov:
                    dot = dx * cos_h + dy * sin_h
                    if not dot > sqrt(d2) * cos_half_fov:
                        continue
                if _los_clear(blocked, ar, ac, i, j):
                    out[i, j] = 1
    return out_arr


cdef inline void _heap_push(double* hv, Py_ssize_t* hi, Py_ssize_t* n,
                            double val, Py_ssize_t idx) nogil:
    cdef Py_ssize_t k = n[0]
    cdef Py_ssize_t parent
    hv[k] = val
    hi[k] = idx
    n[0] = k + 1
    while k > 0:
        parent = (k - 1) >> 1
        if hv[parent] < hv[k] or (hv[parent] == hv[k] and hi[parent] <= hi[k]):
            break
        hv[parent], hv[k] = hv[k], hv[parent]
        hi[parent], hi[k] = hi[k], hi[parent]
        k = parent


cdef inline void _heap_pop(double* hv, Py_ssize_t* hi, Py_ssize_t* n,
                           double* val, Py_ssize_t* idx) nogil:
    val[0] = hv[0]
    idx[0] = hi[0]
    cdef Py_ssize_t last = n[0] - 1
    n[0] = last
    if last == 0:
        return
    hv[0] = hv[last]
    hi[0] = hi[last]
    cdef Py_ssize_t k = 0
    cdef Py_ssize_t child
    while True:
        child = 2 * k + 1
        if child >= last:
            break
        if child + 1 < last and (hv[child + 1] < hv[child] or
                                 (hv[child + 1] == hv[child] and hi[child + 1] < hi[child])):
            child += 1
        if hv[k] < hv[child] or (hv[k] == hv[child] and hi[k] <= hi[child]):
            break
        hv[k], hv[child] = hv[child], hv[k]
        hi[k], hi[child] = hi[child], hi[k]
        k = child


def fmm_field(const unsigned char[:, ::1] trav,
              cnp.int64_t[::1] sources,
              double h,
              bint return_order=False):
    cdef Py_ssize_t rows = trav.shape[0]
    cdef Py_ssize_t cols = trav.shape[1]
    cdef Py_ssize_t ncells = rows * cols
    u_arr = np.full((rows, cols), INF, dtype=np.float64)
    cdef double[:, ::1] u = u_arr
    done_arr = np.zeros((rows, cols), dtype=np.uint8)
    cdef unsigned char[:, ::1] done = done_arr
    order_arr = np.empty(ncells if return_order else 0, dtype=np.float64)
    cdef double[::1] order = order_arr
    cdef Py_ssize_t n_order = 0

    cdef Py_ssize_t cap = 5 * ncells + 16
    heap_vals = np.empty(cap, dtype=np.float64)
    heap_idxs = np.empty(cap, dtype=np.int64)
    cdef double[::1] hv = heap_vals
    cdef cnp.int64_t[::1] hi_view = heap_idxs
    cdef double* hvp = &hv[0]
    cdef Py_ssize_t* hip = <Py_ssize_t*>&hi_view[0]
    cdef Py_ssize_t heap_n = 0

    cdef Py_ssize_t k, idx, r, c, i, j, m
    cdef double val, a, b, d, cand
    cdef Py_ssize_t[4] drs
    cdef Py_ssize_t[4] dcs
    drs[0] = -1; dcs[0] = 0
    drs[1] = 1; dcs[1] = 0
    drs[2] = 0; dcs[2] = -1
    drs[3] = 0; dcs[3] = 1

    for k in range(sources.shape[0]):
        idx = sources[k]
        u[idx // cols, idx % cols] = 0.0
        _heap_push(hvp, hip, &heap_n, 0.0, idx)

    with nogil:
        while heap_n > 0:
            _heap_pop(hvp, hip, &heap_n, &val, &idx)
            r = idx // cols
            c = idx % cols
            if done[r, c]:
                continue
            done[r, c] = 1
            if return_order:
                order[n_order] = val
                n_order += 1
            for m in range(4):
                i = r + drs[m]
                j = c + dcs[m]
                if i < 0 or i >= rows or j < 0 or j >= cols:
                    continue
                if done[i, j] or not trav[i, j]:
                    continue
                a = INF
                if i > 0 and trav[i - 1, j]:
                    a = u[i - 1, j]
                if i < rows - 1 and trav[i + 1, j] and u[i + 1, j] < a:
                    a = u[i + 1, j]
                b = INF
                if j > 0 and trav[i, j - 1]:
                    b = u[i, j - 1]
                if j < cols - 1 and trav[i, j + 1] and u[i, j + 1] < b:
                    b = u[i, j + 1]
                if b < a:
                    a, b = b, a
                if a == INF:
                    continue
                if b - a >= h:
                    cand = a + h
                else:
                    d = a - b
                    cand = 0.5 * ((a + b) + sqrt(2.0 * h * h - d * d))
                if cand < u[i, j]:
                    u[i, j] = cand
                    _heap_push(hvp, hip, &heap_n, cand, i * cols + j)

    if return_order:
        return u_arr, order_arr[:n_order].copy()
    return u_arr
