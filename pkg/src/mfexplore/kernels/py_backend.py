"""Pure-Python backend for the hot kernels (grid visibility and the
Eikonal distance solve).

These loops define the kernel semantics; the compiled backend mirrors the
same integer line walk, the same upwind update expression and the same
heap ordering so both backends return bit-identical arrays.
"""

from __future__ import annotations

import heapq
import math

import numpy as np

BACKEND = "python"

_INF = float("inf")


def los_clear(blocked: np.ndarray, r0: int, c0: int, r1: int, c1: int) -> bool:
    """True when no blocked cell lies strictly between the two cells along
    the Bresenham line from (r0, c0) to (r1, c1)."""
    dx = abs(c1 - c0)
    dy = abs(r1 - r0)
    sx = 1 if c1 >= c0 else -1
    sy = 1 if r1 >= r0 else -1
    err = dx - dy
    x, y = c0, r0
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


def visible_cells(
    blocked: np.ndarray,
    ax: float,
    ay: float,
    cos_h: float,
    sin_h: float,
    cos_half_fov: float,
    full_fov: bool,
    range_m: float,
    res: float,
) -> np.ndarray:
    """uint8 mask of cells visible from the continuous point (ax, ay).

    A cell is visible when its center lies within range_m of the agent
    point, its direction passes the cone test dot(d, heading) > |d|*cos_half
    (skipped for full_fov), and the Bresenham line from the agent cell has
    no blocked cell strictly between the endpoints. The agent's own cell is
    always visible.
    """
    rows, cols = blocked.shape
    out = np.zeros((rows, cols), dtype=np.uint8)
    ar = min(max(int(math.floor(ay / res)), 0), rows - 1)
    ac = min(max(int(math.floor(ax / res)), 0), cols - 1)
    r0 = max(0, int(math.floor((ay - range_m) / res)))
    r1 = min(rows - 1, int(math.floor((ay + range_m) / res)))
    c0 = max(0, int(math.floor((ax - range_m) / res)))
    c1 = min(cols - 1, int(math.floor((ax + range_m) / res)))
    rng2 = range_m * range_m
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
                if not dot > math.sqrt(d2) * cos_half_fov:
                    continue
            if los_clear(blocked, ar, ac, i, j):
                out[i, j] = 1
    return out


def fmm_field(
    trav: np.ndarray,
    sources: np.ndarray,
    h: float,
    return_order: bool = False,
):
    """First-order upwind fast-marching distance field.

    trav is a uint8/bool traversability mask, sources are flat cell indices
    (already filtered to traversable cells), h is the cell size in meters.
    Heap ties break on the flat cell index. Returns the float64 field with
    +inf on cells unreachable from the sources; with return_order also
    returns the finalized values in acceptance order.
    """
    rows, cols = trav.shape
    u = np.full((rows, cols), _INF, dtype=np.float64)
    done = np.zeros((rows, cols), dtype=bool)
    heap: list[tuple[float, int]] = []
    uf = u.ravel()
    for idx in sources:
        idx = int(idx)
        uf[idx] = 0.0
        heapq.heappush(heap, (0.0, idx))
    order: list[float] = []
    while heap:
        val, idx = heapq.heappop(heap)
        r, c = divmod(idx, cols)
        if done[r, c]:
            continue
        done[r, c] = True
        if return_order:
            order.append(val)
        for dr, dc in ((-1, 0), (1, 0), (0, -1), (0, 1)):
            i = r + dr
            j = c + dc
            if i < 0 or i >= rows or j < 0 or j >= cols:
                continue
            if done[i, j] or not trav[i, j]:
                continue
            a = _INF
            if i > 0 and trav[i - 1, j]:
                a = u[i - 1, j]
            if i < rows - 1 and trav[i + 1, j] and u[i + 1, j] < a:
                a = u[i + 1, j]
            b = _INF
            if j > 0 and trav[i, j - 1]:
                b = u[i, j - 1]
            if j < cols - 1 and trav[i, j + 1] and u[i, j + 1] < b:
                b = u[i, j + 1]
            if b < a:
                a, b = b, a
            if a == _INF:
                continue
            if b - a >= h:
                cand = a + h
            else:
                d = a - b
                cand = 0.5 * ((a + b) + math.sqrt(2.0 * h * h - d * d))
            if cand < u[i, j]:
                u[i, j] = cand
                heapq.heappush(heap, (cand, i * cols + j))
    if return_order:
        return u, np.asarray(order, dtype=np.float64)
    return u
