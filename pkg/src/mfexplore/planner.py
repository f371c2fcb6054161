"""Fast-marching distance fields, steepest-descent paths, geodesic costs."""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernels
from .errors import NoTraversableSource, UnreachableStart
from .grids import FREE, OCCUPIED, UNKNOWN
from .mapping import FloorMap


@dataclass(frozen=True)
class DistanceField:
    """Geodesic distance (meters) from a source set; +inf when unreachable."""

    values: np.ndarray  # float64 (M, M)
    sources: tuple[tuple[int, int], ...]
    res: float
    traversable: np.ndarray  # bool (M, M) mask the field was solved on

    def at(self, cell: tuple[int, int]) -> float:
        return float(self.values[cell[0], cell[1]])


@dataclass(frozen=True)
class PlannedPath:
    waypoints: list[tuple[float, float]]  # (x, y) meters
    cells: list[tuple[int, int]]
    length: float


def inflate_obstacles(occupied: np.ndarray, radius_cells: int) -> np.ndarray:
    """Dilate an obstacle mask by a Euclidean disc of the given radius."""
    if radius_cells <= 0:
        return occupied.copy()
    from scipy import ndimage

    k = radius_cells
    yy, xx = np.mgrid[-k : k + 1, -k : k + 1]
    disc = (yy * yy + xx * xx) <= k * k
    return ndimage.binary_dilation(occupied, structure=disc)


def traversable_mask(
    fmap: FloorMap | np.ndarray,
    *,
    optimistic: bool = False,
    inflation_cells: int = 0,
) -> np.ndarray:
    """Traversability from a FloorMap (or raw state grid).

    Unknown cells count as non-traversable unless optimistic; occupied
    cells (inflated by the given radius) never do.
    """
    grid = fmap.explored if isinstance(fmap, FloorMap) else fmap
    occ = grid == OCCUPIED
    if inflation_cells > 0:
        occ = inflate_obstacles(occ, inflation_cells)
    if optimistic:
        return ~occ & ((grid == FREE) | (grid == UNKNOWN))
    return ~occ & (grid == FREE)


def solve_fmm(
    fmap: FloorMap | np.ndarray,
    sources,
    *,
    traversable: np.ndarray | None = None,
    optimistic: bool = False,
    inflation_cells: int = 0,
    record_order: bool = False,
):
    """First-order upwind FMM over the traversable mask.

    sources is an iterable of (row, col) cells; non-traversable sources
    are dropped and NoTraversableSource is raised when none survive.
    With record_order also returns the finalized values in acceptance
    order (for the monotone narrow-band check).
    """
    if traversable is None:
        traversable = traversable_mask(fmap, optimistic=optimistic, inflation_cells=inflation_cells)
    res = fmap.res if isinstance(fmap, FloorMap) else None
    if res is None:
        raise ValueError("pass a FloorMap or use solve_fmm_grid with an explicit resolution")
    return _solve(traversable, sources, res, record_order)


def solve_fmm_grid(traversable: np.ndarray, sources, res: float, record_order: bool = False):
    """solve_fmm over an explicit traversability mask and resolution."""
    return _solve(traversable, sources, res, record_order)


def _solve(traversable: np.ndarray, sources, res: float, record_order: bool):
    cols = traversable.shape[1]
    flat = sorted(
        {int(r) * cols + int(c) for r, c in sources if traversable[int(r), int(c)]}
    )
    if not flat:
        raise NoTraversableSource("all sources are non-traversable")
    src = np.asarray(flat, dtype=np.int64)
    result = kernels.fmm_field(traversable, src, res, return_order=record_order)
    if record_order:
        values, order = result
    else:
        values, order = result, None
    field = DistanceField(
        values=values,
        sources=tuple(divmod(int(i), cols) for i in flat),
        res=res,
        traversable=np.asarray(traversable, dtype=bool),
    )
    return (field, order) if record_order else field


_NBRS8 = ((-1, 0), (1, 0), (0, -1), (0, 1), (-1, -1), (-1, 1), (1, -1), (1, 1))


def extract_path(field: DistanceField, start: tuple[int, int]) -> PlannedPath:
    """Steepest-descent path from start to the nearest source.

    Moves to the 8-neighbor with the smallest field value (ties by flat
    index); diagonal moves require both orthogonal neighbors traversable,
    so the cell-center polyline stays collision-free.
    """
    values = field.values
    rows, cols = values.shape
    r, c = int(start[0]), int(start[1])
    if not np.isfinite(values[r, c]):
        raise UnreachableStart(f"start cell {start} is unreachable from the sources")
    trav = field.traversable
    cells = [(r, c)]
    guard = rows * cols
    while values[r, c] > 0.0 and guard > 0:
        guard -= 1
        best = None
        best_key = (values[r, c], r * cols + c)
        for dr, dc in _NBRS8:
            i, j = r + dr, c + dc
            if not (0 <= i < rows and 0 <= j < cols) or not trav[i, j]:
                continue
            if dr != 0 and dc != 0 and not (trav[r + dr, c] and trav[r, c + dc]):
                continue
            key = (values[i, j], i * cols + j)
            if key < best_key:
                best_key = key
                best = (i, j)
        if best is None:
            break  # no descent available; truncated path toward the source
        r, c = best
        cells.append(best)
    res = field.res
    waypoints = [((c + 0.5) * res, (r + 0.5) * res) for r, c in cells]
    length = 0.0
    for (x0, y0), (x1, y1) in zip(waypoints[:-1], waypoints[1:]):
        length += float(np.hypot(x1 - x0, y1 - y0))
    return PlannedPath(waypoints=waypoints, cells=cells, length=length)


def geodesic_cost(
    fmap: FloorMap,
    from_cell: tuple[int, int],
    to_cell: tuple[int, int],
    *,
    optimistic: bool = False,
    inflation_cells: int = 0,
) -> float:
    """Shortest-path cost in meters; +inf when unreachable."""
    if tuple(from_cell) == tuple(to_cell):
        return 0.0
    try:
        field = solve_fmm(
            fmap, [to_cell], optimistic=optimistic, inflation_cells=inflation_cells
        )
    except NoTraversableSource:
        return float("inf")
    return field.at(tuple(from_cell))


def dump_field(field: DistanceField, path: str | Path) -> None:
    """Debug dump: 32-bit float binary plus a JSON header next to it."""
    path = Path(path)
    data = field.values.astype(np.float32)
    path.write_bytes(struct.pack("<II", *data.shape) + data.tobytes())
    header = {
        "shape": list(data.shape),
        "dtype": "float32-le",
        "res": field.res,
        "sources": [list(s) for s in field.sources],
    }
    path.with_suffix(path.suffix + ".json").write_text(json.dumps(header, indent=2))
