"""Ground-truth world model: stacked floor grids linked by stairs."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

from ..errors import WorldFormatError
from ..grids import FREE, OCCUPIED, cell_of


@dataclass(frozen=True)
class Pose:
    floor: int
    x: float
    y: float
    heading: float

    def cell(self, res: float) -> tuple[int, int]:
        return cell_of(self.x, self.y, res)


@dataclass(frozen=True)
class WorldSpec:
    n_floors: int = 1
    M: int = 128
    r: float = 0.05
    room_density: float = 0.5
    stair_count_per_junction: int = 1


@dataclass(frozen=True)
class OracleNoise:
    miss_rate: float = 0.0
    boundary_jitter_cells: int = 0


@dataclass(frozen=True)
class StairLink:
    """A stair connecting two adjacent floors.

    Regions are (K, 2) arrays of (row, col) cells, rectangular, with the
    long side parallel to `axis` ((dx, dy) unit vector).
    """

    link_id: int
    lower_floor: int
    upper_floor: int
    lower_region: np.ndarray
    upper_region: np.ndarray
    axis: tuple[float, float]

    def region_on(self, floor: int) -> np.ndarray | None:
        if floor == self.lower_floor:
            return self.lower_region
        if floor == self.upper_floor:
            return self.upper_region
        return None

    def other_floor(self, floor: int) -> int:
        return self.upper_floor if floor == self.lower_floor else self.lower_floor

    def bbox_on(self, floor: int) -> tuple[int, int, int, int]:
        """(row0, col0, row1, col1), half-open."""
        region = self.region_on(floor)
        return (
            int(region[:, 0].min()),
            int(region[:, 1].min()),
            int(region[:, 0].max()) + 1,
            int(region[:, 1].max()) + 1,
        )

    def axis_bounds(self, floor: int, res: float) -> tuple[float, float]:
        """Min/max axis projection (meters) of region cell centers,
        measured from the region centroid."""
        s = self.axis_projections(floor, res)
        return float(s.min()), float(s.max())

    def axis_projections(self, floor: int, res: float) -> np.ndarray:
        region = self.region_on(floor)
        cx = (region[:, 1] + 0.5) * res
        cy = (region[:, 0] + 0.5) * res
        mx, my = cx.mean(), cy.mean()
        return (cx - mx) * self.axis[0] + (cy - my) * self.axis[1]

    def axis_coord(self, floor: int, x: float, y: float, res: float) -> float:
        region = self.region_on(floor)
        mx = float((region[:, 1] + 0.5).mean()) * res
        my = float((region[:, 0] + 0.5).mean()) * res
        return (x - mx) * self.axis[0] + (y - my) * self.axis[1]


@dataclass(frozen=True)
class SensorFrame:
    """One sensing result: ray-visible cells split by state, plus the
    stair-oracle detections as (row, col, link_id) triples."""

    agent_pose: Pose
    free_cells: np.ndarray  # (K, 2) int64, sorted by flat index
    occupied_cells: np.ndarray
    stair_detections: np.ndarray  # (K, 3) int64 rows [row, col, link_id]

    @property
    def visible_free(self) -> set[tuple[int, int]]:
        return {(int(r), int(c)) for r, c in self.free_cells}

    @property
    def visible_occupied(self) -> set[tuple[int, int]]:
        return {(int(r), int(c)) for r, c in self.occupied_cells}

    @property
    def detection_set(self) -> set[tuple[tuple[int, int], int]]:
        return {((int(r), int(c)), int(l)) for r, c, l in self.stair_detections}

    def with_detections(self, detections: np.ndarray) -> "SensorFrame":
        return replace(self, stair_detections=np.asarray(detections, dtype=np.int64).reshape(-1, 3))

    @property
    def is_empty(self) -> bool:
        return len(self.free_cells) == 0 and len(self.occupied_cells) == 0


@dataclass
class MultiFloorWorld:
    floors: list[np.ndarray]  # uint8 grids, FREE/OCCUPIED
    res: float
    stair_links: list[StairLink]
    spawn_floor: int
    spawn_cell: tuple[int, int]
    spawn_heading: float
    meta: dict = field(default_factory=dict)

    @property
    def n_floors(self) -> int:
        return len(self.floors)

    @property
    def size(self) -> int:
        return self.floors[0].shape[0]

    def spawn_pose(self) -> Pose:
        r, c = self.spawn_cell
        return Pose(self.spawn_floor, (c + 0.5) * self.res, (r + 0.5) * self.res, self.spawn_heading)

    @cached_property
    def stair_id_grids(self) -> list[np.ndarray]:
        """Per floor, int32 grid of link_id + 1 on stair cells (0 elsewhere)."""
        grids = [np.zeros(g.shape, dtype=np.int32) for g in self.floors]
        for link in self.stair_links:
            for floor in (link.lower_floor, link.upper_floor):
                region = link.region_on(floor)
                grids[floor][region[:, 0], region[:, 1]] = link.link_id + 1
        return grids

    def links_on(self, floor: int) -> list[StairLink]:
        return [l for l in self.stair_links if floor in (l.lower_floor, l.upper_floor)]

    def traversable(self, floor: int, row: int, col: int) -> bool:
        grid = self.floors[floor]
        if not (0 <= row < grid.shape[0] and 0 <= col < grid.shape[1]):
            return False
        return grid[row, col] == FREE

    def reachable_free_cells(self, floor: int) -> int:
        return int((self.floors[floor] == FREE).sum())


def _region_array(cells) -> np.ndarray:
    arr = np.asarray(sorted(set(map(tuple, cells))), dtype=np.int64).reshape(-1, 2)
    return arr


def make_stair_link(link_id, lower_floor, upper_floor, lower_region, upper_region, axis) -> StairLink:
    ax = np.asarray(axis, dtype=float)
    n = np.linalg.norm(ax)
    if n == 0:
        raise WorldFormatError("axis", "zero-length axis vector")
    ax = ax / n
    return StairLink(
        link_id=link_id,
        lower_floor=lower_floor,
        upper_floor=upper_floor,
        lower_region=_region_array(lower_region),
        upper_region=_region_array(upper_region),
        axis=(float(ax[0]), float(ax[1])),
    )


def _connected_components(mask: np.ndarray) -> int:
    from scipy import ndimage

    structure = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]])
    _, n = ndimage.label(mask, structure=structure)
    return n


def _region_is_rect_4connected(region: np.ndarray) -> bool:
    r0, c0 = region.min(axis=0)
    r1, c1 = region.max(axis=0)
    return len(region) == (r1 - r0 + 1) * (c1 - c0 + 1)


def validate_world(world: MultiFloorWorld) -> None:
    """Check every MultiFloorWorld invariant; raise WorldFormatError naming
    the offending field."""
    if world.n_floors < 1:
        raise WorldFormatError("n_floors", "world needs at least one floor")
    m = world.size
    for i, grid in enumerate(world.floors):
        if grid.shape != (m, m):
            raise WorldFormatError(f"floor_{i}", f"expected {m}x{m}, got {grid.shape}")
        if not np.isin(grid, (FREE, OCCUPIED)).all():
            raise WorldFormatError(f"floor_{i}", "cells must be free or occupied")
        free = grid == FREE
        if not free.any():
            raise WorldFormatError(f"floor_{i}", "floor has no free space")
        if _connected_components(free) != 1:
            raise WorldFormatError(f"floor_{i}", "free space is not a single connected component")
    seen_ids = set()
    for link in world.stair_links:
        name = f"stair_links[{link.link_id}]"
        if link.link_id in seen_ids:
            raise WorldFormatError(name, "duplicate link id")
        seen_ids.add(link.link_id)
        lo, up = link.lower_floor, link.upper_floor
        if not (0 <= lo < world.n_floors and 0 <= up < world.n_floors):
            raise WorldFormatError(name, "floor index out of range")
        if up - lo != 1:
            raise WorldFormatError(name, f"floors must be adjacent with upper=lower+1, got ({lo}, {up})")
        for floor, region, label in ((lo, link.lower_region, "lower_region"), (up, link.upper_region, "upper_region")):
            if len(region) == 0:
                raise WorldFormatError(f"{name}.{label}", "empty region")
            if region.min() < 0 or region.max() >= m:
                raise WorldFormatError(f"{name}.{label}", "region cell out of bounds")
            if not _region_is_rect_4connected(region):
                raise WorldFormatError(f"{name}.{label}", "region is not a filled rectangle")
            if not (world.floors[floor][region[:, 0], region[:, 1]] == FREE).all():
                raise WorldFormatError(f"{name}.{label}", "region cells must be traversable")
            r0, c0 = region.min(axis=0)
            r1, c1 = region.max(axis=0)
            h, w = r1 - r0 + 1, c1 - c0 + 1
            long_is_cols = w >= h
            ax, ay = link.axis
            axis_is_cols = abs(ax) >= abs(ay)
            if h != w and long_is_cols != axis_is_cols:
                raise WorldFormatError(f"{name}.axis", "axis not parallel to the region's long side")
    sf, (sr, sc) = world.spawn_floor, world.spawn_cell
    if not (0 <= sf < world.n_floors):
        raise WorldFormatError("spawn", f"spawn floor {sf} out of range")
    if not (0 <= sr < m and 0 <= sc < m):
        raise WorldFormatError("spawn", f"spawn cell {(sr, sc)} out of bounds")
    if world.floors[sf][sr, sc] != FREE:
        raise WorldFormatError("spawn", "spawn cell is not free")
