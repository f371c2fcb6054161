"""Frontier detection and classical frontier scoring.

A frontier cell is a known-free cell with at least one unknown 4-neighbor;
edges are 4-connected components of frontier cells with a minimum size.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grids import FREE, UNKNOWN
from .mapping import FloorMap
from .planner import solve_fmm


@dataclass
class FrontierEdge:
    index: int
    cells: np.ndarray  # (K, 2) int64 sorted by flat index
    centroid: tuple[float, float]  # (row, col), exact cell-arithmetic mean
    utility: float | None = None

    @property
    def rep_cell(self) -> tuple[int, int]:
        """Edge cell nearest the centroid (ties by flat index); used as the
        plannable stand-in for the fractional centroid."""
        d2 = (self.cells[:, 0] - self.centroid[0]) ** 2 + (self.cells[:, 1] - self.centroid[1]) ** 2
        k = int(np.argmin(d2))
        return int(self.cells[k, 0]), int(self.cells[k, 1])


@dataclass
class FrontierSet:
    cells: np.ndarray  # every frontier cell, (K, 2) int64
    edges: list[FrontierEdge] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.edges)

    @property
    def is_empty(self) -> bool:
        return not self.edges


def frontier_mask(explored: np.ndarray) -> np.ndarray:
    free = explored == FREE
    unknown = explored == UNKNOWN
    near_unknown = np.zeros_like(free)
    near_unknown[:-1, :] |= unknown[1:, :]
    near_unknown[1:, :] |= unknown[:-1, :]
    near_unknown[:, :-1] |= unknown[:, 1:]
    near_unknown[:, 1:] |= unknown[:, :-1]
    return free & near_unknown


def detect_frontiers(fmap: FloorMap, min_edge_cells: int = 4) -> FrontierSet:
    from scipy import ndimage

    mask = frontier_mask(fmap.explored)
    cells = np.argwhere(mask).astype(np.int64)
    fs = FrontierSet(cells=cells)
    if not len(cells):
        return fs
    structure = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]])
    labels, n = ndimage.label(mask, structure=structure)
    index = 0
    for lab in range(1, n + 1):
        comp = np.argwhere(labels == lab).astype(np.int64)
        if len(comp) < min_edge_cells:
            continue
        centroid = (float(comp[:, 0].mean()), float(comp[:, 1].mean()))
        fs.edges.append(FrontierEdge(index=index, cells=comp, centroid=centroid))
        index += 1
    return fs


def count_unknown_within(fmap: FloorMap, center: tuple[float, float], radius_m: float) -> int:
    """Unknown cells whose center lies within radius_m of the given
    (row, col) point; the information potential U."""
    m = fmap.size
    res = fmap.res
    rad = radius_m / res
    r0 = max(0, int(np.floor(center[0] - rad)))
    r1 = min(m - 1, int(np.ceil(center[0] + rad)))
    c0 = max(0, int(np.floor(center[1] - rad)))
    c1 = min(m - 1, int(np.ceil(center[1] + rad)))
    if r0 > r1 or c0 > c1:
        return 0
    rr, cc = np.mgrid[r0 : r1 + 1, c0 : c1 + 1]
    within = (rr - center[0]) ** 2 + (cc - center[1]) ** 2 <= rad * rad
    unk = fmap.explored[r0 : r1 + 1, c0 : c1 + 1] == UNKNOWN
    return int((within & unk).sum())


def utility_score(
    edge: FrontierEdge,
    agent_cell: tuple[int, int],
    fmap: FloorMap,
    lam: float,
    *,
    sensor_range: float = 5.0,
    cost_field=None,
) -> float:
    """U(edge) * exp(-lam * C(edge)) with optimistic unknown-space cost.

    cost_field, when given, is a DistanceField solved from the agent and
    saves the per-edge solve. Unreachable edges score 0.
    """
    if lam < 0:
        raise ValueError("lam must be >= 0")
    u = count_unknown_within(fmap, edge.centroid, sensor_range)
    edge.utility = float(u)
    rep = edge.rep_cell
    if cost_field is not None:
        cost = cost_field.at(rep)
    else:
        from .planner import geodesic_cost

        cost = geodesic_cost(fmap, tuple(agent_cell), rep, optimistic=True)
    if not np.isfinite(cost):
        return 0.0
    return float(u * np.exp(-lam * cost))


def agent_cost_field(fmap: FloorMap, agent_cell: tuple[int, int]):
    """Optimistic distance field from the agent, shared by edge scoring."""
    return solve_fmm(fmap, [agent_cell], optimistic=True)


def distance_to_frontier_edges(goal_cell: tuple[int, int], fs: FrontierSet, res: float) -> float:
    """Euclidean distance (meters) from the goal cell to the nearest cell
    of any retained edge; +inf when no edges remain."""
    if fs.is_empty:
        return float("inf")
    best = float("inf")
    gr, gc = goal_cell
    for edge in fs.edges:
        d2 = (edge.cells[:, 0] - gr) ** 2 + (edge.cells[:, 1] - gc) ** 2
        best = min(best, float(d2.min()))
    return float(np.sqrt(best)) * res
