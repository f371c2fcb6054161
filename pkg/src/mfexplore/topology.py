"""Floor-stair topology: the incrementally built graph of floor nodes and
stair edges, the four-state exploration FSM, and the stair goal geometry."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field as dc_field
from enum import Enum
from pathlib import Path

import numpy as np

from .config import ExploreConfig
from .errors import NoUnvisitedStair
from .mapping import FloorMap, window_origin
from .policies.goals import GlobalGoal
from .world.types import Pose

log = logging.getLogger(__name__)


class StatusName(Enum):
    EXPLORING_FLOOR = "ExploringFloor"
    GOING_TO_STAIR = "GoingToStair"
    ON_STAIR = "OnStair"
    ALL_EXPLORED = "AllExplored"


@dataclass(frozen=True)
class ExplorationStatus:
    name: StatusName
    entered_at: int = 0


def fsm_step(prev: StatusName, f_done: bool, g_all_visited: bool, e_on_stair: bool) -> StatusName:
    """The four-condition transition table; inputs not matching any
    condition keep the previous state, and AllExplored is absorbing."""
    if prev is StatusName.ALL_EXPLORED:
        return prev
    if prev is StatusName.EXPLORING_FLOOR and f_done:
        if g_all_visited:
            return StatusName.ALL_EXPLORED  # Cond 4
        return StatusName.GOING_TO_STAIR  # Cond 1
    if prev is StatusName.GOING_TO_STAIR and e_on_stair:
        return StatusName.ON_STAIR  # Cond 2
    if prev is StatusName.ON_STAIR and not e_on_stair:
        return StatusName.EXPLORING_FLOOR  # Cond 3
    return prev


@dataclass
class FloorNode:
    floor: int
    fmap: FloorMap
    done: bool = False
    cr: float = 0.0
    arrived_at: int = 0


@dataclass
class StairEdgeRecord:
    edge_id: int
    floor_a: int  # discovery floor
    floor_b: int | None = None  # resolved on first traversal
    regions: dict = dc_field(default_factory=dict)  # floor -> (K, 2) int64
    visited: bool = False
    discovered_at: int = 0
    link_ids: set = dc_field(default_factory=set)
    entry_sign: int | None = None
    # motion direction at the last floor transition; after arriving the
    # agent stands at the exit end, and this keeps the exit stable while
    # it scans
    traverse_heading: tuple[float, float] | None = None

    @property
    def provisional_far(self) -> int:
        return self.floor_b if self.floor_b is not None else self.floor_a + 1

    def region_on(self, floor: int) -> np.ndarray | None:
        return self.regions.get(floor)

    def centroid_on(self, floor: int) -> tuple[float, float] | None:
        region = self.regions.get(floor)
        if region is None:
            return None
        return stair_centroid(region)


def stair_centroid(region: np.ndarray) -> tuple[float, float]:
    """Arithmetic mean of the region cells, (x, y) = (col, row) order."""
    region = np.asarray(region)
    n = len(region)
    return float(region[:, 1].sum()) / n, float(region[:, 0].sum()) / n


class TopologyGraph:
    def __init__(self):
        self.nodes: dict[int, FloorNode] = {}
        self.edges: list[StairEdgeRecord] = []

    def ensure_node(self, floor: int, fmap: FloorMap, step: int = 0) -> FloorNode:
        if floor not in self.nodes:
            self.nodes[floor] = FloorNode(floor=floor, fmap=fmap, arrived_at=step)
        return self.nodes[floor]

    def edges_on(self, floor: int) -> list[StairEdgeRecord]:
        return [e for e in self.edges if e.region_on(floor) is not None]

    def all_visited_and_done(self) -> bool:
        if not self.nodes:
            return False
        return all(n.done for n in self.nodes.values()) and all(e.visited for e in self.edges)

    def edge_by_link(self, link_id: int) -> StairEdgeRecord | None:
        for e in self.edges:
            if link_id in e.link_ids:
                return e
        return None


def _components(stair_id_grid: np.ndarray):
    from scipy import ndimage

    structure = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]])
    labels, n = ndimage.label(stair_id_grid > 0, structure=structure)
    comps = []
    for lab in range(1, n + 1):
        cells = np.argwhere(labels == lab).astype(np.int64)
        ids = set(int(v) - 1 for v in np.unique(stair_id_grid[labels == lab]))
        comps.append((cells, ids))
    return comps


def update_graph(
    g: TopologyGraph,
    pose: Pose,
    stair_id_grid: np.ndarray,
    status: StatusName,
    step: int = 0,
    fmap: FloorMap | None = None,
) -> TopologyGraph:
    """Refresh nodes and edges from the current floor's stair channel.

    A stair-mask component that overlaps a known edge region on this floor
    refreshes that edge; otherwise it becomes a new edge with a
    provisional far floor. Idempotent for identical inputs.
    """
    floor = pose.floor
    if fmap is not None:
        g.ensure_node(floor, fmap, step)
    for cells, ids in _components(stair_id_grid):
        cellset = set(map(tuple, cells.tolist()))
        target = None
        for edge in g.edges:
            region = edge.region_on(floor)
            if region is None:
                continue
            if cellset & set(map(tuple, region.tolist())):
                target = edge
                break
        if target is None:
            g.edges.append(
                StairEdgeRecord(
                    edge_id=len(g.edges),
                    floor_a=floor,
                    regions={floor: cells},
                    discovered_at=step,
                    link_ids=set(ids),
                )
            )
        else:
            target.regions[floor] = cells
            target.link_ids |= ids
    return g


@dataclass
class FloorProgress:
    steps_on_floor: int = 0
    last_area_cells: int = 0
    last_growth_step: int = 0
    no_frontier: bool = False
    done_latched: bool = False

    def observe(self, area_cells: int, step_on_floor: int, eps_cells: int) -> None:
        if area_cells > self.last_area_cells + eps_cells - 1:
            self.last_area_cells = area_cells
            self.last_growth_step = step_on_floor


def is_floor_done(node: FloorNode, progress: FloorProgress, cfg: ExploreConfig) -> bool:
    """Floor complete: coverage ratio cleared, coverage stagnant for
    t_thre steps, frontier exhaustion, or the per-floor budget."""
    if progress.done_latched:
        return True
    done = node.cr > cfg.done_cr or progress.no_frontier
    if not done and progress.steps_on_floor - progress.last_growth_step >= cfg.t_thre:
        done = True
    if not done and cfg.floor_step_budget is not None:
        done = progress.steps_on_floor >= cfg.floor_step_budget
    if done:
        progress.done_latched = True
    return done


def nearest_stair_goal(
    g: TopologyGraph,
    pose: Pose,
    res: float,
    *,
    window: int,
    map_size: int,
    issued_at: int = 0,
) -> GlobalGoal:
    """Goal at the centroid of the unvisited stair region closest to the
    agent (Euclidean over cell coordinates, ties by lowest edge id)."""
    candidates = [e for e in g.edges_on(pose.floor) if not e.visited]
    if not candidates:
        raise NoUnvisitedStair(f"no unvisited stair on floor {pose.floor}")
    ar, ac = pose.cell(res)
    best = None
    best_d2 = math.inf
    for edge in candidates:
        cx, cy = edge.centroid_on(pose.floor)
        d2 = (ac - cx) ** 2 + (ar - cy) ** 2
        if d2 < best_d2:
            best_d2 = d2
            best = edge
    region = best.region_on(pose.floor)
    cx, cy = best.centroid_on(pose.floor)
    d2cells = (region[:, 0] - cy) ** 2 + (region[:, 1] - cx) ** 2
    k = int(np.argmin(d2cells))
    cell = (int(region[k, 0]), int(region[k, 1]))
    origin = window_origin(pose, res, window)
    return GlobalGoal.from_global(cell, origin, window, map_size, issued_at)


def on_stair_goal(
    edge: StairEdgeRecord,
    pose: Pose,
    res: float,
    *,
    exit_margin_cells: int = 2,
    window: int,
    map_size: int,
    issued_at: int = 0,
    entry_sign: int | None = None,
) -> GlobalGoal:
    """Goal on the stair rectangle's center line, past the short end
    opposite the agent's entry, extended by the exit margin.

    Near-square regions (aspect < 1.2) fall back to the centroid pushed
    along the agent's heading.
    """
    region = edge.region_on(pose.floor)
    if region is None:
        raise ValueError(f"edge {edge.edge_id} has no region on floor {pose.floor}")
    r0, c0 = region.min(axis=0)
    r1, c1 = region.max(axis=0)
    h, w = int(r1 - r0 + 1), int(c1 - c0 + 1)
    long_len, short_len = max(h, w), min(h, w)
    cx, cy = stair_centroid(region)
    origin = window_origin(pose, res, window)
    heading_vec = edge.traverse_heading or (math.cos(pose.heading), math.sin(pose.heading))
    if long_len / short_len < 1.2:
        log.warning(
            "stair edge %d region %dx%d too square for an axis goal; using heading fallback",
            edge.edge_id,
            h,
            w,
        )
        push = long_len / 2 + exit_margin_cells
        cell = (
            int(round(cy + heading_vec[1] * push)),
            int(round(cx + heading_vec[0] * push)),
        )
        return GlobalGoal.from_global(cell, origin, window, map_size, issued_at)
    along_rows = h >= w
    ar, ac = pose.cell(res)
    if along_rows:
        low_end, high_end = float(r0), float(r1)
        agent_s = float(ar)
        heading_s = heading_vec[1]
    else:
        low_end, high_end = float(c0), float(c1)
        agent_s = float(ac)
        heading_s = heading_vec[0]
    if entry_sign is None:
        entry_sign = edge.entry_sign
    if entry_sign is None and edge.traverse_heading is not None and abs(heading_s) > 1e-9:
        # arrived via a transition: the traversal direction points at the
        # exit end, so treat the other end as the entrance
        entry_sign = -1 if heading_s > 0 else 1
    if entry_sign is None:
        entry_sign = -1 if abs(agent_s - low_end) <= abs(agent_s - high_end) else 1
    target_s = high_end + exit_margin_cells if entry_sign < 0 else low_end - exit_margin_cells
    if along_rows:
        cell = (int(round(target_s)), int(round(cx)))
    else:
        cell = (int(round(cy)), int(round(target_s)))
    return GlobalGoal.from_global(cell, origin, window, map_size, issued_at)


def graph_to_json(g: TopologyGraph) -> dict:
    nodes = [
        {"floor": n.floor, "CR": round(n.cr, 6), "done": n.done}
        for n in sorted(g.nodes.values(), key=lambda n: n.floor)
    ]
    edges = []
    for e in g.edges:
        floors = sorted({e.floor_a, e.provisional_far})
        lower, upper = floors[0], floors[1] if len(floors) > 1 else floors[0]
        c_lower = e.centroid_on(lower)
        c_upper = e.centroid_on(upper)
        edges.append(
            {
                "id": e.edge_id,
                "floors": [lower, upper],
                "centroid_lower": list(c_lower) if c_lower else None,
                "centroid_upper": list(c_upper) if c_upper else None,
                "visited": e.visited,
            }
        )
    return {"nodes": nodes, "edges": edges}


def save_topology(g: TopologyGraph, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(graph_to_json(g), indent=2))
    return path
