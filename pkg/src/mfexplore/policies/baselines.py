"""Non-learned global-goal policies: nearest frontier, utility frontier,
RRT next-best-view, and the frontier-guided stochastic stand-in for a
learned policy."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .. import kernels
from ..config import RrtParams
from ..errors import NoFrontier, TreeGrowthFailed
from ..frontier import FrontierSet, agent_cost_field, utility_score
from ..grids import FREE, OCCUPIED, UNKNOWN
from ..mapping import FloorMap, ObservationStack, window_origin
from ..world.types import Pose
from .goals import GlobalGoal

log = logging.getLogger(__name__)


def _goal_from_cell(cell, pose, fmap, window, issued_at):
    origin = window_origin(pose, fmap.res, window)
    return GlobalGoal.from_global(cell, origin, window, fmap.size, issued_at)


def nearest_frontier_policy(
    fmap: FloorMap,
    pose: Pose,
    fs: FrontierSet,
    *,
    window: int,
    issued_at: int = 0,
) -> GlobalGoal:
    """Goal at the reachable frontier edge of minimal geodesic cost
    (optimistic through unknown space); ties by lowest edge index."""
    if fs.is_empty:
        raise NoFrontier("no frontier edges")
    field = agent_cost_field(fmap, pose.cell(fmap.res))
    best = None
    best_cost = math.inf
    for edge in fs.edges:
        cost = field.at(edge.rep_cell)
        if cost < best_cost:
            best_cost = cost
            best = edge
    if best is None:
        raise NoFrontier("all frontier edges unreachable")
    return _goal_from_cell(best.rep_cell, pose, fmap, window, issued_at)


def utility_frontier_policy(
    fmap: FloorMap,
    pose: Pose,
    fs: FrontierSet,
    lam: float,
    *,
    sensor_range: float = 5.0,
    window: int,
    issued_at: int = 0,
) -> GlobalGoal:
    """Goal at the edge maximizing U * exp(-lam * C); ties by lowest index."""
    if fs.is_empty:
        raise NoFrontier("no frontier edges")
    field = agent_cost_field(fmap, pose.cell(fmap.res))
    scores = [
        utility_score(e, pose.cell(fmap.res), fmap, lam, sensor_range=sensor_range, cost_field=field)
        for e in fs.edges
    ]
    best = int(np.argmax(scores))  # argmax keeps the first (lowest index) on ties
    return _goal_from_cell(fs.edges[best].rep_cell, pose, fmap, window, issued_at)


@dataclass
class RrtSearch:
    points: list[tuple[float, float]]  # (x, y) meters, index 0 = root
    parents: list[int]
    path_lengths: list[float]
    gains: list[int]
    scores: list[float]
    best_index: int


def rrt_nbv_search(
    fmap: FloorMap,
    pose: Pose,
    params: RrtParams,
    rng: np.random.Generator,
    *,
    sensor_range: float = 5.0,
) -> RrtSearch:
    """Grow an RRT through known-free space and score every node by
    ray-visible unknown cells discounted by tree path length."""
    res = fmap.res
    free = fmap.explored == FREE
    free_cells = np.argwhere(free)
    if len(free_cells) < 2:
        raise TreeGrowthFailed("known free space is degenerate")
    blocked = np.ascontiguousarray(fmap.explored == OCCUPIED, dtype=np.uint8)
    unknown = fmap.explored == UNKNOWN

    points = [(pose.x, pose.y)]
    parents = [-1]
    lengths = [0.0]
    rejects = 0
    while len(points) < params.n_nodes and rejects < params.max_rejects:
        pick = free_cells[int(rng.integers(len(free_cells)))]
        sx, sy = (pick[1] + 0.5) * res, (pick[0] + 0.5) * res
        pts = np.asarray(points)
        d2 = (pts[:, 0] - sx) ** 2 + (pts[:, 1] - sy) ** 2
        near = int(np.argmin(d2))
        nx, ny = points[near]
        dist = math.sqrt(float(d2[near]))
        if dist < res:
            rejects += 1
            continue
        scale = min(1.0, params.step_len / dist)
        px, py = nx + (sx - nx) * scale, ny + (sy - ny) * scale
        if not _segment_free(free, nx, ny, px, py, res):
            rejects += 1
            continue
        points.append((px, py))
        parents.append(near)
        lengths.append(lengths[near] + dist * scale)
    if len(points) < 2:
        raise TreeGrowthFailed(f"tree stuck at {len(points)} nodes after {rejects} rejections")

    gains = []
    scores = []
    for (px, py), plen in zip(points, lengths):
        vis = kernels.visible_cells(blocked, px, py, 0.0, 2.0 * math.pi, sensor_range, res)
        gain = int((vis.astype(bool) & unknown).sum())
        gains.append(gain)
        scores.append(gain * math.exp(-params.lam * plen))
    best = int(np.argmax(scores))
    return RrtSearch(points, parents, lengths, gains, scores, best)


def _segment_free(free: np.ndarray, x0, y0, x1, y1, res) -> bool:
    n = max(2, int(math.hypot(x1 - x0, y1 - y0) / (0.5 * res)) + 1)
    m = free.shape[0]
    for k in range(n + 1):
        t = k / n
        x = x0 + (x1 - x0) * t
        y = y0 + (y1 - y0) * t
        r, c = int(y / res), int(x / res)
        if not (0 <= r < m and 0 <= c < m) or not free[r, c]:
            return False
    return True


def rrt_nbv_policy(
    fmap: FloorMap,
    pose: Pose,
    params: RrtParams,
    rng: np.random.Generator,
    *,
    sensor_range: float = 5.0,
    window: int,
    issued_at: int = 0,
) -> GlobalGoal:
    """Goal at the best-scoring RRT node; the root when every gain is zero."""
    search = rrt_nbv_search(fmap, pose, params, rng, sensor_range=sensor_range)
    if search.gains[search.best_index] == 0:
        log.warning("rrt-nbv: zero-gain tree, returning root")
        search.best_index = 0
    x, y = search.points[search.best_index]
    cell = (int(y / fmap.res), int(x / fmap.res))
    return _goal_from_cell(cell, pose, fmap, window, issued_at)


def frontier_guided_stochastic_policy(
    obs: ObservationStack,
    fs: FrontierSet,
    pose: Pose,
    temperature: float,
    rng: np.random.Generator,
    *,
    fmap: FloorMap,
    lam: float = 0.25,
    sensor_range: float = 5.0,
    issued_at: int = 0,
) -> GlobalGoal:
    """Sample a frontier-edge goal with softmax(score / temperature)
    weights; with no frontiers, sample uniformly over known free space."""
    window = obs.window
    if fs.is_empty:
        free_cells = np.argwhere(fmap.explored == FREE)
        pick = free_cells[int(rng.integers(len(free_cells)))]
        return _goal_from_cell((int(pick[0]), int(pick[1])), pose, fmap, window, issued_at)
    field = agent_cost_field(fmap, pose.cell(fmap.res))
    scores = np.asarray(
        [
            utility_score(e, pose.cell(fmap.res), fmap, lam, sensor_range=sensor_range, cost_field=field)
            for e in fs.edges
        ]
    )
    if temperature <= 1e-9:
        pick = int(np.argmax(scores))
    else:
        logits = (scores - scores.max()) / temperature
        weights = np.exp(logits)
        probs = weights / weights.sum()
        pick = int(np.searchsorted(np.cumsum(probs), rng.random(), side="right"))
        pick = min(pick, len(fs.edges) - 1)
    return _goal_from_cell(fs.edges[pick].rep_cell, pose, fmap, window, issued_at)
