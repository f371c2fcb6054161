"""Local navigation shared by the training harness and the episode
runner: a planning ladder around the FMM solver plus a waypoint follower
that emits one motion primitive per step."""

from __future__ import annotations

import math

import numpy as np

from .config import ExploreConfig
from .errors import NoTraversableSource, UnreachableStart
from .grids import FREE, wrap_angle
from .mapping import FloorMap
from .planner import PlannedPath, extract_path, solve_fmm, traversable_mask
from .world.motion import MotionCommand
from .world.types import Pose

_PURSUIT_RADIUS = 0.75  # max meters of path shortcut per aim
_WAYPOINT_DONE = 0.04  # meters: a waypoint this close counts as passed
# (below the 0.05 m cell pitch so forward waypoints are never pre-popped)


def _try_plan(fmap, agent_cell, goal_cell, optimistic, inflation) -> PlannedPath | None:
    trav = traversable_mask(fmap, optimistic=optimistic, inflation_cells=inflation)
    sources = [goal_cell]
    if not trav[goal_cell[0], goal_cell[1]]:
        # salvage: plan to a traversable cell right next to the goal, but
        # only one that actually improves on the agent's own distance
        m = fmap.size
        agent_d2 = (agent_cell[0] - goal_cell[0]) ** 2 + (agent_cell[1] - goal_cell[1]) ** 2
        near = [
            (r, c)
            for r in range(max(0, goal_cell[0] - 2), min(m, goal_cell[0] + 3))
            for c in range(max(0, goal_cell[1] - 2), min(m, goal_cell[1] + 3))
            if trav[r, c]
            and (r - goal_cell[0]) ** 2 + (c - goal_cell[1]) ** 2 < agent_d2
        ]
        if not near:
            return None
        sources = [min(near, key=lambda rc: ((rc[0] - goal_cell[0]) ** 2 + (rc[1] - goal_cell[1]) ** 2, rc))]
    try:
        field = solve_fmm(fmap, sources, traversable=trav)
    except NoTraversableSource:
        return None
    if not np.isfinite(field.at(agent_cell)):
        return None
    try:
        return extract_path(field, agent_cell)
    except UnreachableStart:
        return None


def plan_to_goal(fmap: FloorMap, agent_cell: tuple[int, int], goal_cell: tuple[int, int], cfg: ExploreConfig) -> PlannedPath | None:
    """Plan a path toward the goal, relaxing constraints as needed.

    Ladder: configured inflation, then less, then optimistic through
    unknown space; as a last resort retarget to the reachable known-free
    cell nearest the goal. Returns None only when the agent cell itself is
    isolated.
    """
    agent_cell = (int(agent_cell[0]), int(agent_cell[1]))
    goal_cell = (int(goal_cell[0]), int(goal_cell[1]))
    if agent_cell == goal_cell:
        cx = (agent_cell[1] + 0.5) * fmap.res
        cy = (agent_cell[0] + 0.5) * fmap.res
        return PlannedPath(waypoints=[(cx, cy)], cells=[agent_cell], length=0.0)
    ladder = []
    for infl in sorted({cfg.inflation_cells, 1, 0}, reverse=True):
        ladder.append((False, infl))
    ladder.append((True, 0))
    for optimistic, infl in ladder:
        path = _try_plan(fmap, agent_cell, goal_cell, optimistic, infl)
        if path is not None:
            return path
    # retarget: walk toward the goal as far as known-free space allows
    trav = traversable_mask(fmap, optimistic=False, inflation_cells=0)
    if not trav[agent_cell[0], agent_cell[1]]:
        trav = trav.copy()
        trav[agent_cell[0], agent_cell[1]] = True
    try:
        field = solve_fmm(fmap, [agent_cell], traversable=trav)
    except NoTraversableSource:
        return None
    finite = np.argwhere(np.isfinite(field.values))
    if len(finite) == 0:
        return None
    d2 = (finite[:, 0] - goal_cell[0]) ** 2 + (finite[:, 1] - goal_cell[1]) ** 2
    best = finite[int(np.argmin(d2))]
    retarget = (int(best[0]), int(best[1]))
    if retarget == agent_cell:
        return None
    return _try_plan(fmap, agent_cell, retarget, False, 0)


def clear_ray(explored: np.ndarray, x0: float, y0: float, x1: float, y1: float, res: float) -> bool:
    """True when the segment from (x0, y0) to (x1, y1) stays inside cells
    currently known free. Exact cell walk, corner crossings require both
    orthogonal cells free (mirrors the motion stepper)."""
    rows, cols = explored.shape
    r = int(math.floor(y0 / res))
    c = int(math.floor(x0 / res))
    if not (0 <= r < rows and 0 <= c < cols) or explored[r, c] != FREE:
        return False
    length = math.hypot(x1 - x0, y1 - y0)
    if length < 1e-12:
        return True
    dx = (x1 - x0) / length
    dy = (y1 - y0) / length
    t = 0.0
    guard = rows + cols + 4
    while guard > 0:
        guard -= 1
        if dx > 1e-12:
            tx = ((c + 1) * res - (x0 + dx * t)) / dx
        elif dx < -1e-12:
            tx = (c * res - (x0 + dx * t)) / dx
        else:
            tx = math.inf
        if dy > 1e-12:
            ty = ((r + 1) * res - (y0 + dy * t)) / dy
        elif dy < -1e-12:
            ty = (r * res - (y0 + dy * t)) / dy
        else:
            ty = math.inf
        step = min(tx, ty)
        if t + step >= length:
            return True
        cross_x = tx <= step + 1e-9
        cross_y = ty <= step + 1e-9
        nr = r + (1 if dy > 0 else -1) if cross_y else r
        nc = c + (1 if dx > 0 else -1) if cross_x else c
        if not (0 <= nr < rows and 0 <= nc < cols) or explored[nr, nc] != FREE:
            return False
        if cross_x and cross_y:
            if explored[r, nc] != FREE or explored[nr, c] != FREE:
                return False
        t += step + 1e-9
        r, c = nr, nc
    return False


class WaypointFollower:
    """Pure-pursuit over a planned cell path, re-checked against the live
    map: each step aims at the farthest path point in clear line of sight.

    A blocked forward step tightens the heading tolerance so the agent
    faces its target exactly; blocked again after re-aligning means the
    path is stale and the caller should replan.
    """

    def __init__(
        self,
        cfg: ExploreConfig,
        path: PlannedPath,
        goal_xy: tuple[float, float],
        fmap: FloorMap,
        arrive_tol: float | None = None,
    ):
        self.cfg = cfg
        self.waypoints = list(path.waypoints) if path else []
        self.goal_xy = goal_xy
        self.fmap = fmap
        self.arrive_tol = cfg.goal_tolerance if arrive_tol is None else arrive_tol
        self.idx = 0
        self.blocked = False
        self.recenter = False
        self.give_up = False

    def notify_forward(self, moved_ok: bool) -> None:
        if moved_ok:
            self.blocked = False
            return
        if self.recenter:
            self.give_up = True  # cannot even reach the own-cell center
        elif self.blocked:
            # realigned and still blocked: the agent hugs a wall corner;
            # walking back to its own cell center is always collision-free
            self.recenter = True
        else:
            self.blocked = True

    def arrived(self, pose: Pose) -> bool:
        gx, gy = self.goal_xy
        if math.hypot(pose.x - gx, pose.y - gy) <= self.arrive_tol:
            return True
        if self.idx >= len(self.waypoints):
            return True
        if self.idx == len(self.waypoints) - 1:
            wx, wy = self.waypoints[-1]
            return math.hypot(pose.x - wx, pose.y - wy) <= _WAYPOINT_DONE
        return False

    def _aim(self, pose: Pose) -> tuple[float, float] | None:
        while self.idx < len(self.waypoints):
            wx, wy = self.waypoints[self.idx]
            if math.hypot(wx - pose.x, wy - pose.y) > _WAYPOINT_DONE:
                break
            self.idx += 1
        if self.idx >= len(self.waypoints):
            return None
        explored = self.fmap.explored
        res = self.fmap.res
        best = self.idx
        j = self.idx + 1
        while j < len(self.waypoints):
            wx, wy = self.waypoints[j]
            if math.hypot(wx - pose.x, wy - pose.y) > _PURSUIT_RADIUS:
                break
            if not clear_ray(explored, pose.x, pose.y, wx, wy, res):
                break
            best = j
            j += 1
        self.idx = best
        return self.waypoints[best]

    def next_action(self, pose: Pose) -> MotionCommand | None:
        if self.give_up:
            return None
        if self.recenter:
            res = self.fmap.res
            r, c = pose.cell(res)
            tx, ty = (c + 0.5) * res, (r + 0.5) * res
            dist = math.hypot(tx - pose.x, ty - pose.y)
            if dist < 0.01:
                if self.blocked:
                    self.give_up = True  # wedged at the center: stale path
                    return None
                self.recenter = False
            else:
                return self._steer(pose, tx, ty, dist, tight=True)
        target = self._aim(pose)
        if target is None:
            return None
        tx, ty = target
        dist = math.hypot(tx - pose.x, ty - pose.y)
        return self._steer(pose, tx, ty, dist, tight=self.blocked)

    def _steer(self, pose: Pose, tx: float, ty: float, dist: float, tight: bool) -> MotionCommand:
        dh = wrap_angle(math.atan2(ty - pose.y, tx - pose.x) - pose.heading)
        threshold = 0.02 if tight else math.pi / 8
        if abs(dh) > threshold:
            amount = max(-self.cfg.rotate_step, min(self.cfg.rotate_step, dh))
            return MotionCommand.rotate(amount)
        return MotionCommand.forward(min(self.cfg.forward_step, dist))