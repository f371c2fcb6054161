"""Agent motion: collision-stopped forward marching, rotation, and the
floor-transition rule for stair traversal.

A stair is traversed along its axis. The tracker records the end through
which the agent entered a stair region; when the agent reaches the cell
row at the opposite end, the pose is remapped to the linked region on the
other floor (same relative position, bounding boxes aligned by their
corners) and the link reports a transition event. After a transition the
link stays silent until the agent leaves the region, so walking out of
the arrival end does not re-fire it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from ..grids import FREE, cell_of, wrap_angle
from .types import MultiFloorWorld, Pose

_EPS_DIR = 1e-12
_EPS_STOP = 1e-6  # stop this far before a blocking boundary (meters)
_EPS_IN = 1e-9  # cross this far into the next cell (meters)


@dataclass(frozen=True)
class MotionCommand:
    kind: str  # "forward" | "rotate"
    amount: float

    @classmethod
    def forward(cls, meters: float) -> "MotionCommand":
        return cls("forward", float(meters))

    @classmethod
    def rotate(cls, radians: float) -> "MotionCommand":
        return cls("rotate", float(radians))


@dataclass(frozen=True)
class TransitionEvent:
    link_id: int
    from_floor: int
    to_floor: int
    x: float
    y: float


@dataclass
class _LinkState:
    entry_sign: int
    post_transition: bool = False


class StairTracker:
    """Per-episode stair traversal state (entry end per link)."""

    def __init__(self, world: MultiFloorWorld):
        self.world = world
        self._states: dict[int, _LinkState] = {}
        self.events: list[TransitionEvent] = []

    def pop_events(self) -> list[TransitionEvent]:
        out = self.events
        self.events = []
        return out

    def _link_at(self, floor: int, row: int, col: int) -> int | None:
        grid = self.world.stair_id_grids[floor]
        if not (0 <= row < grid.shape[0] and 0 <= col < grid.shape[1]):
            return None
        sid = int(grid[row, col])
        return sid - 1 if sid > 0 else None

    def seed(self, floor: int, row: int, col: int) -> None:
        """Record the agent's starting cell before a walk begins."""
        lid = self._link_at(floor, row, col)
        for known in list(self._states):
            if known != lid:
                del self._states[known]
        if lid is None or lid in self._states:
            return
        link = self.world.stair_links[lid]
        s = self._cell_proj(link, floor, row, col)
        self._states[lid] = _LinkState(entry_sign=-1 if s <= 0 else 1)

    def _cell_proj(self, link, floor: int, row: int, col: int) -> float:
        res = self.world.res
        return link.axis_coord(floor, (col + 0.5) * res, (row + 0.5) * res, res)

    def enter_cell(self, floor: int, row: int, col: int):
        """Update link states for a cell crossing; returns a transition
        (new_floor, new_x, new_y, link) when the far end is reached."""
        lid = self._link_at(floor, row, col)
        for known in list(self._states):
            if known != lid:
                del self._states[known]
        if lid is None:
            return None
        link = self.world.stair_links[lid]
        if lid not in self._states:
            s = self._cell_proj(link, floor, row, col)
            self._states[lid] = _LinkState(entry_sign=-1 if s <= 0 else 1)
            return None
        state = self._states[lid]
        if state.post_transition:
            return None
        res = self.world.res
        s = self._cell_proj(link, floor, row, col)
        smin, smax = link.axis_bounds(floor, res)
        at_far = (state.entry_sign < 0 and s >= smax - 0.25 * res) or (
            state.entry_sign > 0 and s <= smin + 0.25 * res
        )
        if not at_far:
            return None
        state.entry_sign = -state.entry_sign
        state.post_transition = True
        return link

    def remap(self, link, from_floor: int, x: float, y: float) -> tuple[int, float, float]:
        """Translate a position into the link's region on the other floor."""
        to_floor = link.other_floor(from_floor)
        fr0, fc0, _, _ = link.bbox_on(from_floor)
        tr0, tc0, tr1, tc1 = link.bbox_on(to_floor)
        res = self.world.res
        nx = x + (tc0 - fc0) * res
        ny = y + (tr0 - fr0) * res
        nx = min(max(nx, tc0 * res + _EPS_IN), tc1 * res - _EPS_IN)
        ny = min(max(ny, tr0 * res + _EPS_IN), tr1 * res - _EPS_IN)
        return to_floor, nx, ny


def step_agent(
    world: MultiFloorWorld,
    pose: Pose,
    action: MotionCommand,
    tracker: StairTracker | None = None,
    max_forward: float = 0.5,
    max_rotate: float = math.pi,
    transitions: bool = True,
) -> Pose:
    """Execute one motion primitive and return the new pose.

    Forward motion stops just before the first non-traversable cell along
    the ray and applies stair floor transitions as region far-ends are
    crossed (see StairTracker). Remaining distance carries across a
    transition.
    """
    if action.kind == "rotate":
        if abs(action.amount) > max_rotate + 1e-12:
            raise ValueError(f"rotate magnitude {action.amount} exceeds limit {max_rotate}")
        return replace(pose, heading=wrap_angle(pose.heading + action.amount))
    if action.kind != "forward":
        raise ValueError(f"unknown motion kind {action.kind!r}")
    if action.amount < 0 or action.amount > max_forward + 1e-12:
        raise ValueError(f"forward magnitude {action.amount} outside [0, {max_forward}]")

    if tracker is None:
        tracker = StairTracker(world)
    res = world.res
    floor, x, y = pose.floor, pose.x, pose.y
    dx, dy = math.cos(pose.heading), math.sin(pose.heading)
    row, col = cell_of(x, y, res)
    if transitions:
        tracker.seed(floor, row, col)
    remaining = action.amount

    while remaining > _EPS_IN:
        row, col = cell_of(x, y, res)
        if dx > _EPS_DIR:
            tx = ((col + 1) * res - x) / dx
        elif dx < -_EPS_DIR:
            tx = (col * res - x) / dx
        else:
            tx = math.inf
        if dy > _EPS_DIR:
            ty = ((row + 1) * res - y) / dy
        elif dy < -_EPS_DIR:
            ty = (row * res - y) / dy
        else:
            ty = math.inf
        t = min(tx, ty)
        if t >= remaining:
            x += dx * remaining
            y += dy * remaining
            break
        # near-ties cross both boundaries once the overshoot is added
        cross_x = tx <= t + _EPS_IN
        cross_y = ty <= t + _EPS_IN
        nr = row + (1 if dy > 0 else -1) if cross_y else row
        nc = col + (1 if dx > 0 else -1) if cross_x else col
        ok = world.traversable(floor, nr, nc)
        if ok and cross_x and cross_y:
            # exact corner crossing: forbid slipping between two blocked cells
            ok = world.traversable(floor, row, nc) and world.traversable(floor, nr, col)
        if not ok:
            back = t - _EPS_STOP
            if back > 0:
                x += dx * back
                y += dy * back
            break
        step = t + _EPS_IN
        x += dx * step
        y += dy * step
        remaining -= step
        if transitions:
            link = tracker.enter_cell(floor, nr, nc)
            if link is not None:
                from_floor = floor
                floor, x, y = tracker.remap(link, floor, x, y)
                tracker.events.append(TransitionEvent(link.link_id, from_floor, floor, x, y))

    return Pose(floor, x, y, pose.heading)
