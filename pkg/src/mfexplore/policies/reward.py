"""Area-gain plus frontier-guidance reward."""

from __future__ import annotations

from dataclasses import dataclass

from ..frontier import FrontierSet, distance_to_frontier_edges
from ..mapping import FloorMap
from .goals import GlobalGoal


@dataclass(frozen=True)
class RewardBreakdown:
    r_g: float  # area gain, m^2
    r_f: float  # frontier guidance, dimensionless
    lambda_w: float
    d_fg: float  # goal-to-frontier distance used, meters

    @property
    def total(self) -> float:
        return self.r_g + self.lambda_w * self.r_f


def frontier_term(d_fg: float, d_min: float, d_max: float) -> float:
    """Piecewise frontier-guidance term.

    0 at or beyond d_max, 0.05/d below it down to d_min inclusive, and the
    flat 0.005 under d_min. The jump at d_min is intentional and kept
    verbatim.
    """
    if d_fg >= d_max:
        return 0.0
    if d_fg >= d_min:
        return 0.05 / d_fg
    return 0.005


def compute_reward(
    map_before: FloorMap | float,
    map_after: FloorMap | float,
    goal: GlobalGoal,
    fs_before: FrontierSet,
    d_min: float,
    d_max: float,
    lambda_w: float,
    *,
    res: float | None = None,
) -> RewardBreakdown:
    """Reward for one global step.

    map_before/map_after may be FloorMaps or covered-area floats (m^2);
    res is required only when both are floats.
    """
    if not 0 < d_min < d_max:
        raise ValueError(f"need 0 < d_min < d_max, got ({d_min}, {d_max})")
    if isinstance(map_before, FloorMap):
        area_before = map_before.covered_area
        res = map_before.res
    else:
        area_before = float(map_before)
    area_after = map_after.covered_area if isinstance(map_after, FloorMap) else float(map_after)
    if res is None:
        raise ValueError("res required when passing covered areas directly")
    d_fg = distance_to_frontier_edges(goal.cell, fs_before, res)
    r_f = frontier_term(d_fg, d_min, d_max)
    return RewardBreakdown(
        r_g=area_after - area_before, r_f=r_f, lambda_w=lambda_w, d_fg=d_fg
    )
