"""Runtime configuration with the documented defaults."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields


@dataclass
class RrtParams:
    n_nodes: int = 60
    step_len: float = 0.5
    lam: float = 0.25
    max_rejects: int = 2000


@dataclass
class ExploreConfig:
    # sensing (forward-facing depth camera analogue)
    sensor_range: float = 5.0
    fov: float = math.pi / 2

    # motion primitives, one per primitive step
    forward_step: float = 0.25
    rotate_step: float = math.pi / 6
    goal_tolerance: float = 0.15

    # planning
    inflation_cells: int = 2
    replan_every: int = 25
    goal_blacklist_steps: int = 120

    # frontiers / utility scoring
    min_edge_cells: int = 4
    lambda_utility: float = 0.25
    stochastic_temperature: float = 25.0

    # reward
    d_min: float = 0.5
    d_max: float = 5.0
    lambda_weight: float = 1.0

    # floor completion
    done_cr: float = 0.95
    t_thre: int = 150
    area_eps_cells: int = 1
    floor_step_budget: int | None = None

    # stair traversal
    exit_margin_cells: int = 2

    # observation
    local_window: int | None = None  # None -> M // 2

    rrt: RrtParams = field(default_factory=RrtParams)

    def window_size(self, m: int) -> int:
        return self.local_window if self.local_window is not None else m // 2

    @classmethod
    def from_dict(cls, data: dict) -> "ExploreConfig":
        known = {f.name for f in fields(cls)}
        bad = set(data) - known
        if bad:
            raise ValueError(f"unknown config keys: {sorted(bad)}")
        kwargs = dict(data)
        if "rrt" in kwargs and isinstance(kwargs["rrt"], dict):
            kwargs["rrt"] = RrtParams(**kwargs["rrt"])
        return cls(**kwargs)
