"""Single-floor exploration environment for external policy training.

One env step executes up to replan_every (default 25) motion primitives
toward the issued global goal, then returns the rebuilt observation and
the reward. Stair floor transitions are disabled: this harness serves the
2D exploration problem on the agent's spawn floor.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from ..config import ExploreConfig
from ..frontier import FrontierSet, detect_frontiers
from ..mapping import FloorMap, ObservationStack, build_observation, coverage, integrate
from ..navigation import WaypointFollower, plan_to_goal
from ..world.motion import step_agent
from ..world.sensing import detect_stairs, sense
from ..world.types import MultiFloorWorld, OracleNoise, Pose
from .goals import GlobalGoal
from .reward import RewardBreakdown, compute_reward

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class EnvTransition:
    observation: ObservationStack
    reward: RewardBreakdown | None
    done: bool
    info: dict = field(default_factory=dict)


class ExplorationEnv:
    """Observation/goal/reward loop over one floor of a world."""

    def __init__(
        self,
        world: MultiFloorWorld,
        seed: int = 0,
        cfg: ExploreConfig | None = None,
        budget: int = 1000,
        noise: OracleNoise = OracleNoise(),
    ):
        self.world = world
        self.cfg = cfg or ExploreConfig()
        self.budget = budget
        self.noise = noise
        self.seed = seed
        self.window = self.cfg.window_size(world.size)
        self.pose: Pose | None = None
        self.fmap: FloorMap | None = None
        self.steps = 0
        self.collisions = 0
        self._rng_oracle: np.random.Generator | None = None

    def reset(self) -> EnvTransition:
        ss = np.random.SeedSequence(self.seed)
        _, oracle_ss = ss.spawn(2)
        self._rng_oracle = np.random.Generator(np.random.PCG64(oracle_ss))
        self.pose = self.world.spawn_pose()
        self.fmap = FloorMap(self.pose.floor, self.world.size, self.world.res)
        self.steps = 0
        self.collisions = 0
        self._observe()
        return self._transition(reward=None)

    def _observe(self) -> None:
        frame = sense(self.world, self.pose, self.cfg.sensor_range, self.cfg.fov)
        dets = detect_stairs(frame, self.noise, self._rng_oracle)
        integrate(self.fmap, frame.with_detections(dets))

    def _transition(self, reward) -> EnvTransition:
        obs = build_observation(self.fmap, self.pose, self.window)
        cov = coverage(self.fmap, self.world.floors[self.pose.floor])
        done = cov.cr > self.cfg.done_cr or self.steps >= self.budget
        info = {"CR": cov.cr, "CA": cov.ca, "collisions": self.collisions, "steps": self.steps}
        return EnvTransition(observation=obs, reward=reward, done=done, info=info)

    def frontiers(self) -> FrontierSet:
        return detect_frontiers(self.fmap, self.cfg.min_edge_cells)

    def step(self, goal: GlobalGoal) -> EnvTransition:
        """Advance up to replan_every primitives along the planned path
        toward the goal, then score the global step."""
        if self.pose is None:
            raise RuntimeError("call reset() before step()")
        fs_before = self.frontiers()
        area_before = self.fmap.covered_area
        agent_cell = self.pose.cell(self.fmap.res)
        path = plan_to_goal(self.fmap, agent_cell, goal.cell, self.cfg)
        if path is None:
            log.info("unreachable goal %s; agent idles this global step", goal.cell)
            follower = None
        else:
            gx = (goal.gx + 0.5) * self.fmap.res
            gy = (goal.gy + 0.5) * self.fmap.res
            follower = WaypointFollower(self.cfg, path, (gx, gy), self.fmap)
        for _ in range(self.cfg.replan_every):
            if self.steps >= self.budget:
                break
            if follower is None or follower.arrived(self.pose):
                break
            action = follower.next_action(self.pose)
            if action is None:
                break
            new_pose = step_agent(
                self.world,
                self.pose,
                action,
                max_forward=self.cfg.forward_step,
                max_rotate=self.cfg.rotate_step,
                transitions=False,
            )
            if action.kind == "forward":
                moved = math.hypot(new_pose.x - self.pose.x, new_pose.y - self.pose.y)
                moved_ok = moved + 1e-6 >= min(action.amount, self.cfg.forward_step)
                follower.notify_forward(moved_ok)
                if not moved_ok:
                    self.collisions += 1
            self.pose = new_pose
            self.steps += 1
            self._observe()
        reward = compute_reward(
            area_before,
            self.fmap.covered_area,
            goal,
            fs_before,
            self.cfg.d_min,
            self.cfg.d_max,
            self.cfg.lambda_weight,
            res=self.fmap.res,
        )
        return self._transition(reward)
