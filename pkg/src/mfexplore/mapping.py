"""Incremental per-floor map fusion and the stacked policy observation."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FloorMismatchError
from .grids import FREE, OCCUPIED, UNKNOWN
from .world.types import Pose, SensorFrame


class FloorMap:
    """Agent-built map of one floor.

    Channels: explored (unknown/free/occupied, monotone out of unknown),
    stair_id (link_id + 1 on detected stair cells), visit_count (agent
    trajectory). Mutated only by its episode's single writer.
    """

    def __init__(self, floor: int, size: int, res: float):
        self.floor = floor
        self.res = res
        self.explored = np.full((size, size), UNKNOWN, dtype=np.uint8)
        self.stair_id = np.zeros((size, size), dtype=np.int32)
        self.visit_count = np.zeros((size, size), dtype=np.int32)

    @property
    def size(self) -> int:
        return self.explored.shape[0]

    @property
    def covered_cells(self) -> int:
        return int((self.explored != UNKNOWN).sum())

    @property
    def covered_area(self) -> float:
        """Covered area in m^2 (free + occupied cells seen so far)."""
        return self.covered_cells * self.res * self.res

    @property
    def stair_mask(self) -> np.ndarray:
        return self.stair_id > 0

    def copy(self) -> "FloorMap":
        out = FloorMap(self.floor, self.size, self.res)
        out.explored = self.explored.copy()
        out.stair_id = self.stair_id.copy()
        out.visit_count = self.visit_count.copy()
        return out


def integrate(fmap: FloorMap, frame: SensorFrame) -> FloorMap:
    """Fuse one sensor frame into the map (mutates and returns fmap).

    Free cells are written first so occupied wins on any within-frame
    conflict; across frames the latest observation wins for free vs
    occupied, and no cell ever returns to unknown.
    """
    if frame.agent_pose.floor != fmap.floor:
        raise FloorMismatchError(
            f"frame is for floor {frame.agent_pose.floor}, map is floor {fmap.floor}"
        )
    if len(frame.free_cells):
        fmap.explored[frame.free_cells[:, 0], frame.free_cells[:, 1]] = FREE
    if len(frame.occupied_cells):
        fmap.explored[frame.occupied_cells[:, 0], frame.occupied_cells[:, 1]] = OCCUPIED
    if len(frame.stair_detections):
        dets = frame.stair_detections
        fmap.stair_id[dets[:, 0], dets[:, 1]] = dets[:, 2] + 1
    r, c = frame.agent_pose.cell(fmap.res)
    if 0 <= r < fmap.size and 0 <= c < fmap.size:
        fmap.visit_count[r, c] += 1
    return fmap


@dataclass(frozen=True)
class ObservationStack:
    """8 channels of L x L values in [0, 1] plus the agent heading.

    Channel order: local obstacle, explored, current pose, trajectory,
    then the same four max-pooled from the full map. The local window is
    agent-centered with zero padding beyond map borders.
    """

    channels: np.ndarray  # float32 (8, L, L)
    heading: float
    window_origin: tuple[int, int]  # (row0, col0) of the local window

    CHANNEL_NAMES = (
        "local_obstacle",
        "local_explored",
        "local_pose",
        "local_trajectory",
        "global_obstacle",
        "global_explored",
        "global_pose",
        "global_trajectory",
    )

    @property
    def window(self) -> int:
        return self.channels.shape[1]


def window_origin(pose: Pose, res: float, window: int) -> tuple[int, int]:
    r, c = pose.cell(res)
    return r - window // 2, c - window // 2


def _crop_padded(grid: np.ndarray, origin: tuple[int, int], window: int) -> np.ndarray:
    out = np.zeros((window, window), dtype=np.float32)
    m = grid.shape[0]
    r0, c0 = origin
    sr0, sc0 = max(r0, 0), max(c0, 0)
    sr1, sc1 = min(r0 + window, m), min(c0 + window, m)
    if sr0 < sr1 and sc0 < sc1:
        out[sr0 - r0 : sr1 - r0, sc0 - c0 : sc1 - c0] = grid[sr0:sr1, sc0:sc1]
    return out


def _max_pool(grid: np.ndarray, window: int) -> np.ndarray:
    m = grid.shape[0]
    k = -(-m // window)  # ceil
    padded = np.zeros((k * window, k * window), dtype=np.float32)
    padded[:m, :m] = grid
    return padded.reshape(window, k, window, k).max(axis=(1, 3))


def build_observation(fmap: FloorMap, pose: Pose, window: int) -> ObservationStack:
    """Stack local crop and max-pooled global channels for the policy."""
    if window > fmap.size:
        raise ValueError(f"window {window} exceeds map size {fmap.size}")
    obstacle = (fmap.explored == OCCUPIED).astype(np.float32)
    explored = (fmap.explored != UNKNOWN).astype(np.float32)
    pose_grid = np.zeros_like(obstacle)
    pr, pc = pose.cell(fmap.res)
    pose_grid[min(max(pr, 0), fmap.size - 1), min(max(pc, 0), fmap.size - 1)] = 1.0
    trajectory = np.minimum(fmap.visit_count, 1).astype(np.float32)

    origin = window_origin(pose, fmap.res, window)
    local = [_crop_padded(g, origin, window) for g in (obstacle, explored, pose_grid, trajectory)]
    pooled = [_max_pool(g, window) for g in (obstacle, explored, pose_grid, trajectory)]
    channels = np.stack(local + pooled).astype(np.float32)
    return ObservationStack(channels=channels, heading=pose.heading, window_origin=origin)


@dataclass(frozen=True)
class Coverage:
    cr: float
    ca: float  # m^2


def coverage(fmap: FloorMap, world_floor: np.ndarray) -> Coverage:
    """Coverage ratio/area against the floor's reachable ground truth
    (its free cells; generated and loaded worlds guarantee a single
    connected free component)."""
    if world_floor.shape != fmap.explored.shape:
        raise ValueError("map and ground-truth floor differ in size")
    reachable = world_floor == FREE
    known = fmap.explored != UNKNOWN
    cell_area = fmap.res * fmap.res
    n_reach = int(reachable.sum())
    n_known = int((known & reachable).sum())
    if n_reach == 0:
        return Coverage(cr=0.0, ca=0.0)
    return Coverage(cr=n_known / n_reach, ca=n_known * cell_area)


def save_floor_map(fmap: FloorMap, dirpath: str | Path) -> Path:
    """Snapshot dump following the world PGM convention plus trajectory."""
    from .world.worldio import write_pgm

    directory = Path(dirpath)
    directory.mkdir(parents=True, exist_ok=True)
    i = fmap.floor
    levels = np.full(fmap.explored.shape, 128, dtype=np.uint8)
    levels[fmap.explored == FREE] = 255
    levels[fmap.explored == OCCUPIED] = 0
    write_pgm(directory / f"explored_{i}.pgm", levels)
    write_pgm(directory / f"stairs_{i}.pgm", np.where(fmap.stair_id > 0, 255, 0))
    write_pgm(directory / f"trajectory_{i}.pgm", np.where(fmap.visit_count > 0, 255, 0))
    meta = {
        "floor": i,
        "M": fmap.size,
        "r": fmap.res,
        "covered_cells": fmap.covered_cells,
        "encoding": {"explored": {"unknown": 128, "free": 255, "occupied": 0}},
    }
    (directory / f"map_{i}.json").write_text(json.dumps(meta, indent=2))
    return directory
