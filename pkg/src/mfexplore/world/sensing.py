"""Sensor simulation: ray visibility plus the stair-detection oracle."""

from __future__ import annotations

import numpy as np

from .. import kernels
from ..grids import FREE, OCCUPIED
from .types import MultiFloorWorld, OracleNoise, Pose, SensorFrame

_EMPTY_CELLS = np.empty((0, 2), dtype=np.int64)
_EMPTY_DETS = np.empty((0, 3), dtype=np.int64)


def sense(world: MultiFloorWorld, pose: Pose, range_m: float, fov: float) -> SensorFrame:
    """Ray-visible cells within range and field of view of the pose.

    The returned frame carries perfect stair detections (every visible
    stair cell with its link id); apply detect_stairs for the noisy oracle.
    """
    grid = world.floors[pose.floor]
    blocked = grid == OCCUPIED
    mask = kernels.visible_cells(blocked, pose.x, pose.y, pose.heading, fov, range_m, world.res)
    vis = mask.astype(bool)
    free_cells = np.argwhere(vis & (grid == FREE)).astype(np.int64)
    occ_cells = np.argwhere(vis & blocked).astype(np.int64)
    sid = world.stair_id_grids[pose.floor]
    det_mask = vis & (sid > 0)
    det_cells = np.argwhere(det_mask)
    dets = (
        np.column_stack([det_cells, sid[det_mask] - 1]).astype(np.int64)
        if len(det_cells)
        else _EMPTY_DETS
    )
    return SensorFrame(
        agent_pose=pose,
        free_cells=free_cells if len(free_cells) else _EMPTY_CELLS,
        occupied_cells=occ_cells if len(occ_cells) else _EMPTY_CELLS,
        stair_detections=dets,
    )


def detect_stairs(frame: SensorFrame, noise: OracleNoise, rng: np.random.Generator) -> np.ndarray:
    """Noisy stair oracle over a frame's perfect detections.

    Each detection is independently dropped with probability miss_rate,
    then the remaining set is dilated or eroded by a jitter amount drawn
    uniformly from [-j, j], clipped to the frame's visible cells.
    Deterministic for a given rng state. Returns (K, 3) [row, col, link_id].
    """
    if not 0.0 <= noise.miss_rate <= 1.0:
        raise ValueError(f"miss_rate must be in [0, 1], got {noise.miss_rate}")
    dets = frame.stair_detections
    if len(dets) == 0:
        return _EMPTY_DETS
    if noise.miss_rate > 0.0:
        keep = rng.random(len(dets)) >= noise.miss_rate
        dets = dets[keep]
    j = noise.boundary_jitter_cells
    if j > 0 and len(dets) > 0:
        amount = int(rng.integers(-j, j + 1))
        dets = _jitter(frame, dets, amount)
    if len(dets) == 0:
        return _EMPTY_DETS
    flat = dets[:, 0] * (1 << 20) + dets[:, 1]
    return dets[np.argsort(flat, kind="stable")]


def _jitter(frame: SensorFrame, dets: np.ndarray, amount: int) -> np.ndarray:
    ids = {(int(r), int(c)): int(l) for r, c, l in dets}
    if amount > 0:
        visible = {tuple(map(int, rc)) for rc in frame.free_cells}
        visible |= {tuple(map(int, rc)) for rc in frame.occupied_cells}
        for _ in range(amount):
            grown = dict(ids)
            for (r, c), lid in sorted(ids.items()):
                for nr, nc in ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)):
                    if (nr, nc) in visible and (nr, nc) not in grown:
                        grown[(nr, nc)] = lid
            ids = grown
    elif amount < 0:
        for _ in range(-amount):
            ids = {
                (r, c): lid
                for (r, c), lid in ids.items()
                if all(nb in ids for nb in ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)))
            }
    if not ids:
        return _EMPTY_DETS
    return np.asarray([(r, c, lid) for (r, c), lid in sorted(ids.items())], dtype=np.int64)
