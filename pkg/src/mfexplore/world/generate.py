"""Procedural multi-floor worlds: room-and-corridor floors joined by
stair rectangles.

A stair occupies the same footprint on both floors it joins. On the lower
floor its far end is capped (you cannot walk past the top of a staircase),
on the upper floor the near end is capped (the void), and both long sides
are walled so traversal happens along the stair axis. A two-cell apron
opens each floor's end into that floor's free space.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import WorldGenerationError
from ..grids import FREE, OCCUPIED
from .types import MultiFloorWorld, StairLink, WorldSpec, make_stair_link, validate_world

_MAX_ATTEMPTS = 64


class _GenRetry(Exception):
    pass


@dataclass
class _StairPlan:
    junction: int  # joins floors junction, junction+1
    base: tuple[int, int]  # grid cell of stair cell (t=0, l=0)
    tdir: tuple[int, int]  # (dr, dc) along the stair axis, entry -> top
    length: int
    width: int

    def _cell(self, t: int, l: int) -> tuple[int, int]:
        dr, dc = self.tdir
        lr, lc = abs(dc), abs(dr)
        return self.base[0] + t * dr + l * lr, self.base[1] + t * dc + l * lc

    def cells(self, trange, lrange) -> list[tuple[int, int]]:
        return [self._cell(t, l) for t in trange for l in lrange]

    @property
    def stair_cells(self):
        return self.cells(range(self.length), range(self.width))

    @property
    def side_walls(self):
        return self.cells(range(-1, self.length + 1), (-1, self.width))

    @property
    def lower_cap(self):
        return self.cells((self.length,), range(self.width))

    @property
    def upper_cap(self):
        return self.cells((-1,), range(self.width))

    @property
    def lower_apron(self):
        return self.cells((-1, -2), range(self.width))

    @property
    def upper_apron(self):
        return self.cells((self.length, self.length + 1), range(self.width))

    @property
    def box(self):
        return set(self.cells(range(-2, self.length + 2), range(-1, self.width + 1)))

    @property
    def lower_apron_tip(self):
        return self._cell(-2, self.width // 2)

    @property
    def upper_apron_tip(self):
        return self._cell(self.length + 1, self.width // 2)

    @property
    def lower_mouth(self):
        return self._cell(-5, self.width // 2)

    @property
    def upper_mouth(self):
        return self._cell(self.length + 4, self.width // 2)

    def axis_xy(self) -> tuple[float, float]:
        dr, dc = self.tdir
        return float(dc), float(dr)


def _carve_rect(grid: np.ndarray, r0: int, c0: int, h: int, w: int) -> None:
    grid[r0 : r0 + h, c0 : c0 + w] = FREE


def _floor_layout(rng: np.random.Generator, m: int, room_density: float) -> np.ndarray:
    grid = np.full((m, m), OCCUPIED, dtype=np.uint8)
    n_rooms = 3 + int(round(room_density * 9))
    lo, hi = max(6, m // 8), max(8, m // 3)
    centers = []
    for _ in range(n_rooms):
        h = int(rng.integers(lo, hi + 1))
        w = int(rng.integers(lo, hi + 1))
        r0 = int(rng.integers(1, max(2, m - 1 - h)))
        c0 = int(rng.integers(1, max(2, m - 1 - w)))
        h = min(h, m - 1 - r0)
        w = min(w, m - 1 - c0)
        _carve_rect(grid, r0, c0, h, w)
        centers.append((r0 + h // 2, c0 + w // 2))
    cw = 5 if m >= 96 else 3
    order = rng.permutation(len(centers))
    for a, b in zip(order[:-1], order[1:]):
        _carve_l_corridor(grid, centers[a], centers[b], cw, rng)
    grid[0, :] = OCCUPIED
    grid[-1, :] = OCCUPIED
    grid[:, 0] = OCCUPIED
    grid[:, -1] = OCCUPIED
    return grid


def _corridor_cells(m, a, b, width, row_first):
    (r1, c1), (r2, c2) = a, b
    half = width // 2
    cells = []

    def band_h(row, ca, cb):
        for r in range(max(1, row - half), min(m - 1, row - half + width)):
            for c in range(max(1, min(ca, cb)), min(m - 1, max(ca, cb) + 1)):
                cells.append((r, c))

    def band_v(col, ra, rb):
        for c in range(max(1, col - half), min(m - 1, col - half + width)):
            for r in range(max(1, min(ra, rb)), min(m - 1, max(ra, rb) + 1)):
                cells.append((r, c))

    if row_first:
        band_h(r1, c1, c2)
        band_v(c2, r1, r2)
    else:
        band_v(c1, r1, r2)
        band_h(r2, c1, c2)
    return cells


def _carve_l_corridor(grid, a, b, width, rng) -> None:
    m = grid.shape[0]
    for r, c in _corridor_cells(m, a, b, width, bool(rng.integers(2))):
        grid[r, c] = FREE


def _label_free(grid: np.ndarray):
    from scipy import ndimage

    structure = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]])
    return ndimage.label(grid == FREE, structure=structure)


def _largest_component(grid: np.ndarray) -> np.ndarray:
    labels, n = _label_free(grid)
    if n == 0:
        raise _GenRetry
    sizes = np.bincount(labels.ravel())[1:]
    return labels == (int(np.argmax(sizes)) + 1)


def _impose_stair(plan: _StairPlan, lower: np.ndarray, upper: np.ndarray) -> None:
    for r, c in plan.stair_cells:
        lower[r, c] = FREE
        upper[r, c] = FREE
    for r, c in plan.side_walls:
        lower[r, c] = OCCUPIED
        upper[r, c] = OCCUPIED
    for r, c in plan.lower_cap:
        lower[r, c] = OCCUPIED
    for r, c in plan.upper_cap:
        upper[r, c] = OCCUPIED
    for r, c in plan.lower_apron:
        lower[r, c] = FREE
    for r, c in plan.upper_apron:
        upper[r, c] = FREE


def _plan_fits(plan: _StairPlan, m: int, taken: set) -> bool:
    box = plan.box
    for r, c in box:
        if not (1 <= r < m - 1 and 1 <= c < m - 1):
            return False
    return not (box & taken)


def _mouth_open(grid: np.ndarray, cell: tuple[int, int], half: int = 3) -> bool:
    """True when the area around the apron mouth is mostly free already,
    so the stair entrance is observable from open space."""
    m = grid.shape[0]
    r, c = cell
    r0, r1 = max(0, r - half), min(m, r + half + 1)
    c0, c1 = max(0, c - half), min(m, c + half + 1)
    block = grid[r0:r1, c0:c1]
    return block.size > 0 and (block == FREE).mean() >= 0.5


def _connect_apron(grid, tip, own_apron, all_boxes, rng) -> bool:
    """Carve a corridor from an apron tip to the floor's largest free
    component, avoiding every stair box except the apron itself."""
    m = grid.shape[0]
    forbidden = all_boxes - set(own_apron)
    main = _largest_component(grid)
    if main[tip]:
        return True
    targets = np.argwhere(main)
    d2 = ((targets - np.asarray(tip)) ** 2).sum(axis=1)
    order = np.argsort(d2, kind="stable")
    for k in order[:40]:
        tr, tc = map(int, targets[k])
        for row_first in (True, False):
            cells = _corridor_cells(m, tip, (tr, tc), 3, row_first)
            if any((r, c) in forbidden for r, c in cells):
                continue
            for r, c in cells:
                grid[r, c] = FREE
            return True
    return False


def _generate_once(rng: np.random.Generator, spec: WorldSpec) -> MultiFloorWorld:
    m = spec.M
    floors = [_floor_layout(rng, m, spec.room_density) for _ in range(spec.n_floors)]

    stair_len = 10 if m >= 96 else 6
    stair_w = 5 if m >= 96 else 3
    dirs = ((1, 0), (-1, 0), (0, 1), (0, -1))

    plans: list[_StairPlan] = []
    taken: set = set()
    for junction in range(spec.n_floors - 1):
        for _ in range(spec.stair_count_per_junction):
            placed = False
            for attempt in range(400):
                tdir = dirs[int(rng.integers(4))]
                base = (int(rng.integers(3, m - 3)), int(rng.integers(3, m - 3)))
                plan = _StairPlan(junction, base, tdir, stair_len, stair_w)
                if not _plan_fits(plan, m, taken):
                    continue
                # prefer entrances opening into free space (observable);
                # relax after enough rejections
                if attempt < 300 and not (
                    _mouth_open(floors[junction], plan.lower_mouth)
                    and _mouth_open(floors[junction + 1], plan.upper_mouth)
                ):
                    continue
                plans.append(plan)
                taken |= plan.box
                placed = True
                break
            if not placed:
                raise _GenRetry

    for plan in plans:
        _impose_stair(plan, floors[plan.junction], floors[plan.junction + 1])

    for plan in plans:
        if not _connect_apron(floors[plan.junction], plan.lower_apron_tip, plan.lower_apron, taken, rng):
            raise _GenRetry
        if not _connect_apron(floors[plan.junction + 1], plan.upper_apron_tip, plan.upper_apron, taken, rng):
            raise _GenRetry

    # imposing walls may have split off pockets; keep only the main component
    for i, grid in enumerate(floors):
        main = _largest_component(grid)
        grid[(grid == FREE) & ~main] = OCCUPIED
        for plan in plans:
            if i in (plan.junction, plan.junction + 1):
                cells = np.asarray(plan.stair_cells)
                if not main[cells[:, 0], cells[:, 1]].all():
                    raise _GenRetry

    links = [
        make_stair_link(
            link_id=k,
            lower_floor=plan.junction,
            upper_floor=plan.junction + 1,
            lower_region=plan.stair_cells,
            upper_region=plan.stair_cells,
            axis=plan.axis_xy(),
        )
        for k, plan in enumerate(plans)
    ]

    stair_cells = {cell for plan in plans if plan.junction == 0 for cell in plan.stair_cells}
    free0 = np.argwhere(floors[0] == FREE)
    candidates = [tuple(map(int, rc)) for rc in free0 if tuple(map(int, rc)) not in stair_cells]
    if not candidates:
        raise _GenRetry
    spawn_cell = candidates[int(rng.integers(len(candidates)))]
    heading = float(rng.uniform(-np.pi, np.pi))

    world = MultiFloorWorld(
        floors=floors,
        res=spec.r,
        stair_links=links,
        spawn_floor=0,
        spawn_cell=spawn_cell,
        spawn_heading=heading,
        meta={"spec": spec.__dict__},
    )
    validate_world(world)
    return world


def generate_world(seed: int, spec: WorldSpec) -> MultiFloorWorld:
    """Deterministic world from (seed, spec); bounded retries on layouts
    that cannot satisfy the constraints."""
    if spec.n_floors < 1:
        raise ValueError("n_floors must be >= 1")
    if spec.M < 32:
        raise ValueError("M must be >= 32")
    if spec.n_floors > 1 and spec.stair_count_per_junction < 1:
        raise ValueError("multi-floor worlds need stair_count_per_junction >= 1")
    last = None
    for attempt in range(_MAX_ATTEMPTS):
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed, attempt))))
        try:
            return _generate_once(rng, spec)
        except _GenRetry as exc:
            last = exc
    raise WorldGenerationError(seed, f"no valid layout after {_MAX_ATTEMPTS} attempts ({last!r})")
