"""Grid conventions shared by every module.

Cell states are encoded as 0=unknown, 1=free, 2=occupied everywhere.
Grids are numpy arrays indexed [row, col]; continuous map coordinates are
(x, y) in meters with x along columns and y along rows, so the cell
containing (x, y) is (floor(y/res), floor(x/res)) and the center of cell
(r, c) is ((c + 0.5)*res, (r + 0.5)*res).
"""

from __future__ import annotations

import math

UNKNOWN = 0
FREE = 1
OCCUPIED = 2

TWO_PI = 2.0 * math.pi


def wrap_angle(a: float) -> float:
    """Wrap an angle to [-pi, pi)."""
    return (a + math.pi) % TWO_PI - math.pi


def cell_of(x: float, y: float, res: float) -> tuple[int, int]:
    """(row, col) of the cell containing the point (x, y)."""
    return int(math.floor(y / res)), int(math.floor(x / res))


def center_of(row: int, col: int, res: float) -> tuple[float, float]:
    """(x, y) center of cell (row, col)."""
    return (col + 0.5) * res, (row + 0.5) * res
