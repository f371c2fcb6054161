"""Global-goal action type: a target point inside the agent-centered
local window, carried with its global map coordinates."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class GlobalGoal:
    x: int  # local window column
    y: int  # local window row
    gx: int  # global column
    gy: int  # global row
    issued_at: int = 0

    @property
    def cell(self) -> tuple[int, int]:
        """Global (row, col)."""
        return self.gy, self.gx

    @classmethod
    def from_global(
        cls,
        cell: tuple[int, int],
        window_origin: tuple[int, int],
        window: int,
        map_size: int,
        issued_at: int = 0,
    ) -> "GlobalGoal":
        """Clamp a global (row, col) target into the local window and the
        map bounds; the issued goal is the clamped point."""
        r0, c0 = window_origin
        ly = min(max(int(cell[0]) - r0, 0), window - 1)
        lx = min(max(int(cell[1]) - c0, 0), window - 1)
        gy = min(max(r0 + ly, 0), map_size - 1)
        gx = min(max(c0 + lx, 0), map_size - 1)
        return cls(x=lx, y=ly, gx=gx, gy=gy, issued_at=issued_at)
