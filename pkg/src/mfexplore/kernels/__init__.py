"""Hot-kernel backend selection.

The compiled Cython module is used when present; otherwise the pure-Python
reference implementation takes over. Set MFEXPLORE_PURE_PYTHON=1 to force
the fallback (used by the parity tests and the benchmark).
"""

from __future__ import annotations

import math
import os

import numpy as np

from ..grids import TWO_PI

if os.environ.get("MFEXPLORE_PURE_PYTHON") == "1":
    from . import py_backend as _impl
else:
    try:
        from . import _ckernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import py_backend as _impl

BACKEND: str = _impl.BACKEND


def get_backend(name: str):
    """Return a specific backend module ('python' or 'compiled')."""
    if name == "python":
        from . import py_backend

        return py_backend
    if name == "compiled":
        from . import _ckernels  # type: ignore[attr-defined]

        return _ckernels
    raise ValueError(f"unknown backend {name!r}")


def visible_cells(
    blocked: np.ndarray,
    ax: float,
    ay: float,
    heading: float,
    fov: float,
    range_m: float,
    res: float,
    *,
    impl=None,
) -> np.ndarray:
    """Visibility mask from the point (ax, ay) with the given heading/fov.

    fov >= 2*pi disables the cone test; fov <= 0 keeps only the agent's
    own cell. Trigonometry is evaluated here once so both backends see the
    same double inputs.
    """
    backend = impl if impl is not None else _impl
    blocked = np.ascontiguousarray(blocked, dtype=np.uint8)
    full_fov = fov >= TWO_PI
    if fov <= 0.0:
        cos_half = 2.0  # cone test can never pass; own cell only
        full_fov = False
    else:
        cos_half = math.cos(min(fov, TWO_PI) / 2.0)
    return backend.visible_cells(
        blocked,
        float(ax),
        float(ay),
        math.cos(heading),
        math.sin(heading),
        cos_half,
        full_fov,
        float(range_m),
        float(res),
    )


def fmm_field(
    trav: np.ndarray,
    sources: np.ndarray,
    h: float,
    *,
    return_order: bool = False,
    impl=None,
):
    """Fast-marching distance field over a traversability mask.

    sources are flat indices into trav, assumed traversable, deduplicated
    and sorted by the caller.
    """
    backend = impl if impl is not None else _impl
    trav = np.ascontiguousarray(trav, dtype=np.uint8)
    sources = np.ascontiguousarray(sources, dtype=np.int64)
    return backend.fmm_field(trav, sources, float(h), return_order)
