"""World directory format: meta.json plus per-floor PGM rasters.

floor_<i>.pgm : binary PGM (P5), 0 = occupied, 255 = free
stairs_<i>.pgm: 255 = stair cell, 0 = elsewhere
meta.json     : n_floors, M, r, spawn, stair_links (bboxes half-open
                [row0, col0, row1, col1] and axis unit vectors)
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..errors import WorldFormatError
from ..grids import FREE, OCCUPIED
from .types import MultiFloorWorld, make_stair_link, validate_world


def write_pgm(path: Path, data: np.ndarray) -> None:
    h, w = data.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(np.ascontiguousarray(data, dtype=np.uint8).tobytes())


def read_pgm(path: Path) -> np.ndarray:
    raw = path.read_bytes()
    if not raw.startswith(b"P5"):
        raise WorldFormatError(path.name, "not a binary PGM (P5) file")
    fields: list[bytes] = []
    pos = 2
    while len(fields) < 3:
        while pos < len(raw) and raw[pos : pos + 1].isspace():
            pos += 1
        if raw[pos : pos + 1] == b"#":
            while pos < len(raw) and raw[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos : pos + 1].isspace():
            pos += 1
        fields.append(raw[start:pos])
    pos += 1  # single whitespace after maxval
    try:
        w, h, maxval = (int(f) for f in fields)
    except ValueError:
        raise WorldFormatError(path.name, "malformed PGM header") from None
    if maxval != 255:
        raise WorldFormatError(path.name, f"expected maxval 255, got {maxval}")
    data = np.frombuffer(raw[pos:], dtype=np.uint8)
    if data.size != w * h:
        raise WorldFormatError(path.name, f"expected {w * h} raster bytes, got {data.size}")
    return data.reshape(h, w).copy()


def save_world(world: MultiFloorWorld, dirpath: str | Path) -> Path:
    directory = Path(dirpath)
    directory.mkdir(parents=True, exist_ok=True)
    links = []
    for link in world.stair_links:
        links.append(
            {
                "id": link.link_id,
                "lower": link.lower_floor,
                "upper": link.upper_floor,
                "lower_bbox": list(link.bbox_on(link.lower_floor)),
                "upper_bbox": list(link.bbox_on(link.upper_floor)),
                "axis": [link.axis[0], link.axis[1]],
            }
        )
    meta = {
        "n_floors": world.n_floors,
        "M": world.size,
        "r": world.res,
        "spawn": {
            "floor": world.spawn_floor,
            "cell": list(world.spawn_cell),
            "heading": world.spawn_heading,
        },
        "stair_links": links,
    }
    (directory / "meta.json").write_text(json.dumps(meta, indent=2))
    for i, grid in enumerate(world.floors):
        write_pgm(directory / f"floor_{i}.pgm", np.where(grid == FREE, 255, 0))
        write_pgm(directory / f"stairs_{i}.pgm", np.where(world.stair_id_grids[i] > 0, 255, 0))
    return directory


def _require(meta: dict, field: str):
    if field not in meta:
        raise WorldFormatError(field, "missing from meta.json")
    return meta[field]


def _bbox_cells(bbox, m: int, field: str) -> list[tuple[int, int]]:
    if len(bbox) != 4:
        raise WorldFormatError(field, "bbox must be [row0, col0, row1, col1]")
    r0, c0, r1, c1 = (int(v) for v in bbox)
    if not (0 <= r0 < r1 <= m and 0 <= c0 < c1 <= m):
        raise WorldFormatError(field, f"bbox {bbox} out of bounds or empty")
    return [(r, c) for r in range(r0, r1) for c in range(c0, c1)]


def load_world(dirpath: str | Path) -> MultiFloorWorld:
    directory = Path(dirpath)
    meta_path = directory / "meta.json"
    if not meta_path.exists():
        raise WorldFormatError("meta.json", f"missing in {directory}")
    try:
        meta = json.loads(meta_path.read_text())
    except json.JSONDecodeError as exc:
        raise WorldFormatError("meta.json", f"invalid JSON: {exc}") from None
    n_floors = int(_require(meta, "n_floors"))
    m = int(_require(meta, "M"))
    res = float(_require(meta, "r"))
    if res <= 0:
        raise WorldFormatError("r", f"resolution must be positive, got {res}")
    spawn = _require(meta, "spawn")
    for key in ("floor", "cell", "heading"):
        if key not in spawn:
            raise WorldFormatError(f"spawn.{key}", "missing from meta.json")

    floors = []
    for i in range(n_floors):
        path = directory / f"floor_{i}.pgm"
        if not path.exists():
            raise WorldFormatError(f"floor_{i}", f"missing file {path.name}")
        raster = read_pgm(path)
        if raster.shape != (m, m):
            raise WorldFormatError(f"floor_{i}", f"expected {m}x{m}, got {raster.shape}")
        bad = ~np.isin(raster, (0, 255))
        if bad.any():
            raise WorldFormatError(f"floor_{i}", "PGM values must be 0 (occupied) or 255 (free)")
        floors.append(np.where(raster == 255, FREE, OCCUPIED).astype(np.uint8))

    links = []
    stair_union = [np.zeros((m, m), dtype=bool) for _ in range(n_floors)]
    for entry in _require(meta, "stair_links"):
        lid = int(entry.get("id", len(links)))
        name = f"stair_links[{lid}]"
        for key in ("lower", "upper", "lower_bbox", "upper_bbox", "axis"):
            if key not in entry:
                raise WorldFormatError(f"{name}.{key}", "missing from meta.json")
        lo, up = int(entry["lower"]), int(entry["upper"])
        if not (0 <= lo < n_floors and 0 <= up < n_floors):
            raise WorldFormatError(f"{name}.lower/upper", "floor index out of range")
        lower_cells = _bbox_cells(entry["lower_bbox"], m, f"{name}.lower_bbox")
        upper_cells = _bbox_cells(entry["upper_bbox"], m, f"{name}.upper_bbox")
        links.append(make_stair_link(lid, lo, up, lower_cells, upper_cells, entry["axis"]))
        for floor, cells in ((lo, lower_cells), (up, upper_cells)):
            for r, c in cells:
                stair_union[floor][r, c] = True

    for i in range(n_floors):
        path = directory / f"stairs_{i}.pgm"
        if not path.exists():
            raise WorldFormatError(f"stairs_{i}", f"missing file {path.name}")
        raster = read_pgm(path)
        if raster.shape != (m, m):
            raise WorldFormatError(f"stairs_{i}", f"expected {m}x{m}, got {raster.shape}")
        mask = raster == 255
        if not np.array_equal(mask, stair_union[i]):
            raise WorldFormatError(f"stairs_{i}", "stair raster does not match meta.json stair bboxes")

    world = MultiFloorWorld(
        floors=floors,
        res=res,
        stair_links=links,
        spawn_floor=int(spawn["floor"]),
        spawn_cell=(int(spawn["cell"][0]), int(spawn["cell"][1])),
        spawn_heading=float(spawn["heading"]),
        meta=meta,
    )
    validate_world(world)
    return world
