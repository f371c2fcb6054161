"""Batch evaluation over worlds x policies x seeds with CSV/JSON output."""

from __future__ import annotations

import json
from dataclasses import dataclass
from multiprocessing import get_context
from pathlib import Path

import numpy as np

from ..config import ExploreConfig
from ..errors import ConfigError
from ..world.generate import generate_world
from ..world.types import OracleNoise, WorldSpec
from ..world.worldio import load_world
from .episode import run_episode
from .metrics import compute_metrics

BATCH_HEADER = "world,policy,seed,cr,ca,apl,sr,steps"

METRIC_NAMES = ("cr", "ca", "apl", "sr", "steps")


@dataclass(frozen=True)
class WorldRef:
    """A world to evaluate: either a directory or a generation request."""

    name: str
    path: str | None = None
    spec: WorldSpec | None = None
    gen_seed: int = 0

    def materialize(self):
        if self.path is not None:
            return load_world(self.path)
        return generate_world(self.gen_seed, self.spec)


def _run_one(args):
    ref, policy, seed, cfg, budget, noise, run_dir, save_artifacts = args
    world = ref.materialize()
    record = run_episode(
        world,
        policy,
        cfg=cfg,
        seed=seed,
        budget=budget,
        noise=noise,
        out_dir=run_dir,
        save_artifacts=save_artifacts,
    )
    m = compute_metrics(record)
    return {
        "world": ref.name,
        "policy": policy,
        "seed": seed,
        "cr": m.cr,
        "ca": m.ca,
        "apl": m.apl,
        "sr": m.sr,
        "steps": m.steps,
    }


def run_batch(
    worlds: list[WorldRef],
    policies: list[str],
    n_seeds: int,
    out_dir: str | Path,
    *,
    cfg: ExploreConfig | None = None,
    budget: int = 1000,
    noise: OracleNoise = OracleNoise(),
    parallelism: int = 1,
    seed_base: int = 0,
    save_artifacts: bool = False,
) -> tuple[Path, Path]:
    """One row per (world, policy, seed); aggregate mean/std per policy.

    Deterministic modulo row ordering (rows are sorted before writing).
    """
    if not worlds:
        raise ConfigError("no worlds given; pass at least one world directory or gen spec")
    if not policies:
        raise ConfigError("no policies given; choose from nearest|utility|rrt-nbv|stochastic|external:<cmd>")
    if n_seeds < 1:
        raise ConfigError("n_seeds must be >= 1")
    cfg = cfg or ExploreConfig()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    jobs = []
    for ref in worlds:
        for policy in policies:
            for k in range(n_seeds):
                seed = seed_base + k
                run_dir = None
                if save_artifacts:
                    safe_policy = policy.replace(":", "_").replace("/", "_")
                    run_dir = out / "runs" / f"{ref.name}__{safe_policy}__s{seed}"
                jobs.append((ref, policy, seed, cfg, budget, noise, run_dir, save_artifacts))

    if parallelism > 1:
        with get_context("spawn").Pool(parallelism) as pool:
            rows = pool.map(_run_one, jobs)
    else:
        rows = [_run_one(job) for job in jobs]

    rows.sort(key=lambda r: (r["world"], r["policy"], r["seed"]))
    csv_path = out / "batch.csv"
    lines = [BATCH_HEADER]
    for r in rows:
        lines.append(
            f"{r['world']},{r['policy']},{r['seed']},{r['cr']:.6f},{r['ca']:.6f},"
            f"{r['apl']:.6f},{r['sr']},{r['steps']}"
        )
    csv_path.write_text("\n".join(lines) + "\n")

    aggregate: dict = {"n_rows": len(rows), "policies": {}}
    for policy in sorted(set(r["policy"] for r in rows)):
        sub = [r for r in rows if r["policy"] == policy]
        stats = {}
        for name in METRIC_NAMES:
            vals = np.asarray([float(r[name]) for r in sub])
            stats[name] = {"mean": float(vals.mean()), "std": float(vals.std())}
        aggregate["policies"][policy] = stats
    json_path = out / "aggregate.json"
    json_path.write_text(json.dumps(aggregate, indent=2, sort_keys=True))
    return csv_path, json_path
