"""Command line interface.

  explore run --world <dir|gen:spec.json> --policy <id> --seed N --budget T --out <dir>
  explore batch --config batch.json
  explore gen-world --spec spec.json --seed N --out <dir>

Exit codes: 0 success, 2 configuration error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from ..config import ExploreConfig
from ..errors import ConfigError, MfExploreError
from ..world.generate import generate_world
from ..world.types import OracleNoise, WorldSpec
from ..world.worldio import load_world, save_world
from .batch import WorldRef, run_batch
from .episode import run_episode
from .metrics import compute_metrics


def _load_spec(path: str) -> WorldSpec:
    try:
        data = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"world spec file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"world spec {path} is not valid JSON: {exc}")
    try:
        return WorldSpec(**data)
    except TypeError as exc:
        raise ConfigError(f"bad world spec fields in {path}: {exc}")


def _resolve_world(arg: str, seed: int):
    if arg.startswith("gen:"):
        return generate_world(seed, _load_spec(arg[4:]))
    return load_world(arg)


def _load_config(path: str | None) -> ExploreConfig:
    if path is None:
        return ExploreConfig()
    try:
        data = json.loads(Path(path).read_text())
        return ExploreConfig.from_dict(data)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except (json.JSONDecodeError, ValueError, TypeError) as exc:
        raise ConfigError(f"bad config {path}: {exc}")


def _cmd_run(args) -> int:
    cfg = _load_config(args.config)
    world = _resolve_world(args.world, args.seed)
    noise = OracleNoise(miss_rate=args.noise_miss, boundary_jitter_cells=args.noise_jitter)
    record = run_episode(
        world,
        args.policy,
        cfg=cfg,
        seed=args.seed,
        budget=args.budget,
        noise=noise,
        out_dir=args.out,
    )
    m = compute_metrics(record)
    print(
        f"episode done: steps={m.steps} CR={m.cr:.3f} CA={m.ca:.3f} m^2 "
        f"APL={m.apl:.3f} SR={m.sr} -> {args.out}"
    )
    return 0


def _cmd_batch(args) -> int:
    try:
        conf = json.loads(Path(args.config).read_text())
    except FileNotFoundError:
        raise ConfigError(f"batch config not found: {args.config}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"batch config is not valid JSON: {exc}")
    worlds = []
    for i, w in enumerate(conf.get("worlds", [])):
        if isinstance(w, str) and w.startswith("gen:"):
            spec = _load_spec(w[4:])
            worlds.append(WorldRef(name=f"gen{i}", spec=spec, gen_seed=conf.get("world_seed", 0) + i))
        elif isinstance(w, str):
            worlds.append(WorldRef(name=Path(w).name, path=w))
        elif isinstance(w, dict):
            spec = WorldSpec(**w.get("spec", {}))
            worlds.append(
                WorldRef(name=w.get("name", f"gen{i}"), spec=spec, gen_seed=w.get("seed", i))
            )
        else:
            raise ConfigError(f"worlds[{i}] must be a path, gen:<spec.json>, or an object")
    cfg = ExploreConfig.from_dict(conf.get("config", {})) if conf.get("config") else ExploreConfig()
    noise_conf = conf.get("noise", {})
    noise = OracleNoise(
        miss_rate=float(noise_conf.get("miss_rate", 0.0)),
        boundary_jitter_cells=int(noise_conf.get("boundary_jitter_cells", 0)),
    )
    out = conf.get("out", args.out or "batch_out")
    csv_path, json_path = run_batch(
        worlds,
        conf.get("policies", []),
        int(conf.get("n_seeds", 1)),
        out,
        cfg=cfg,
        budget=int(conf.get("budget", 1000)),
        noise=noise,
        parallelism=int(conf.get("parallelism", 1)),
        seed_base=int(conf.get("seed_base", 0)),
        save_artifacts=bool(conf.get("save_artifacts", False)),
    )
    print(f"batch done: {csv_path} {json_path}")
    return 0


def _cmd_gen_world(args) -> int:
    spec = _load_spec(args.spec)
    world = generate_world(args.seed, spec)
    save_world(world, args.out)
    print(f"world written to {args.out} ({spec.n_floors} floors, {spec.M}x{spec.M})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="explore", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one exploration episode")
    p_run.add_argument("--world", required=True, help="world directory or gen:<spec.json>")
    p_run.add_argument(
        "--policy",
        required=True,
        help="nearest | utility | rrt-nbv | stochastic | external:<cmd>",
    )
    p_run.add_argument("--seed", type=int, default=0)
    p_run.add_argument("--budget", type=int, default=1000)
    p_run.add_argument("--out", required=True)
    p_run.add_argument("--config", default=None, help="ExploreConfig JSON overrides")
    p_run.add_argument("--noise-miss", type=float, default=0.0)
    p_run.add_argument("--noise-jitter", type=int, default=0)
    p_run.set_defaults(func=_cmd_run)

    p_batch = sub.add_parser("batch", help="run a batch from a JSON config")
    p_batch.add_argument("--config", required=True)
    p_batch.add_argument("--out", default=None)
    p_batch.set_defaults(func=_cmd_batch)

    p_gen = sub.add_parser("gen-world", help="generate a world directory")
    p_gen.add_argument("--spec", required=True)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--out", required=True)
    p_gen.set_defaults(func=_cmd_gen_world)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except MfExploreError as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
