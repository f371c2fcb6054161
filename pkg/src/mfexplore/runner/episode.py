"""Episode orchestration: sense -> fuse -> graph -> FSM -> policy ->
plan -> act, until AllExplored or the step budget."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from ..config import ExploreConfig
from ..errors import NoFrontier, NoUnvisitedStair
from ..frontier import FrontierSet, detect_frontiers
from ..grids import FREE
from ..mapping import FloorMap, build_observation, coverage, integrate, save_floor_map
from ..navigation import WaypointFollower, plan_to_goal
from ..policies.baselines import (
    frontier_guided_stochastic_policy,
    nearest_frontier_policy,
    rrt_nbv_policy,
    utility_frontier_policy,
)
from ..policies.bridge import ExternalPolicyBridge
from ..policies.goals import GlobalGoal
from ..mapping import window_origin
from ..topology import (
    FloorProgress,
    StatusName,
    TopologyGraph,
    fsm_step,
    is_floor_done,
    nearest_stair_goal,
    on_stair_goal,
    save_topology,
    stair_centroid,
    update_graph,
)
from ..world.motion import MotionCommand, StairTracker, step_agent
from ..world.sensing import detect_stairs, sense
from ..world.types import MultiFloorWorld, OracleNoise

log = logging.getLogger(__name__)

POLICY_IDS = ("nearest", "utility", "rrt-nbv", "stochastic")

CSV_HEADER = "step,floor,x,y,heading,status,cr_floor,ca_floor,path_len,goal_x,goal_y"


@dataclass(frozen=True)
class StepRow:
    step: int
    floor: int
    x: float
    y: float
    heading: float
    status: str
    cr_floor: float
    ca_floor: float
    path_len: float
    goal_x: int | None
    goal_y: int | None

    def to_csv(self) -> str:
        gx = "" if self.goal_x is None else str(self.goal_x)
        gy = "" if self.goal_y is None else str(self.goal_y)
        return (
            f"{self.step},{self.floor},{self.x:.4f},{self.y:.4f},{self.heading:.4f},"
            f"{self.status},{self.cr_floor:.6f},{self.ca_floor:.6f},{self.path_len:.4f},{gx},{gy}"
        )


@dataclass
class EpisodeRecord:
    rows: list[StepRow] = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    def csv_text(self) -> str:
        return "\n".join([CSV_HEADER] + [r.to_csv() for r in self.rows]) + "\n"


class _PolicyRunner:
    """Resolves a policy id into a goal supplier for the exploring state."""

    def __init__(self, policy_id: str, cfg: ExploreConfig, rng: np.random.Generator):
        self.policy_id = policy_id
        self.cfg = cfg
        self.rng = rng
        self.bridge = None
        if policy_id.startswith("external:"):
            self.bridge = ExternalPolicyBridge(policy_id.split(":", 1)[1])
            self.bridge.reset_session()
        elif policy_id not in POLICY_IDS:
            raise ValueError(f"unknown policy {policy_id!r}; expected one of {POLICY_IDS} or external:<cmd>")

    def explore_goal(self, fmap, pose, fs, obs, window, step) -> tuple[GlobalGoal, tuple[int, int] | None]:
        """Returns (goal, frontier rep cell backing it or None)."""
        cfg = self.cfg
        if self.bridge is not None:
            local = self.bridge.act(obs, step)
            if local is not None:
                r0, c0 = obs.window_origin
                goal = GlobalGoal.from_global(
                    (r0 + local[1], c0 + local[0]), obs.window_origin, window, fmap.size, step
                )
                return goal, None
            goal = nearest_frontier_policy(fmap, pose, fs, window=window, issued_at=step)
            return goal, goal.cell
        if self.policy_id == "nearest":
            goal = nearest_frontier_policy(fmap, pose, fs, window=window, issued_at=step)
        elif self.policy_id == "utility":
            goal = utility_frontier_policy(
                fmap, pose, fs, cfg.lambda_utility,
                sensor_range=cfg.sensor_range, window=window, issued_at=step,
            )
        elif self.policy_id == "rrt-nbv":
            goal = rrt_nbv_policy(
                fmap, pose, cfg.rrt, self.rng,
                sensor_range=cfg.sensor_range, window=window, issued_at=step,
            )
            return goal, None
        else:
            goal = frontier_guided_stochastic_policy(
                obs, fs, pose, cfg.stochastic_temperature, self.rng,
                fmap=fmap, lam=cfg.lambda_utility, sensor_range=cfg.sensor_range, issued_at=step,
            )
        rep = min(
            (e.rep_cell for e in fs.edges),
            key=lambda rc: ((rc[0] - goal.cell[0]) ** 2 + (rc[1] - goal.cell[1]) ** 2, rc),
            default=None,
        )
        return goal, rep

    def close(self):
        if self.bridge is not None:
            self.bridge.close()


def _edge_at(graph: TopologyGraph, floor: int, cell: tuple[int, int]):
    for edge in graph.edges_on(floor):
        region = edge.region_on(floor)
        if ((region[:, 0] == cell[0]) & (region[:, 1] == cell[1])).any():
            return edge
    return None


def _set_entry_sign(edge, pose, res):
    region = edge.region_on(pose.floor)
    r0, c0 = region.min(axis=0)
    r1, c1 = region.max(axis=0)
    ar, ac = pose.cell(res)
    if (r1 - r0) >= (c1 - c0):
        edge.entry_sign = -1 if abs(ar - r0) <= abs(ar - r1) else 1
    else:
        edge.entry_sign = -1 if abs(ac - c0) <= abs(ac - c1) else 1


def _stair_route_goal(graph, pose, res, window, map_size, step):
    """No unvisited stair on this floor: head for the visited stair that
    leads toward the nearest floor still holding one (BFS over traversed
    edges)."""
    target_floors = {f for e in graph.edges if not e.visited for f in e.regions}
    if not target_floors:
        return None
    queue = [(pose.floor, None)]
    seen = {pose.floor}
    while queue:
        floor, hop = queue.pop(0)
        if floor in target_floors and hop is not None:
            region = hop.region_on(pose.floor)
            if region is None:
                return None
            cx, cy = stair_centroid(region)
            d2 = (region[:, 0] - cy) ** 2 + (region[:, 1] - cx) ** 2
            k = int(np.argmin(d2))
            origin = window_origin(pose, res, window)
            return GlobalGoal.from_global(
                (int(region[k, 0]), int(region[k, 1])), origin, window, map_size, step
            )
        for edge in graph.edges:
            if not edge.visited or edge.floor_b is None:
                continue
            pair = {edge.floor_a, edge.floor_b}
            if floor not in pair:
                continue
            other = (pair - {floor}).pop() if len(pair) > 1 else floor
            if other in seen:
                continue
            seen.add(other)
            queue.append((other, hop if hop is not None else edge))
    return None


def run_episode(
    world: MultiFloorWorld,
    policy_id: str,
    cfg: ExploreConfig | None = None,
    seed: int = 0,
    budget: int = 1000,
    noise: OracleNoise = OracleNoise(),
    out_dir=None,
    save_artifacts: bool = True,
) -> EpisodeRecord:
    """Run one exploration episode; deterministic for fixed inputs."""
    cfg = cfg or ExploreConfig()
    t0 = time.perf_counter()
    ss = np.random.SeedSequence(seed)
    policy_ss, oracle_ss = ss.spawn(2)
    rng_policy = np.random.Generator(np.random.PCG64(policy_ss))
    rng_oracle = np.random.Generator(np.random.PCG64(oracle_ss))

    policy = _PolicyRunner(policy_id, cfg, rng_policy)
    window = cfg.window_size(world.size)
    res = world.res

    pose = world.spawn_pose()
    maps: dict[int, FloorMap] = {}
    progress: dict[int, FloorProgress] = {}
    graph = TopologyGraph()
    tracker = StairTracker(world)
    status = StatusName.EXPLORING_FLOOR
    record = EpisodeRecord()
    path_len = 0.0
    follower: WaypointFollower | None = None
    active_goal: GlobalGoal | None = None
    active_rep: tuple[int, int] | None = None
    last_replan = -10**9
    terminated = "budget"
    # frontier goals we reached (or gave up on) whose edges persist; keyed
    # by goal cell -> expiry step
    goal_blacklist: dict[tuple[int, int], int] = {}

    def ensure_floor(floor: int, step: int):
        if floor not in maps:
            maps[floor] = FloorMap(floor, world.size, res)
            progress[floor] = FloorProgress()
        graph.ensure_node(floor, maps[floor], step)
        return maps[floor]

    try:
        for step in range(budget):
            fmap = ensure_floor(pose.floor, step)
            prog = progress[pose.floor]
            node = graph.nodes[pose.floor]

            frame = sense(world, pose, cfg.sensor_range, cfg.fov)
            dets = detect_stairs(frame, noise, rng_oracle)
            integrate(fmap, frame.with_detections(dets))
            update_graph(graph, pose, fmap.stair_id, status, step, fmap)

            cov = coverage(fmap, world.floors[pose.floor])
            node.cr = cov.cr
            prog.steps_on_floor += 1
            prog.observe(fmap.covered_cells, prog.steps_on_floor, cfg.area_eps_cells)
            node.done = is_floor_done(node, prog, cfg)

            agent_cell = pose.cell(res)
            e_on_stair = bool(fmap.stair_id[agent_cell[0], agent_cell[1]] > 0)
            g_all = graph.all_visited_and_done()
            new_status = fsm_step(status, node.done, g_all, e_on_stair)
            if new_status is not status:
                if new_status is StatusName.ON_STAIR:
                    edge = _edge_at(graph, pose.floor, agent_cell)
                    if edge is not None:
                        _set_entry_sign(edge, pose, res)
                status = new_status
                follower = None

            record.rows.append(
                StepRow(
                    step=step,
                    floor=pose.floor,
                    x=pose.x,
                    y=pose.y,
                    heading=pose.heading,
                    status=status.value,
                    cr_floor=cov.cr,
                    ca_floor=cov.ca,
                    path_len=path_len,
                    goal_x=active_goal.gx if active_goal else None,
                    goal_y=active_goal.gy if active_goal else None,
                )
            )
            if status is StatusName.ALL_EXPLORED:
                terminated = "all_explored"
                break

            goal_done = follower is not None and (follower.arrived(pose) or follower.give_up)
            if goal_done and active_goal is not None and status is StatusName.EXPLORING_FLOOR:
                # reached (or abandoned) this goal; if its edge persists,
                # keep other frontiers in rotation for a while
                key = active_rep if active_rep is not None else active_goal.cell
                goal_blacklist[key] = step + cfg.goal_blacklist_steps
            need_replan = (
                follower is None
                or goal_done
                or (step - last_replan) >= cfg.replan_every
            )
            if need_replan:
                last_replan = step
                active_goal = None
                active_rep = None
                follower = None
                plan_cell = None
                try:
                    if status is StatusName.EXPLORING_FLOOR:
                        fs = detect_frontiers(fmap, cfg.min_edge_cells)
                        if fs.is_empty:
                            # thin diagonal frontiers fragment under
                            # 4-connectivity; accept small edges before
                            # declaring the floor exhausted
                            fs = detect_frontiers(fmap, 1)
                        if fs.is_empty:
                            raise NoFrontier("frontier set empty")
                        banned = {c for c, exp in goal_blacklist.items() if exp > step}
                        if banned:
                            kept = [e for e in fs.edges if e.rep_cell not in banned]
                            if kept:
                                fs = FrontierSet(cells=fs.cells, edges=kept)
                        obs = build_observation(fmap, pose, window)
                        active_goal, active_rep = policy.explore_goal(fmap, pose, fs, obs, window, step)
                    elif status is StatusName.GOING_TO_STAIR:
                        try:
                            active_goal = nearest_stair_goal(
                                graph, pose, res, window=window, map_size=world.size, issued_at=step
                            )
                        except NoUnvisitedStair:
                            active_goal = _stair_route_goal(
                                graph, pose, res, window, world.size, step
                            )
                            if active_goal is None:
                                log.info("step %d: no reachable unvisited stair; floor %d idles", step, pose.floor)
                    elif status is StatusName.ON_STAIR:
                        edge = _edge_at(graph, pose.floor, agent_cell)
                        if edge is not None:
                            active_goal = on_stair_goal(
                                edge,
                                pose,
                                res,
                                exit_margin_cells=cfg.exit_margin_cells,
                                window=window,
                                map_size=world.size,
                                issued_at=step,
                            )
                            # the issued goal extends past the short edge;
                            # before the transition that side is walled, so
                            # steer the planner at the nearest region cell,
                            # but go straight once the exit is known free
                            gr, gc = active_goal.cell
                            if fmap.explored[gr, gc] != FREE:
                                region = edge.region_on(pose.floor)
                                d2 = (region[:, 0] - gr) ** 2 + (region[:, 1] - gc) ** 2
                                k = int(np.argmin(d2))
                                plan_cell = (int(region[k, 0]), int(region[k, 1]))
                except NoFrontier:
                    prog.no_frontier = True
                if active_goal is not None:
                    target_cell = plan_cell or active_goal.cell
                    path = plan_to_goal(fmap, agent_cell, target_cell, cfg)
                    if path is not None:
                        gx = (target_cell[1] + 0.5) * res
                        gy = (target_cell[0] + 0.5) * res
                        # stair traversal must step onto the far row itself
                        tol = 0.0 if status is StatusName.ON_STAIR else None
                        follower = WaypointFollower(cfg, path, (gx, gy), fmap, arrive_tol=tol)
                    if log.isEnabledFor(logging.DEBUG):
                        log.debug(
                            "step %d replan: status=%s agent=%s goal=%s path=%s cr=%.3f",
                            step,
                            status.value,
                            agent_cell,
                            active_goal.cell,
                            None if path is None else f"{path.length:.2f}m/{len(path.cells)}c",
                            cov.cr,
                        )

            action = None
            if follower is not None and not follower.arrived(pose):
                action = follower.next_action(pose)
                if action is None:
                    follower = None
            if action is None:
                # nothing to execute: rotate in place so the sensor sweeps
                action = MotionCommand.rotate(cfg.rotate_step)
            new_pose = step_agent(
                world,
                pose,
                action,
                tracker,
                max_forward=cfg.forward_step,
                max_rotate=cfg.rotate_step,
            )
            if action.kind == "forward":
                moved = math.hypot(new_pose.x - pose.x, new_pose.y - pose.y)
                path_len += moved
                moved_ok = moved + 1e-6 >= min(action.amount, cfg.forward_step)
                if follower is not None:
                    follower.notify_forward(moved_ok)
            for ev in tracker.pop_events():
                _apply_transition(ev, graph, maps, progress, world, res, new_pose.heading)
                ensure_floor(ev.to_floor, step)
                follower = None
                active_goal = None
            pose = new_pose
    finally:
        policy.close()

    wall = time.perf_counter() - t0
    per_floor = {}
    for floor in range(world.n_floors):
        if floor in maps:
            cov = coverage(maps[floor], world.floors[floor])
            per_floor[floor] = {"cr": cov.cr, "ca": cov.ca}
        else:
            per_floor[floor] = {"cr": 0.0, "ca": 0.0}
    mean_cr = sum(v["cr"] for v in per_floor.values()) / world.n_floors
    ca_total = sum(v["ca"] for v in per_floor.values())
    apl = ca_total / path_len if path_len > 0 else 0.0
    record.summary = {
        "policy": policy_id,
        "seed": seed,
        "budget": budget,
        "world_floors": world.n_floors,
        "per_floor": {str(k): v for k, v in sorted(per_floor.items())},
        "mean_cr": mean_cr,
        "ca_total": ca_total,
        "path_length": path_len,
        "apl": apl,
        "apl_degenerate": path_len == 0.0,
        "sr": 1 if mean_cr > cfg.done_cr else 0,
        "total_steps": len(record.rows),
        "terminated": terminated,
        "nodes": len(graph.nodes),
        "visited_edges": sum(1 for e in graph.edges if e.visited),
        "edges": len(graph.edges),
        "wall_time_s": wall,
    }

    if out_dir is not None:
        _write_outputs(record, graph, maps, out_dir, save_artifacts)
    return record


def _apply_transition(ev, graph, maps, progress, world, res, heading):
    edge = graph.edge_by_link(ev.link_id)
    if edge is not None:
        edge.visited = True
        if edge.floor_b is None:
            edge.floor_b = ev.to_floor if ev.to_floor != edge.floor_a else ev.from_floor
        edge.entry_sign = None
        edge.traverse_heading = (math.cos(heading), math.sin(heading))
    if ev.to_floor not in maps:
        maps[ev.to_floor] = FloorMap(ev.to_floor, world.size, res)
        progress[ev.to_floor] = FloorProgress()
    fmap = maps[ev.to_floor]
    r, c = int(ev.y / res), int(ev.x / res)
    if 0 <= r < fmap.size and 0 <= c < fmap.size:
        fmap.explored[r, c] = FREE
        fmap.stair_id[r, c] = ev.link_id + 1
        if edge is not None:
            arrival = np.asarray([[r, c]], dtype=np.int64)
            existing = edge.regions.get(ev.to_floor)
            if existing is None:
                edge.regions[ev.to_floor] = arrival
    log.info("floor transition via link %d: %d -> %d", ev.link_id, ev.from_floor, ev.to_floor)


def _write_outputs(record: EpisodeRecord, graph, maps, out_dir, save_artifacts: bool):
    import json
    from pathlib import Path

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "episode.csv").write_text(record.csv_text())
    (out / "summary.json").write_text(json.dumps(record.summary, indent=2, sort_keys=True))
    save_topology(graph, out / "topology.json")
    if save_artifacts:
        for fmap in maps.values():
            save_floor_map(fmap, out / "maps")
