"""The full waypoint-driven episode loop.

Each waypoint step: render a panorama, fuse it into the semantic map, place
or merge a topological node, query the decision oracle with the serialized
graph, pick the phase, compose and mask the affordance field, select a
waypoint, plan a grid path, and teleport along it in fixed sub-steps. The
episode stops successfully when, in the acquisition phase, the agent comes
within the success distance of a detected target point (success is then
verified against the true scene geometry), or fails when the step budget
runs out.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..affordance import (
    AffordanceConfig,
    Phase,
    PhaseInputs,
    compose_field,
    directional_point_set,
    rank_candidates,
    safety_mask,
    subsample_trajectory,
)
from ..errors import UnknownNodeError
from ..geometry import CameraIntrinsics, camera_pose, intrinsics_from_fov
from ..oracle import HeadingSummary, OracleRequest, ScriptedOracle, classify_room
from ..pointcloud import PointCloud, voxel_downsample
from ..semantic_map import (
    STRUCTURE,
    UNLABELED,
    MapConfig,
    SemanticMap,
    estimate_floor,
    integrate_frame,
    refresh_derived,
)
from ..topo_graph import (
    TopoConfig,
    TopoGraph,
    create_node,
    graph_to_json,
    record_visit,
    refresh_attributes,
    serialize_text,
    try_merge,
)
from .planner import ground_truth_shortest_path, plan_path
from .render import render_panorama
from .scene import EpisodeSpec


@dataclass(frozen=True)
class AgentConfig:
    """Component configuration shared by every episode of a run.

    The episode planner needs a connected free region on the grid, so the
    default map config interpolates bridge points at the grid resolution
    rather than the coarser library default.
    """

    map_config: MapConfig = MapConfig(interpolation_step=0.1)
    topo_config: TopoConfig = TopoConfig()
    affordance_config: AffordanceConfig = AffordanceConfig()
    intrinsics: CameraIntrinsics = intrinsics_from_fov(64, 64, 90.0)
    decision_mode: str = "combined"     # combined | vlm-only | detector-only
    ablate_frontiers: bool = False      # omit frontier counts from the topo text
    ablate_rooms: bool = False          # blank room labels in the topo text
    ablate_objects: bool = False        # blank object lists in the topo text
    use_history: bool = True            # feed trajectory history to the field
    inflation: float = 0.1              # planner obstacle clearance, m
    candidate_spacing: float = 0.2      # waypoint candidate downsampling, m
    substep: float = 0.25               # teleport spacing along paths, m
    replan_limit: int = 25              # candidates tried before frontier fallback
    min_hop: float = 0.5                # skip waypoints closer than this to the agent

    def __post_init__(self):
        if self.decision_mode not in ("combined", "vlm-only", "detector-only"):
            raise ValueError(f"unknown decision mode {self.decision_mode!r}")


@dataclass(eq=False)
class EpisodeResult:
    success: bool
    path_length: float
    shortest_length: float
    dtg: float
    steps: int
    trajectory: np.ndarray        # (T, 3) agent positions
    records: list                 # one dict per waypoint step
    graph: dict                   # final topological graph (nodes + history)
    frontier_points: np.ndarray   # (F, 3) frontiers at the final step
    events: list = field(default_factory=list)
    final_field: object = None    # last masked AffordanceField when requested


def panorama_summary(frames, id_to_name: dict, max_depth: float) -> list:
    """Per-heading visible object classes and mean free depth.

    Free depth is the mean over the central quarter of the image (floor and
    flanking walls would otherwise flatten the signal); invalid pixels count
    as fully open (the depth ceiling), so empty directions read as deep.
    """
    summary = []
    for frame in frames:
        labels = frame.labels
        classes = sorted(
            id_to_name[int(c)]
            for c in np.unique(labels)
            if int(c) not in (UNLABELED, STRUCTURE) and int(c) in id_to_name
        )
        h, w = frame.depth.shape
        patch = frame.depth[3 * h // 8 : 5 * h // 8, 3 * w // 8 : 5 * w // 8]
        patch = np.where(patch > 0, patch, max_depth)
        summary.append(
            HeadingSummary(
                heading=frame.heading_index,
                classes=tuple(classes),
                free_depth=float(round(patch.mean(), 6)),
            )
        )
    return summary


def _walk_path(waypoints, spacing: float):
    """(position, arc_step) samples spaced `spacing` apart along a polyline.

    Every sample lies exactly on the polyline (no corner cutting); the final
    vertex is always included.
    """
    pts = [np.asarray(w, dtype=float) for w in waypoints]
    segs = [(a, b, float(np.linalg.norm(b - a))) for a, b in zip(pts, pts[1:])]
    total = sum(s[2] for s in segs)
    if total == 0:
        return []
    marks = [spacing * k for k in range(1, int(total / spacing) + 1)]
    if not marks or total - marks[-1] > 1e-9:
        marks.append(total)
    samples = []
    seg_idx, seg_start = 0, 0.0
    prev_mark = 0.0
    for mark in marks:
        while seg_idx < len(segs) and seg_start + segs[seg_idx][2] < mark - 1e-12:
            seg_start += segs[seg_idx][2]
            seg_idx += 1
        a, b, seg_len = segs[min(seg_idx, len(segs) - 1)]
        frac = (mark - seg_start) / seg_len if seg_len > 0 else 0.0
        samples.append((a + (b - a) * min(frac, 1.0), mark - prev_mark))
        prev_mark = mark
    return samples


def _detected_distance(position, target_cloud: PointCloud | None) -> float:
    if target_cloud is None or len(target_cloud) == 0:
        return math.inf
    d = np.linalg.norm(target_cloud.points[:, :2] - position[:2], axis=1)
    return float(d.min())


def _max_depth_heading(summary) -> int:
    return max(summary, key=lambda h: (h.free_depth, -h.heading)).heading


def run_episode(
    spec: EpisodeSpec,
    config: AgentConfig | None = None,
    oracle=None,
    keep_final_field: bool = False,
) -> EpisodeResult:
    """Run one episode and return its result; failures are results, not errors."""
    config = config or AgentConfig()
    oracle = oracle or ScriptedOracle()
    scene = spec.scene
    id_to_name = scene.id_to_name()
    name_to_id = scene.class_table()
    target_id = name_to_id.get(spec.target)
    camera_height = float(spec.start.position[2])

    smap = SemanticMap.new(config.map_config)
    graph = TopoGraph()
    position = spec.start.position.copy()
    trajectory = [position.copy()]
    path_length = 0.0
    records, events = [], []
    believed = False
    steps_used = 0
    final_field = None

    shortest = ground_truth_shortest_path(
        scene, position[:2], spec.target, spec.success_distance,
        cell=config.map_config.grid_resolution / 2.0,
    )

    for step in range(spec.max_steps):
        step_start = position.copy()
        frames = render_panorama(
            scene, camera_pose(position, 0.0), config.intrinsics,
            spec.num_headings, config.map_config.max_depth,
        )
        if smap.z_floor is None:
            smap.z_floor = estimate_floor(frames, camera_pose(position, 0.0), camera_height)
        for frame in frames:
            integrate_frame(smap, frame, refresh=False)
        refresh_derived(smap, position[:2])

        summary = panorama_summary(frames, id_to_name, config.map_config.max_depth)
        room = classify_room(summary)
        node_id = create_node(graph, position[:2], smap, room, step, config.topo_config)
        record_visit(graph, node_id)
        try_merge(graph, smap, config.topo_config)
        refresh_attributes(graph, smap, config.topo_config)
        current_id = graph.resolve(node_id)

        topo_text = serialize_text(
            graph, current_id, spec.target, class_names=id_to_name,
            include_frontiers=not config.ablate_frontiers,
            include_rooms=not config.ablate_rooms,
            include_objects=not config.ablate_objects,
        )
        request = OracleRequest(
            topo_text=topo_text, target=spec.target,
            panorama=summary, history=list(graph.history),
        )
        decision = oracle.decide(request)

        target_cloud = smap.objects.get(target_id) if target_id is not None else None
        detector_sees = target_cloud is not None and len(target_cloud) > 0
        direction = decision.direction
        if config.decision_mode == "detector-only":
            direction = _max_depth_heading(summary)
            phase = Phase.TARGET_ACQUISITION if detector_sees else Phase.EXPLORATION
        elif config.decision_mode == "vlm-only":
            phase = Phase.TARGET_ACQUISITION if decision.found else Phase.EXPLORATION
        else:
            phase = (
                Phase.TARGET_ACQUISITION
                if decision.found and detector_sees
                else Phase.EXPLORATION
            )

        if phase is Phase.TARGET_ACQUISITION and _detected_distance(position, target_cloud) <= spec.success_distance:
            believed = True
            break

        steps_used = step + 1
        if len(smap.navigable) == 0 or smap.grid is None:
            events.append(f"step {step}: no navigable space observed; stopping")
            break

        candidates = voxel_downsample(smap.navigable, config.candidate_spacing)
        direction_set = directional_point_set(
            camera_pose(position, 0.0), direction, spec.num_headings,
            smap.navigable, config.affordance_config.cone_half_angle,
        )
        node_set = PointCloud.empty()
        try:
            chosen = graph.node_by_id(graph.resolve(decision.next_node))
        except UnknownNodeError:
            chosen = None
        if chosen is None and graph.nodes:
            chosen = min(graph.nodes, key=lambda n: (-n.frontier_count, n.id))
        if chosen is not None and len(smap.frontiers):
            d = np.linalg.norm(smap.frontiers.points[:, :2] - chosen.position, axis=1)
            node_set = PointCloud(smap.frontiers.points[d < config.topo_config.node_radius])
        history_set = (
            subsample_trajectory(trajectory, config.affordance_config.history_spacing, z=smap.z_floor)
            if config.use_history
            else PointCloud.empty()
        )
        semantic_set = target_cloud if (phase is Phase.TARGET_ACQUISITION and detector_sees) else PointCloud.empty()
        inputs = PhaseInputs(
            phase=phase,
            direction_set=direction_set,
            node_set=node_set,
            history_set=history_set,
            semantic_set=semantic_set,
            frontiers=smap.frontiers,
            obstacles=smap.obstacles,
        )
        fld = compose_field(candidates, inputs, config.affordance_config)
        fld = safety_mask(fld, smap.obstacles, config.affordance_config)
        if keep_final_field:
            final_field = fld

        order = rank_candidates(fld, position)
        # Stall guard: a waypoint closer than one panorama hop cannot change
        # the next observation, so the field would repeat verbatim.
        hop = np.linalg.norm(fld.candidates.points[order, :2] - position[:2], axis=1)
        order = order[hop >= config.min_hop]
        plan = None
        waypoint = None
        replans = 0
        for idx in order[: config.replan_limit]:
            attempt = plan_path(smap.grid, position[:2], fld.candidates.points[idx][:2], config.inflation)
            if attempt is not None:
                plan = attempt
                waypoint = fld.candidates.points[idx].copy()
                break
            replans += 1
            events.append(f"step {step}: replan past candidate {int(idx)}")
        if plan is None and len(smap.frontiers):
            d = np.linalg.norm(smap.frontiers.points[:, :2] - position[:2], axis=1)
            nearest = [i for i in np.argsort(d, kind="stable") if d[i] >= config.min_hop][:20]
            for idx in nearest:
                point = smap.frontiers.points[idx]
                attempt = plan_path(smap.grid, position[:2], point[:2], config.inflation)
                if attempt is not None:
                    plan = attempt
                    waypoint = point.copy()
                    events.append(f"step {step}: fell back to nearest reachable frontier")
                    break
        if plan is None:
            events.append(f"step {step}: no reachable waypoint; stopping")
            break

        stop_mid_path = False
        for sample, arc in _walk_path(plan.waypoints, config.substep):
            position = np.array([sample[0], sample[1], camera_height])
            path_length += arc
            trajectory.append(position.copy())
            if phase is Phase.TARGET_ACQUISITION and _detected_distance(position, target_cloud) <= spec.success_distance:
                stop_mid_path = True
                break

        records.append(
            {
                "step": step,
                "pose": {
                    "position": [round(float(v), 6) for v in step_start],
                    "orientation": [1.0, 0.0, 0.0, 0.0],
                },
                "phase": phase.value,
                "decision": {
                    "next_node": decision.next_node,
                    "direction": decision.direction,
                    "found": int(decision.found),
                },
                "waypoint": [round(float(v), 6) for v in waypoint],
                "node_count": len(graph.nodes),
                "frontier_count": len(smap.frontiers),
                "replans": replans,
            }
        )
        if stop_mid_path:
            believed = True
            break

    dtg = scene.distance_to_class(position[:2], spec.target)
    success = believed and dtg <= spec.success_distance
    return EpisodeResult(
        success=success,
        path_length=path_length,
        shortest_length=shortest,
        dtg=dtg,
        steps=steps_used,
        trajectory=np.array(trajectory),
        records=records,
        graph=graph_to_json(graph, class_names=id_to_name),
        frontier_points=smap.frontiers.points.copy(),
        events=events,
        final_field=final_field,
    )
