"""Score waypoint candidates with a phase-conditioned affordance field.

Builds the map of the one-room scene, composes the exploration field from
its four components, masks candidates too close to obstacles, and writes
the field as CSV plus an SVG heatmap over the floor plan. Then switches to
the acquisition phase and shows how the selected waypoint moves to the bed.

Run from the repository root:  python demos/03_affordance_fields.py
"""

from pathlib import Path

import numpy as np

from semnav.affordance import (
    AffordanceConfig,
    Phase,
    PhaseInputs,
    compose_field,
    directional_point_set,
    field_to_csv,
    safety_mask,
    select_waypoint,
    subsample_trajectory,
)
from semnav.geometry import camera_pose, intrinsics_from_fov
from semnav.plot import render_run_svg
from semnav.pointcloud import PointCloud, voxel_downsample
from semnav.semantic_map import MapConfig, SemanticMap, estimate_floor, integrate_panorama
from semnav.sim.fixtures import one_room_scene
from semnav.sim.render import render_panorama

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

scene = one_room_scene()
position = np.array([1.0, 2.0, 0.8])
frames = render_panorama(scene, camera_pose(position, 0.0), intrinsics_from_fov(96, 96), 12)
smap = SemanticMap.new(MapConfig(interpolation_step=0.1))
smap.z_floor = estimate_floor(frames, camera_pose(position, 0.0), camera_height=0.8)
integrate_panorama(smap, frames, agent_xy=position[:2])

cfg = AffordanceConfig()
candidates = voxel_downsample(smap.navigable, 0.2)
heading_east = 0
inputs = PhaseInputs(
    phase=Phase.EXPLORATION,
    direction_set=directional_point_set(camera_pose(position, 0.0), heading_east, 12, smap.navigable, cfg.cone_half_angle),
    node_set=smap.frontiers,
    frontiers=smap.frontiers,
    history_set=subsample_trajectory([position], cfg.history_spacing, z=smap.z_floor),
)
field = safety_mask(compose_field(candidates, inputs, cfg), smap.obstacles, cfg)
waypoint, score = select_waypoint(field, position)
print(f"exploration: {len(candidates)} candidates, {int(field.masked.sum())} masked")
print(f"exploration waypoint {np.round(waypoint, 2)} with score {score:.2f}")

field_to_csv(field, OUT / "exploration_field.csv")
rows = [
    (p[0], p[1], p[2], s, bool(m))
    for p, s, m in zip(field.candidates.points, field.scores, field.masked)
]
svg = render_run_svg(scene, trajectory=None, graph={}, frontier_points=None, heatmap_rows=rows)
(OUT / "exploration_field.svg").write_text(svg)

# acquisition: pull straight toward the detected bed points
bed_id = scene.class_table()["bed"]
acq = PhaseInputs(
    phase=Phase.TARGET_ACQUISITION,
    direction_set=inputs.direction_set,
    semantic_set=smap.objects[bed_id],
)
acq_field = safety_mask(compose_field(candidates, acq, cfg), smap.obstacles, cfg)
acq_waypoint, acq_score = select_waypoint(acq_field, position)
print(f"acquisition waypoint {np.round(acq_waypoint, 2)} with score {acq_score:.2f}")
print(f"wrote exploration_field.csv and exploration_field.svg under {OUT}")
