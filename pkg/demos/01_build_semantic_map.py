"""Build a semantic point-cloud map from synthetic panoramas.

Renders two panoramas in a small furnished room, fuses them into the five
map products (scene, per-class objects, navigable, obstacles, frontiers),
and exports the clouds as PLY plus the occupancy grid as PGM for external
viewers.

Run from the repository root:  python demos/01_build_semantic_map.py
"""

from pathlib import Path

from semnav.geometry import camera_pose, intrinsics_from_fov, Pose
from semnav.pointcloud import save_ply
from semnav.semantic_map import MapConfig, SemanticMap, estimate_floor, integrate_panorama, save_pgm
from semnav.sim.fixtures import one_room_scene
from semnav.sim.render import render_panorama

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

scene = one_room_scene()
intrinsics = intrinsics_from_fov(128, 128, 90.0)
config = MapConfig(interpolation_step=0.1)
smap = SemanticMap.new(config)

# First panorama from the room center; a second one near the bed fills in
# occluded floor. Twelve headings give full 360 degree coverage.
viewpoints = [(1.0, 2.0, 0.8), (2.2, 1.2, 0.8)]
for k, position in enumerate(viewpoints):
    frames = render_panorama(scene, camera_pose(position, 0.0), intrinsics, num_headings=12)
    if smap.z_floor is None:
        smap.z_floor = estimate_floor(frames, camera_pose(position, 0.0), camera_height=position[2])
        print(f"estimated floor height: {smap.z_floor:+.3f} m")
    integrate_panorama(smap, frames, agent_xy=position[:2])
    print(
        f"after panorama {k}: scene={len(smap.scene)} pts, "
        f"navigable={len(smap.navigable)}, obstacles={len(smap.obstacles)}, "
        f"frontiers={len(smap.frontiers)}"
    )

names = {idx: name for name, idx in scene.class_table().items()}
for cls, cloud in sorted(smap.objects.items()):
    print(f"object cloud '{names[cls]}': {len(cloud)} pts")

save_ply(smap.scene, OUT / "scene.ply")
save_ply(smap.navigable, OUT / "navigable.ply")
save_ply(smap.obstacles, OUT / "obstacles.ply")
save_pgm(smap.grid, OUT / "grid.pgm")
print(f"wrote scene.ply / navigable.ply / obstacles.ply / grid.pgm under {OUT}")
