"""Grow, merge, and serialize a topological memory graph.

Walks three viewpoints through the two-room scene, creating one node per
stop. The third stop lands close to the first, so the merge rule fuses them
into the earlier node and rewrites the visit history. The serialized text is
exactly what the decision oracle consumes.

Run from the repository root:  python demos/02_topological_memory.py
"""

from semnav.geometry import camera_pose, intrinsics_from_fov
from semnav.oracle import classify_room
from semnav.semantic_map import MapConfig, SemanticMap, estimate_floor, integrate_panorama
from semnav.sim.episode import panorama_summary
from semnav.sim.fixtures import two_room_scene
from semnav.sim.render import render_panorama
from semnav.topo_graph import TopoConfig, TopoGraph, create_node, record_visit, refresh_attributes, serialize_text, try_merge

scene = two_room_scene()
intrinsics = intrinsics_from_fov(96, 96, 90.0)
config = MapConfig(interpolation_step=0.1)
topo = TopoConfig(node_radius=2.0, merge_distance=1.0)
smap = SemanticMap.new(config)
graph = TopoGraph()
names = scene.id_to_name()

stops = [(4.8, 1.0), (9.5, 1.0), (5.2, 1.3)]  # the last stop returns near the first
for step, (x, y) in enumerate(stops):
    frames = render_panorama(scene, camera_pose((x, y, 0.8), 0.0), intrinsics, num_headings=12)
    if smap.z_floor is None:
        smap.z_floor = estimate_floor(frames, camera_pose((x, y, 0.8), 0.0), camera_height=0.8)
    integrate_panorama(smap, frames, agent_xy=(x, y))
    room = classify_room(panorama_summary(frames, names, config.max_depth))
    node_id = create_node(graph, (x, y), smap, room, step, topo)
    record_visit(graph, node_id)
    merges = try_merge(graph, smap, topo)
    refresh_attributes(graph, smap, topo)
    print(f"stop {step} at ({x:.1f},{y:.1f}): node {node_id}, room={room}, merges={merges}")

print("\nvisit history (merged ids rewritten):", graph.history)
print("\nserialized map, as the oracle sees it:\n")
print(serialize_text(graph, graph.resolve(node_id), "bed", class_names=names))
