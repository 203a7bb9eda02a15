"""Run the full navigation loop on the backtracking benchmark scene.

The agent sweeps the side room and the hallway, returns to the vestibule
node it has already visited, and only then pushes through the inner doorway
to the bed. The episode log and an SVG overview (trajectory, topological
nodes, final frontiers) land in demos/output/.

Run from the repository root:  python demos/04_full_episode.py
"""

import json
from pathlib import Path

from semnav.plot import render_run_svg
from semnav.sim.episode import run_episode
from semnav.sim.fixtures import two_room_config, two_room_spec

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

spec = two_room_spec()
result = run_episode(spec, two_room_config())

print(f"success={result.success}  steps={result.steps}")
print(f"path {result.path_length:.1f} m vs ideal {result.shortest_length:.1f} m, final distance {result.dtg:.2f} m")
print("visit history:", result.graph["history"])
for record in result.records:
    print(
        f"  step {record['step']}: phase={record['phase']:<18} "
        f"next_node={record['decision']['next_node']} "
        f"direction={record['decision']['direction']} nodes={record['node_count']}"
    )

log_path = OUT / "two_room_episode.jsonl"
with open(log_path, "w") as fh:
    for record in result.records:
        fh.write(json.dumps(record, sort_keys=True) + "\n")

svg = render_run_svg(
    spec.scene,
    trajectory=result.trajectory,
    graph=result.graph,
    frontier_points=result.frontier_points,
)
(OUT / "two_room_episode.svg").write_text(svg)
print(f"wrote {log_path.name} and two_room_episode.svg under {OUT}")
