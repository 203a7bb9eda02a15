"""Topological memory graph: node lifecycle, merging, and text serialization.

Nodes summarize visited regions with a 2D position, nearby object classes,
a room label, and a live frontier count. Nearby nodes connected by a clear
line of sight merge into the earlier node. The graph also keeps the ordered
visit history, and serializes to a line-oriented text format consumed by the
decision oracle.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from .errors import UnknownNodeError
from .semantic_map import SemanticMap


@dataclass(frozen=True)
class TopoConfig:
    node_radius: float = 2.0     # neighborhood radius for node attributes, m
    merge_distance: float = 1.0  # max separation of mergeable nodes, m

    def __post_init__(self):
        if self.node_radius <= 0 or self.merge_distance <= 0:
            raise ValueError("radii must be positive")
        if self.merge_distance > 2 * self.node_radius:
            raise ValueError("merge_distance must not exceed twice node_radius")


@dataclass(eq=False)
class TopoNode:
    id: int
    position: np.ndarray        # (2,) world xy, meters
    objects: set                # class ids within node_radius
    room: str
    frontier_count: int
    created_step: int

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float).reshape(2)


@dataclass(eq=False)
class TopoGraph:
    nodes: list = field(default_factory=list)
    history: list = field(default_factory=list)       # visited node ids, in order
    redirects: dict = field(default_factory=dict)     # absorbed id -> kept id
    next_id: int = 1

    def node_by_id(self, node_id: int) -> TopoNode | None:
        for node in self.nodes:
            if node.id == node_id:
                return node
        return None

    def resolve(self, node_id: int) -> int:
        """Follow merge redirects to the live id; raises for unknown ids."""
        seen = set()
        while node_id in self.redirects and node_id not in seen:
            seen.add(node_id)
            node_id = self.redirects[node_id]
        if self.node_by_id(node_id) is None:
            raise UnknownNodeError(f"node id {node_id} is unknown")
        return node_id


def _neighborhood_attributes(position, smap: SemanticMap, config: TopoConfig):
    """Object classes and frontier count within node_radius of a 2D position.

    Distances are measured in the x-y plane; node elevation is undefined.
    """
    pos = np.asarray(position, dtype=float).reshape(2)
    objects = set()
    for cls in sorted(smap.objects):
        pts = smap.objects[cls].points
        if len(pts) and np.min(np.linalg.norm(pts[:, :2] - pos, axis=1)) < config.node_radius:
            objects.add(cls)
    frontier_count = 0
    if len(smap.frontiers):
        d = np.linalg.norm(smap.frontiers.points[:, :2] - pos, axis=1)
        frontier_count = int(np.sum(d < config.node_radius))
    return objects, frontier_count


def create_node(graph: TopoGraph, position, smap: SemanticMap, room: str, step: int,
                config: TopoConfig) -> int:
    """Append a node at `position` with attributes computed from the map.

    Returns the new node id. Ids are never reused, even after merges.
    """
    objects, frontier_count = _neighborhood_attributes(position, smap, config)
    node = TopoNode(
        id=graph.next_id,
        position=np.asarray(position, dtype=float).reshape(2),
        objects=objects,
        room=room,
        frontier_count=frontier_count,
        created_step=step,
    )
    graph.nodes.append(node)
    graph.next_id += 1
    return node.id


def line_of_sight_clear(a, b, smap: SemanticMap, half_width: float | None = None) -> bool:
    """True if no obstacle point blocks the straight 2D corridor from a to b.

    A point blocks when its z lies inside [z_floor, z_floor + ceiling_offset]
    and its x-y distance to the segment is at most `half_width` (the corridor
    is closed; default half-width is one voxel).
    """
    if half_width is None:
        half_width = smap.config.voxel_size
    obs = smap.obstacles.points
    if len(obs) == 0 or smap.z_floor is None:
        return True
    z = obs[:, 2]
    band = (z >= smap.z_floor) & (z <= smap.z_floor + smap.config.ceiling_offset)
    if not band.any():
        return True
    pts = obs[band, :2]
    a = np.asarray(a, dtype=float).reshape(2)
    b = np.asarray(b, dtype=float).reshape(2)
    seg = b - a
    seg_len_sq = float(seg @ seg)
    if seg_len_sq == 0.0:
        dists = np.linalg.norm(pts - a, axis=1)
    else:
        t = np.clip((pts - a) @ seg / seg_len_sq, 0.0, 1.0)
        dists = np.linalg.norm(pts - (a + t[:, None] * seg), axis=1)
    return not bool(np.any(dists <= half_width))


def try_merge(graph: TopoGraph, smap: SemanticMap, config: TopoConfig) -> list[tuple[int, int]]:
    """Merge close, mutually visible node pairs until no pair qualifies.

    Pairs are scanned lowest-id-first; the lower id and its room survive, the
    position becomes the midpoint, and the merged node's objects and frontier
    count are recomputed from the map. History entries naming the absorbed id
    are redirected to the kept id. Returns the (kept, absorbed) pairs in the
    order they merged.
    """
    merges = []
    while True:
        nodes = sorted(graph.nodes, key=lambda n: n.id)
        merged = False
        for ai in range(len(nodes)):
            for bi in range(ai + 1, len(nodes)):
                keep, absorb = nodes[ai], nodes[bi]
                if np.linalg.norm(keep.position - absorb.position) >= config.merge_distance:
                    continue
                if not line_of_sight_clear(keep.position, absorb.position, smap):
                    continue
                keep.position = (keep.position + absorb.position) / 2.0
                keep.objects, keep.frontier_count = _neighborhood_attributes(
                    keep.position, smap, config
                )
                graph.nodes.remove(absorb)
                graph.redirects[absorb.id] = keep.id
                graph.history = [keep.id if h == absorb.id else h for h in graph.history]
                merges.append((keep.id, absorb.id))
                merged = True
                break
            if merged:
                break
        if not merged:
            return merges


def refresh_attributes(graph: TopoGraph, smap: SemanticMap, config: TopoConfig) -> TopoGraph:
    """Recompute every node's objects and frontier count against the current map."""
    for node in graph.nodes:
        node.objects, node.frontier_count = _neighborhood_attributes(node.position, smap, config)
    return graph


def record_visit(graph: TopoGraph, node_id: int) -> TopoGraph:
    """Append a visit to the history; absorbed ids resolve to their kept node."""
    graph.history.append(graph.resolve(node_id))
    return graph


def serialize_text(
    graph: TopoGraph,
    current_id: int | None,
    target: str,
    class_names: dict | None = None,
    include_frontiers: bool = True,
    include_rooms: bool = True,
    include_objects: bool = True,
) -> str:
    """Deterministic text form of the graph, one NODE line per node by id.

    Format (coordinates rounded to two decimals, object names sorted):

        NODE <id> pos=(<x>,<y>) room=<room> objects=[a,b] frontiers=<f>
        HISTORY <id,id,...>
        CURRENT <id>
        TARGET <class>

    The include_* switches blank single attributes: frontiers are omitted,
    rooms read "unknown", objects read "[]".
    """
    lines = []
    for node in sorted(graph.nodes, key=lambda n: n.id):
        if include_objects:
            if class_names:
                names = sorted(class_names.get(c, str(c)) for c in node.objects)
            else:
                names = [str(c) for c in sorted(node.objects)]
        else:
            names = []
        room = node.room if include_rooms else "unknown"
        line = (
            f"NODE {node.id} pos=({node.position[0]:.2f},{node.position[1]:.2f}) "
            f"room={room} objects=[{','.join(names)}]"
        )
        if include_frontiers:
            line += f" frontiers={node.frontier_count}"
        lines.append(line)
    lines.append(("HISTORY " + ",".join(str(h) for h in graph.history)).rstrip())
    lines.append(f"CURRENT {current_id if current_id is not None else ''}".rstrip())
    lines.append(f"TARGET {target}")
    return "\n".join(lines) + "\n"


_NODE_RE = re.compile(
    r"^NODE (\d+) pos=\((-?[0-9.]+),(-?[0-9.]+)\) room=(.*?) "
    r"objects=\[(.*?)\](?: frontiers=(\d+))?$"
)


@dataclass
class ParsedNode:
    id: int
    position: tuple
    room: str
    objects: list
    frontier_count: int


@dataclass
class ParsedTopo:
    nodes: list
    history: list
    current: int | None
    target: str

    def node_ids(self) -> list:
        return [n.id for n in self.nodes]


def parse_topo_text(text: str) -> ParsedTopo:
    """Parse the serialized form back into a plain structure.

    Omitted frontier counts read as zero; the parser accepts room labels and
    object names containing spaces (but not commas or brackets).
    """
    nodes, history, current, target = [], [], None, ""
    for line in text.splitlines():
        line = line.rstrip()
        if not line:
            continue
        if line.startswith("NODE "):
            m = _NODE_RE.match(line)
            if not m:
                raise ValueError(f"unparseable NODE line: {line!r}")
            objects = [s for s in m.group(5).split(",") if s] if m.group(5) else []
            nodes.append(
                ParsedNode(
                    id=int(m.group(1)),
                    position=(float(m.group(2)), float(m.group(3))),
                    room=m.group(4),
                    objects=objects,
                    frontier_count=int(m.group(6)) if m.group(6) is not None else 0,
                )
            )
        elif line.startswith("HISTORY"):
            rest = line[len("HISTORY"):].strip()
            history = [int(s) for s in rest.split(",") if s]
        elif line.startswith("CURRENT"):
            rest = line[len("CURRENT"):].strip()
            current = int(rest) if rest else None
        elif line.startswith("TARGET "):
            target = line[len("TARGET "):]
    return ParsedTopo(nodes=nodes, history=history, current=current, target=target)


def graph_to_json(graph: TopoGraph, class_names: dict | None = None) -> dict:
    """Graph as a JSON-ready dict: a nodes array plus the visit history."""
    nodes = []
    for node in sorted(graph.nodes, key=lambda n: n.id):
        if class_names:
            objects = sorted(class_names.get(c, str(c)) for c in node.objects)
        else:
            objects = sorted(node.objects)
        nodes.append(
            {
                "id": node.id,
                "position": [round(float(node.position[0]), 6), round(float(node.position[1]), 6)],
                "room": node.room,
                "objects": objects,
                "frontiers": node.frontier_count,
                "created_step": node.created_step,
            }
        )
    return {"nodes": nodes, "history": list(graph.history)}
