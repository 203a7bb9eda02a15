"""Declarative box-world scenes and episode specifications.

A scene is an axis-aligned floor plan: rectangular bounds, wall boxes, and
labeled object boxes, with the floor at z = 0. Scenes round-trip through a
small JSON schema and can be generated procedurally from a seed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from ..geometry import Pose, camera_pose

BOUNDS_WALL_HEIGHT = 3.0
BOUNDS_WALL_THICKNESS = 0.2
FLOOR_THICKNESS = 0.2

# Object classes the procedural generator draws from.
OBJECT_PALETTE = ("bed", "chair", "oven", "plant", "sofa", "table", "toilet", "tv")


@dataclass(frozen=True, eq=False)
class Box:
    """Axis-aligned box with strictly positive extents."""

    min_corner: np.ndarray
    max_corner: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.min_corner, dtype=float).reshape(3)
        hi = np.asarray(self.max_corner, dtype=float).reshape(3)
        if not np.all(hi > lo):
            raise ValueError(f"box extents must be positive: {lo} .. {hi}")
        object.__setattr__(self, "min_corner", lo)
        object.__setattr__(self, "max_corner", hi)

    @staticmethod
    def from_list(values) -> "Box":
        v = [float(x) for x in values]
        return Box(np.array(v[:3]), np.array(v[3:6]))

    def to_list(self) -> list:
        return [*map(float, self.min_corner), *map(float, self.max_corner)]

    def contains(self, point) -> bool:
        p = np.asarray(point, dtype=float)
        return bool(np.all(p > self.min_corner) and np.all(p < self.max_corner))

    def footprint_distance(self, xy) -> float:
        """2D distance from a point to the box footprint (0 inside)."""
        x, y = float(xy[0]), float(xy[1])
        dx = max(self.min_corner[0] - x, 0.0, x - self.max_corner[0])
        dy = max(self.min_corner[1] - y, 0.0, y - self.max_corner[1])
        return math.hypot(dx, dy)


@dataclass(eq=False)
class Scene:
    """Bounds, walls, and labeled objects; floor at z = 0 by convention."""

    bounds: tuple                      # (x0, y0, x1, y1)
    walls: list = field(default_factory=list)     # Box
    objects: list = field(default_factory=list)   # (class name, Box)

    def __post_init__(self):
        x0, y0, x1, y1 = map(float, self.bounds)
        if not (x1 > x0 and y1 > y0):
            raise ValueError("bounds must have positive extent")
        self.bounds = (x0, y0, x1, y1)
        for box in self.walls:
            self._check_inside(box, "wall")
        for name, box in self.objects:
            if not name:
                raise ValueError("object class name must be non-empty")
            self._check_inside(box, name)

    def _check_inside(self, box: Box, what: str):
        x0, y0, x1, y1 = self.bounds
        if (
            box.min_corner[0] < x0 - 1e-9 or box.min_corner[1] < y0 - 1e-9
            or box.max_corner[0] > x1 + 1e-9 or box.max_corner[1] > y1 + 1e-9
        ):
            raise ValueError(f"{what} box outside scene bounds")

    # -- semantics ---------------------------------------------------------
    def class_names(self) -> list:
        return sorted({name for name, _ in self.objects})

    def class_table(self) -> dict:
        """Class name -> positive label id, in sorted-name order."""
        return {name: idx + 1 for idx, name in enumerate(self.class_names())}

    def id_to_name(self) -> dict:
        return {idx: name for name, idx in self.class_table().items()}

    def boxes_of_class(self, name: str) -> list:
        return [box for cls, box in self.objects if cls == name]

    def distance_to_class(self, xy, name: str) -> float:
        """2D distance to the nearest footprint of a class; inf if absent."""
        boxes = self.boxes_of_class(name)
        if not boxes:
            return math.inf
        return min(box.footprint_distance(xy) for box in boxes)

    # -- geometry ----------------------------------------------------------
    def structural_boxes(self) -> list:
        """Floor slab and the four bounds walls (outside the bounds rect)."""
        x0, y0, x1, y1 = self.bounds
        t, h = BOUNDS_WALL_THICKNESS, BOUNDS_WALL_HEIGHT
        return [
            Box((x0 - t, y0 - t, -FLOOR_THICKNESS), (x1 + t, y1 + t, 0.0)),
            Box((x0 - t, y0 - t, 0.0), (x0, y1 + t, h)),
            Box((x1, y0 - t, 0.0), (x1 + t, y1 + t, h)),
            Box((x0, y0 - t, 0.0), (x1, y0, h)),
            Box((x0, y1, 0.0), (x1, y1 + t, h)),
        ]

    def solid_geometry(self):
        """(mins (B,3), maxs (B,3), labels (B,)) of every renderable box.

        Structural geometry and walls carry label 0; objects carry their
        class-table id.
        """
        table = self.class_table()
        boxes, labels = [], []
        for box in self.structural_boxes():
            boxes.append(box)
            labels.append(0)
        for box in self.walls:
            boxes.append(box)
            labels.append(0)
        for name, box in self.objects:
            boxes.append(box)
            labels.append(table[name])
        mins = np.array([b.min_corner for b in boxes])
        maxs = np.array([b.max_corner for b in boxes])
        return mins, maxs, np.array(labels, dtype=np.int64)

    def collides(self, point) -> bool:
        """True when the point is inside a wall or object box."""
        for box in self.walls:
            if box.contains(point):
                return True
        for _, box in self.objects:
            if box.contains(point):
                return True
        return False

    def inside_bounds(self, xy, margin: float = 0.0) -> bool:
        x0, y0, x1, y1 = self.bounds
        return x0 + margin <= xy[0] <= x1 - margin and y0 + margin <= xy[1] <= y1 - margin

    def free_at(self, xy, clearance: float) -> bool:
        """Clear of every wall/object footprint by `clearance`, inside bounds."""
        if not self.inside_bounds(xy, margin=clearance):
            return False
        for box in self.walls:
            if box.footprint_distance(xy) < clearance:
                return False
        for _, box in self.objects:
            if box.footprint_distance(xy) < clearance:
                return False
        return True

    # -- serialization -----------------------------------------------------
    def to_json(self) -> dict:
        return {
            "bounds": list(self.bounds),
            "walls": [box.to_list() for box in self.walls],
            "objects": [{"class": name, "box": box.to_list()} for name, box in self.objects],
        }

    @staticmethod
    def from_json(data: dict) -> "Scene":
        return Scene(
            bounds=tuple(data["bounds"]),
            walls=[Box.from_list(w) for w in data.get("walls", [])],
            objects=[(o["class"], Box.from_list(o["box"])) for o in data.get("objects", [])],
        )

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def load_scene(path) -> Scene:
    with open(path, "r", encoding="utf-8") as fh:
        return Scene.from_json(json.load(fh))


@dataclass(eq=False)
class EpisodeSpec:
    """One navigation task: a scene, a start pose, and a target class."""

    scene: Scene
    start: Pose
    target: str
    max_steps: int = 20
    success_distance: float = 1.0
    num_headings: int = 12
    seed: int = 0

    def __post_init__(self):
        if self.success_distance <= 0:
            raise ValueError("success_distance must be positive")
        if self.num_headings < 1:
            raise ValueError("num_headings must be at least 1")


def sample_free_position(scene: Scene, rng, clearance: float = 0.5, camera_height: float = 0.8):
    """Random (x, y, camera_height) with the given footprint clearance."""
    x0, y0, x1, y1 = scene.bounds
    for _ in range(500):
        xy = (rng.uniform(x0, x1), rng.uniform(y0, y1))
        if scene.free_at(xy, clearance):
            return np.array([xy[0], xy[1], camera_height])
    raise ValueError("could not sample a free position; scene too cluttered")


def make_procedural_scene(seed: int) -> Scene:
    """Seeded random single-story scene: bounds, maybe one divider wall with a
    doorway, and a handful of labeled object boxes."""
    rng = np.random.default_rng(seed)
    width = float(rng.uniform(6.0, 9.0))
    depth = float(rng.uniform(6.0, 9.0))
    walls = []
    if rng.random() < 0.5:
        # One divider with a 1.2 m doorway, vertical or horizontal.
        if rng.random() < 0.5:
            x = float(rng.uniform(2.5, width - 2.5))
            door = float(rng.uniform(0.8, depth - 2.0))
            walls = [
                Box((x - 0.1, 0.0, 0.0), (x + 0.1, door, BOUNDS_WALL_HEIGHT)),
                Box((x - 0.1, door + 1.2, 0.0), (x + 0.1, depth, BOUNDS_WALL_HEIGHT)),
            ]
        else:
            y = float(rng.uniform(2.5, depth - 2.5))
            door = float(rng.uniform(0.8, width - 2.0))
            walls = [
                Box((0.0, y - 0.1, 0.0), (door, y + 0.1, BOUNDS_WALL_HEIGHT)),
                Box((door + 1.2, y - 0.1, 0.0), (width, y + 0.1, BOUNDS_WALL_HEIGHT)),
            ]
        walls = [w for w in walls if np.all(w.max_corner > w.min_corner)]
    objects = []
    count = int(rng.integers(3, 6))
    classes = list(rng.choice(OBJECT_PALETTE, size=count, replace=True))
    for name in classes:
        for _ in range(60):
            w = float(rng.uniform(0.4, 1.2))
            d = float(rng.uniform(0.4, 1.2))
            h = float(rng.uniform(0.4, 0.9))
            x = float(rng.uniform(0.3, width - 0.3 - w))
            y = float(rng.uniform(0.3, depth - 0.3 - d))
            box = Box((x, y, 0.0), (x + w, y + d, h))
            center = ((x + x + w) / 2, (y + y + d) / 2)
            near_wall = any(wb.footprint_distance(center) < 1.2 for wb in walls)
            overlaps = any(
                ob.footprint_distance(center) < max(w, d) * 0.5 + 0.8 for _, ob in objects
            )
            if not near_wall and not overlaps:
                objects.append((str(name), box))
                break
    if not objects:
        objects.append(("table", Box((width / 2 - 0.4, depth / 2 - 0.4, 0.0),
                                     (width / 2 + 0.4, depth / 2 + 0.4, 0.6))))
    return Scene(bounds=(0.0, 0.0, width, depth), walls=walls, objects=objects)


def make_procedural_spec(seed: int, max_steps: int = 12, camera_height: float = 0.8) -> EpisodeSpec:
    """Seeded scene + start + target; the target class is always present."""
    scene = make_procedural_scene(seed)
    rng = np.random.default_rng(seed + 10_000)
    start = sample_free_position(scene, rng, clearance=0.6, camera_height=camera_height)
    target = str(rng.choice(scene.class_names()))
    return EpisodeSpec(
        scene=scene,
        start=camera_pose(start, 0.0),
        target=target,
        max_steps=max_steps,
        seed=seed,
    )
