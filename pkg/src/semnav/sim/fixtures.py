"""Hand-built benchmark scenes used by the tests, demos, and docs.

Three fixed layouts:

* one_room      - a single 4 x 4 m room with the target in view of the start
* two_room      - a long hallway with a side doorway into a big room that
                  leads, through an inner doorway, into the target room; the
                  direct exploration direction is a dead end, so a successful
                  run has to come back through already-visited space
* corridor      - a long corridor with the target hidden behind a baffle at
                  the far end, opposite the initially deepest direction
"""

from __future__ import annotations

from ..geometry import camera_pose
from ..topo_graph import TopoConfig
from .episode import AgentConfig
from .scene import BOUNDS_WALL_HEIGHT as H
from .scene import Box, EpisodeSpec, Scene

CAMERA_HEIGHT = 0.8


def one_room_scene() -> Scene:
    return Scene(
        bounds=(0.0, 0.0, 4.0, 4.0),
        walls=[],
        objects=[
            ("bed", Box((3.0, 1.4, 0.0), (3.9, 2.6, 0.5))),
            ("plant", Box((0.3, 3.3, 0.0), (0.7, 3.7, 0.6))),
        ],
    )


def one_room_spec(max_steps: int = 10) -> EpisodeSpec:
    return EpisodeSpec(
        scene=one_room_scene(),
        start=camera_pose((1.0, 2.0, CAMERA_HEIGHT), 0.0),
        target="bed",
        max_steps=max_steps,
        seed=1,
    )


def two_room_scene() -> Scene:
    """South hallway with a doorway into room A; room B, holding the bed,
    hangs off room A behind an inner doorway screened by a baffle wall.
    The baffle keeps room B unattractive until the rest is explored, so a
    successful run sweeps room A and the hallway first, returns to the
    vestibule node beside the inner doorway, and only then reaches the bed.
    Room B's interior lies east of the baffle (x > 7.2)."""
    return Scene(
        bounds=(0.0, 0.0, 12.0, 9.0),
        walls=[
            # hallway north wall (y ~ 2) with a doorway at x in [4.6, 5.4]
            Box((0.0, 1.9, 0.0), (4.6, 2.1, H)),
            Box((5.4, 1.9, 0.0), (12.0, 2.1, H)),
            # divider between rooms A and B, doorway at y in [2.6, 3.4]
            Box((5.9, 2.1, 0.0), (6.1, 2.6, H)),
            Box((5.9, 3.4, 0.0), (6.1, 9.0, H)),
            # baffle inside room B, screening the inner doorway
            Box((7.0, 2.1, 0.0), (7.2, 4.4, H)),
        ],
        objects=[
            ("bed", Box((10.6, 7.4, 0.0), (11.8, 8.6, 0.5))),
            ("sofa", Box((0.8, 7.6, 0.0), (2.3, 8.6, 0.5))),
            ("plant", Box((11.3, 0.3, 0.0), (11.8, 0.8, 0.6))),
            ("chair", Box((0.3, 0.3, 0.0), (0.8, 0.8, 0.5))),
        ],
    )


TWO_ROOM_INTERIOR_X = 7.2  # room B proper starts east of the baffle


def two_room_spec(max_steps: int = 20) -> EpisodeSpec:
    return EpisodeSpec(
        scene=two_room_scene(),
        start=camera_pose((4.8, 1.0, CAMERA_HEIGHT), 0.0),
        target="bed",
        max_steps=max_steps,
        seed=2,
    )


def two_room_config() -> AgentConfig:
    """Agent configuration tuned to the two-room scene's scale: merges fire
    across the room-A vestibule so returning there revisits the old node."""
    return AgentConfig(topo_config=TopoConfig(node_radius=2.0, merge_distance=1.4))


def corridor_scene() -> Scene:
    """A 14 m corridor with two south-side baffles that leave sight slivers
    behind them. The plant hides at the west end behind the far baffle; the
    near baffle's sliver sits right next to the start, where it keeps luring
    an agent that does not penalize already-visited space."""
    return Scene(
        bounds=(0.0, 0.0, 14.0, 2.0),
        walls=[
            Box((3.5, 0.0, 0.0), (3.7, 1.25, H)),   # west baffle, passage on the north
            Box((10.5, 0.0, 0.0), (10.7, 1.25, H)),  # east baffle, beside the start
        ],
        objects=[
            ("plant", Box((0.4, 0.3, 0.0), (0.9, 0.8, 0.6))),
            ("chair", Box((13.2, 1.3, 0.0), (13.7, 1.8, 0.5))),
        ],
    )


def corridor_spec(max_steps: int = 14) -> EpisodeSpec:
    return EpisodeSpec(
        scene=corridor_scene(),
        start=camera_pose((10.0, 1.0, CAMERA_HEIGHT), 0.0),
        target="plant",
        max_steps=max_steps,
        seed=3,
    )
