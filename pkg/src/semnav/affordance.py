"""Phase-conditioned affordance fields over the navigable cloud.

Every component scores each candidate point in [0, 1] from its distance to a
reference point set: nearest candidate scores 1, farthest close to 0. The
exploration phase sums direction, node, frontier, and history components;
the target-acquisition phase sums direction and semantic proximity. A safety
mask then zeroes candidates too close to obstacles, and the waypoint is the
argmax of the surviving scores.

Everything here is a pure function of its inputs; fields can be computed
concurrently against immutable map snapshots.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .errors import AllMaskedError, EmptyTargetSetError
from .geometry import Pose
from .pointcloud import PointCloud


class Phase(enum.Enum):
    EXPLORATION = "exploration"
    TARGET_ACQUISITION = "target_acquisition"


@dataclass(frozen=True)
class AffordanceConfig:
    epsilon: float = 1e-6             # normalization regularizer
    safety_threshold: float = 0.25    # clearance mode: meters; literal mode: score in [0, 1)
    cone_half_angle: float = math.radians(30.0)  # directional cone half-angle, rad
    history_spacing: float = 0.5      # spacing of recorded trajectory points, m
    mask_mode: str = "clearance"      # "clearance" (mask near obstacles) or "literal"

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if not 0 < self.cone_half_angle < math.pi:
            raise ValueError("cone_half_angle must be in (0, pi)")
        if self.mask_mode not in ("clearance", "literal"):
            raise ValueError("mask_mode must be 'clearance' or 'literal'")
        if self.mask_mode == "literal" and not 0 <= self.safety_threshold < 1:
            raise ValueError("literal-mode safety_threshold must be in [0, 1)")


@dataclass(eq=False)
class PhaseInputs:
    """Reference point sets feeding the phase components.

    Empty sets are legal: the matching component contributes its neutral
    value (zero) instead of erroring.
    """

    phase: Phase
    direction_set: PointCloud = field(default_factory=PointCloud.empty)
    node_set: PointCloud = field(default_factory=PointCloud.empty)
    history_set: PointCloud = field(default_factory=PointCloud.empty)
    semantic_set: PointCloud = field(default_factory=PointCloud.empty)
    frontiers: PointCloud = field(default_factory=PointCloud.empty)
    obstacles: PointCloud = field(default_factory=PointCloud.empty)


@dataclass(eq=False)
class AffordanceField:
    """Composite scores over a snapshot of candidate points."""

    candidates: PointCloud
    scores: np.ndarray
    phase: Phase
    masked: np.ndarray = None

    def __post_init__(self):
        self.scores = np.asarray(self.scores, dtype=float).reshape(-1)
        if len(self.scores) != len(self.candidates):
            raise ValueError("scores must parallel candidates")
        if self.masked is None:
            self.masked = np.zeros(len(self.scores), dtype=bool)
        else:
            self.masked = np.asarray(self.masked, dtype=bool).reshape(-1)


def _min_distances(candidates: np.ndarray, reference: np.ndarray) -> np.ndarray:
    d, _ = cKDTree(reference).query(candidates)
    return d


def normalized_affordance(candidates: PointCloud, reference: PointCloud, epsilon: float) -> np.ndarray:
    """Distance-normalized score per candidate: 1 at the nearest candidate,
    ~0 at the farthest, via 1 - (d - d_min) / (d_max - d_min + epsilon)."""
    if len(reference) == 0:
        raise EmptyTargetSetError("reference point set is empty")
    if len(candidates) == 0:
        raise ValueError("candidates must be non-empty")
    d = _min_distances(candidates.points, reference.points)
    d_min, d_max = d.min(), d.max()
    return 1.0 - (d - d_min) / (d_max - d_min + epsilon)


def directional_point_set(
    agent: Pose, heading_index: int, num_headings: int, nav: PointCloud, cone_half_angle: float
) -> PointCloud:
    """Navigable points whose bearing from the agent lies within the cone
    around heading 2*pi*heading_index/num_headings (world frame, +x = 0)."""
    if not 0 <= heading_index < num_headings:
        raise ValueError("heading index out of range")
    if len(nav) == 0:
        return PointCloud.empty()
    heading = 2.0 * math.pi * heading_index / num_headings
    rel = nav.points[:, :2] - agent.position[:2]
    bearings = np.arctan2(rel[:, 1], rel[:, 0])
    diff = np.abs((bearings - heading + math.pi) % (2.0 * math.pi) - math.pi)
    return PointCloud(nav.points[diff <= cone_half_angle])


def compose_field(candidates: PointCloud, inputs: PhaseInputs, config: AffordanceConfig) -> AffordanceField:
    """Sum the phase components into a composite score per candidate.

    Exploration: direction + node + frontier + history-avoidance components.
    Target acquisition: direction + semantic proximity. A component whose
    reference set is empty contributes zero.
    """
    if len(candidates) == 0:
        raise ValueError("candidates must be non-empty")
    n = len(candidates)

    def component(reference: PointCloud) -> np.ndarray:
        if len(reference) == 0:
            return np.zeros(n)
        return normalized_affordance(candidates, reference, config.epsilon)

    if inputs.phase is Phase.EXPLORATION:
        scores = component(inputs.direction_set) + component(inputs.node_set) + component(inputs.frontiers)
        if len(inputs.history_set):
            scores = scores + (1.0 - normalized_affordance(candidates, inputs.history_set, config.epsilon))
    else:
        scores = component(inputs.direction_set) + component(inputs.semantic_set)
    return AffordanceField(candidates=candidates, scores=scores, phase=inputs.phase)


def safety_mask(field: AffordanceField, obstacles: PointCloud, config: AffordanceConfig) -> AffordanceField:
    """Zero out candidates that fail the obstacle-safety rule.

    In "clearance" mode (the default) a candidate is masked when its planar
    (x-y) distance to the nearest obstacle falls below safety_threshold
    meters; obstacle points sit above the floor band, so a 3D distance would
    understate how close a wall really is. "literal" mode instead keeps
    candidates whose 3D obstacle closeness score exceeds the threshold, which
    retains points near obstacles; it exists for comparison only. An empty
    obstacle cloud masks nothing.
    """
    if len(obstacles) == 0:
        return AffordanceField(field.candidates, field.scores.copy(), field.phase, field.masked.copy())
    if config.mask_mode == "clearance":
        d = _min_distances(field.candidates.points[:, :2], obstacles.points[:, :2])
        masked = d < config.safety_threshold
    else:
        d = _min_distances(field.candidates.points, obstacles.points)
        closeness = 1.0 - (d - d.min()) / (d.max() - d.min() + config.epsilon)
        masked = ~(closeness > config.safety_threshold)
    masked = masked | field.masked
    scores = np.where(masked, 0.0, field.scores)
    return AffordanceField(field.candidates, scores, field.phase, masked)


def rank_candidates(field: AffordanceField, agent_position) -> np.ndarray:
    """Unmasked candidate indices, best first.

    Order: score descending, then distance to the agent ascending, then
    candidate index ascending, so ties resolve deterministically.
    """
    unmasked = np.nonzero(~field.masked)[0]
    if len(unmasked) == 0:
        return unmasked
    pos = np.asarray(agent_position, dtype=float).reshape(-1)[:2]
    dist = np.linalg.norm(field.candidates.points[unmasked, :2] - pos, axis=1)
    order = np.lexsort((unmasked, dist, -field.scores[unmasked]))
    return unmasked[order]


def select_waypoint(field: AffordanceField, agent_position) -> tuple[np.ndarray, float]:
    """The maximal-score unmasked candidate and its score."""
    order = rank_candidates(field, agent_position)
    if len(order) == 0:
        raise AllMaskedError("every candidate is masked")
    best = int(order[0])
    return field.candidates.points[best].copy(), float(field.scores[best])


def choose_phase(found: bool, target_class, objects: dict) -> Phase:
    """Target acquisition only when the oracle saw the target AND the map
    holds detected points of it; every other state explores."""
    cloud = objects.get(target_class)
    if found and cloud is not None and len(cloud) > 0:
        return Phase.TARGET_ACQUISITION
    return Phase.EXPLORATION


def subsample_trajectory(positions, spacing: float, z: float = 0.0) -> PointCloud:
    """Trajectory positions thinned to at least `spacing` apart, at height z.

    The first position is always kept; later ones are kept when at least
    `spacing` from the last kept point.
    """
    pts = np.asarray(positions, dtype=float).reshape(-1, 3)
    if len(pts) == 0:
        return PointCloud.empty()
    kept = [pts[0]]
    for p in pts[1:]:
        if np.linalg.norm(p[:2] - kept[-1][:2]) >= spacing:
            kept.append(p)
    out = np.array(kept)
    out[:, 2] = z
    return PointCloud(out)


def field_to_csv(field: AffordanceField, path) -> None:
    """Write the field as CSV rows of x, y, z, score, masked flag."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write("x,y,z,score,masked\n")
        for p, s, m in zip(field.candidates.points, field.scores, field.masked):
            fh.write(f"{p[0]:.6f},{p[1]:.6f},{p[2]:.6f},{s:.9f},{int(m)}\n")
