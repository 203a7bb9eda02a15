"""Incremental semantic point-cloud mapping.

A map fuses posed, labeled RGB-D frames into five clouds:

* scene      - every observed surface point, voxel-downsampled
* objects    - one cloud per object class id
* navigable  - floor-band points, semantically navigable classes, and
               interpolated bridge points from the agent's stand position
* obstacles  - scene points above the floor band
* frontiers  - free/unknown boundary cells of the 2D grid, lifted to floor height

plus the derived 2D occupancy grid. Label arrays use integer class ids;
UNLABELED marks pixels without a semantic label and STRUCTURE marks walls,
floors, and other non-object geometry.

Maps are single-writer: one updater integrates frames at a time. Everything
is value-like, so read-only consumers can work from a snapshot taken after
the last refresh.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyMapError, GridBoundsError, NoValidPointsError
from .geometry import CameraIntrinsics, Pose, backproject_depth_image, camera_to_world
from .pointcloud import PointCloud, concat_clouds, voxel_downsample

logger = logging.getLogger("semnav.map")

UNLABELED = -1
STRUCTURE = 0

FREE = 1
OBSTACLE = -1
UNKNOWN = 0


@dataclass(frozen=True)
class MapConfig:
    """Tunable resolutions and thresholds of the mapping pipeline."""

    voxel_size: float = 0.05          # cloud downsampling resolution, m
    floor_tolerance: float = 0.2      # half-height of the navigable band, m
    interpolation_step: float = 0.25  # spacing of bridge points, m
    grid_resolution: float = 0.1      # occupancy grid cell size, m
    nav_classes: frozenset = frozenset()  # class ids navigable regardless of height
    ceiling_offset: float = 1.5       # top of the obstacle band above the floor, m
    max_depth: float = 10.0           # depth validity ceiling, m

    def __post_init__(self):
        for name in ("voxel_size", "floor_tolerance", "interpolation_step", "grid_resolution",
                     "ceiling_offset", "max_depth"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.interpolation_step < self.voxel_size:
            raise ValueError("interpolation_step must be at least voxel_size")
        object.__setattr__(self, "nav_classes", frozenset(self.nav_classes))


@dataclass(eq=False)
class LabeledFrame:
    """One posed RGB-D frame with per-pixel class labels.

    depth, color, and labels share the (height, width) layout of the
    intrinsics; depth entries that are non-positive, NaN, or beyond
    max_depth are treated as invalid.
    """

    depth: np.ndarray
    color: np.ndarray
    labels: np.ndarray
    pose: Pose
    intrinsics: CameraIntrinsics
    heading_index: int = 0

    def __post_init__(self):
        self.depth = np.asarray(self.depth, dtype=float)
        self.color = np.asarray(self.color, dtype=np.uint8)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        shape = (self.intrinsics.height, self.intrinsics.width)
        if self.depth.shape != shape or self.labels.shape != shape or self.color.shape != shape + (3,):
            raise ValueError("frame arrays must match the intrinsics dimensions")


@dataclass(eq=False)
class OccupancyGrid:
    """2D projection of the navigable and obstacle clouds.

    cells[i, j] covers [origin_x + i*res, origin_x + (i+1)*res) x
    [origin_y + j*res, origin_y + (j+1)*res) and holds FREE, OBSTACLE,
    or UNKNOWN. Obstacles win when a cell receives both projections.
    """

    origin_x: float
    origin_y: float
    resolution: float
    cells: np.ndarray  # (nx, ny) int8

    @property
    def nx(self) -> int:
        return self.cells.shape[0]

    @property
    def ny(self) -> int:
        return self.cells.shape[1]

    def cell_of(self, x: float, y: float) -> tuple[int, int]:
        """Cell index of a world point; points exactly on the far edge are
        clipped into the last cell."""
        i = min(int(math.floor((x - self.origin_x) / self.resolution)), self.nx - 1)
        j = min(int(math.floor((y - self.origin_y) / self.resolution)), self.ny - 1)
        return i, j

    def cell_center(self, i: int, j: int) -> tuple[float, float]:
        return (
            self.origin_x + (i + 0.5) * self.resolution,
            self.origin_y + (j + 0.5) * self.resolution,
        )


@dataclass(eq=False)
class SemanticMap:
    """The five point clouds plus the derived occupancy grid.

    `bridge` holds interpolated floor points accumulated across panoramas;
    `pending_bridge_sources` buffers freshly observed navigable points until
    the next `refresh_derived`, which bridges toward them from the agent's
    current stand position. Bridging only toward currently sighted points
    keeps the bridges on sight lines, so they never tunnel through walls.
    """

    config: MapConfig
    scene: PointCloud = field(default_factory=PointCloud.empty)
    objects: dict = field(default_factory=dict)  # class id -> PointCloud
    navigable: PointCloud = field(default_factory=PointCloud.empty)
    obstacles: PointCloud = field(default_factory=PointCloud.empty)
    frontiers: PointCloud = field(default_factory=PointCloud.empty)
    bridge: PointCloud = field(default_factory=PointCloud.empty)
    pending_bridge_sources: list = field(default_factory=list)
    z_floor: float | None = None
    grid: OccupancyGrid | None = None

    @staticmethod
    def new(config: MapConfig | None = None) -> "SemanticMap":
        return SemanticMap(config=config or MapConfig())


def estimate_floor(
    frames, agent_pose: Pose, camera_height: float, window: float = 0.5
) -> float:
    """Estimate the floor elevation from a panorama of frames.

    Takes the 5th percentile of world-frame z over the valid points whose z
    lies within `window` meters of the expected floor height (agent z minus
    the camera height); the window rejects spurious far-below outliers. If no
    point falls inside the window, the overall 5th percentile is clipped into
    it instead.
    """
    zs = []
    for frame in frames:
        pts_cam, _ = backproject_depth_image(
            frame.depth, frame.intrinsics, max_depth=np.inf
        )
        if len(pts_cam):
            zs.append(camera_to_world(pts_cam, frame.pose)[:, 2])
    if not zs:
        raise NoValidPointsError("no valid depth pixels in panorama")
    z = np.concatenate(zs)
    expected = agent_pose.position[2] - camera_height
    in_window = z[np.abs(z - expected) <= window]
    if len(in_window):
        return float(np.percentile(in_window, 5))
    return float(np.clip(np.percentile(z, 5), expected - window, expected + window))


def integrate_frame(smap: SemanticMap, frame: LabeledFrame, agent_xy=None, refresh: bool = True) -> SemanticMap:
    """Fuse one frame into the scene and object clouds.

    Invalid depth pixels are skipped (and counted in the debug log), never
    fatal. With `refresh`, the navigable/obstacle clouds, grid, and frontiers
    are recomputed afterwards; batch callers integrate a whole panorama with
    refresh=False and call `refresh_derived` once.
    """
    if smap.z_floor is None:
        raise ValueError("z_floor must be estimated before integrating frames")
    points_cam, flat = backproject_depth_image(frame.depth, frame.intrinsics, smap.config.max_depth)
    skipped = frame.depth.size - len(points_cam)
    if skipped:
        logger.debug("skipped %d invalid depth pixels", skipped)
    if len(points_cam):
        points = camera_to_world(points_cam, frame.pose)
        colors = frame.color.reshape(-1, 3)[flat]
        labels = frame.labels.reshape(-1)[flat]
        smap.scene = voxel_downsample(
            concat_clouds(smap.scene, PointCloud(points, colors)), smap.config.voxel_size
        )
        for cls in np.unique(labels):
            cls = int(cls)
            if cls in (UNLABELED, STRUCTURE):
                continue
            mask = labels == cls
            smap.objects[cls] = voxel_downsample(
                concat_clouds(
                    smap.objects.get(cls, PointCloud.empty()),
                    PointCloud(points[mask], colors[mask]),
                ),
                smap.config.voxel_size,
            )
        band = np.abs(points[:, 2] - smap.z_floor) <= smap.config.floor_tolerance
        if smap.config.nav_classes:
            band |= np.isin(labels, list(smap.config.nav_classes))
        if band.any():
            smap.pending_bridge_sources.append(points[band])
    if refresh:
        xy = frame.pose.position[:2] if agent_xy is None else np.asarray(agent_xy, dtype=float)
        refresh_derived(smap, xy)
    return smap


def integrate_panorama(smap: SemanticMap, frames, agent_xy=None) -> SemanticMap:
    """Integrate a full panorama, refreshing the derived products once."""
    for frame in frames:
        integrate_frame(smap, frame, refresh=False)
    if frames:
        xy = frames[0].pose.position[:2] if agent_xy is None else np.asarray(agent_xy, dtype=float)
        refresh_derived(smap, xy)
    return smap


def compute_obstacles(smap: SemanticMap) -> PointCloud:
    """Scene points strictly above the floor band."""
    if smap.z_floor is None:
        raise ValueError("z_floor not set")
    if len(smap.scene) == 0:
        return PointCloud.empty()
    mask = smap.scene.points[:, 2] > smap.z_floor + smap.config.floor_tolerance
    colors = smap.scene.colors[mask] if smap.scene.colors is not None else None
    return PointCloud(smap.scene.points[mask], colors)


def _interpolate_toward(points: np.ndarray, stand: np.ndarray, step: float) -> np.ndarray:
    """Bridge points from `stand` toward each point, spaced `step` apart.

    For a point at distance d, generates k = 1 .. floor(d / step) samples at
    arc lengths k*step along the segment (points closer than step yield none).
    """
    if len(points) == 0:
        return np.zeros((0, 3))
    offsets = points - stand
    dists = np.linalg.norm(offsets, axis=1)
    counts = np.where(dists > step, np.floor(dists / step).astype(int), 0)
    chunks = []
    for k in range(1, counts.max() + 1 if len(counts) else 1):
        sel = counts >= k
        if not sel.any():
            break
        frac = (k * step) / dists[sel]
        chunks.append(stand + offsets[sel] * frac[:, None])
    if not chunks:
        return np.zeros((0, 3))
    return np.concatenate(chunks)


def compute_navigable(smap: SemanticMap, agent_xy) -> PointCloud:
    """Traversable points: the floor band, navigable-class objects, and
    interpolated bridge points from the agent's stand position.

    The stand position is (agent_x, agent_y, z_floor). Bridge points outside
    the floor band are dropped; the union is voxel-downsampled.
    """
    if smap.z_floor is None:
        raise ValueError("z_floor not set")
    cfg = smap.config
    parts = []
    if len(smap.scene):
        z = smap.scene.points[:, 2]
        band = (z >= smap.z_floor - cfg.floor_tolerance) & (z <= smap.z_floor + cfg.floor_tolerance)
        parts.append(smap.scene.points[band])
    for cls in sorted(cfg.nav_classes):
        cloud = smap.objects.get(cls)
        if cloud is not None and len(cloud):
            parts.append(cloud.points)
    if not parts:
        return PointCloud.empty()
    base = np.concatenate(parts)
    stand = np.array([agent_xy[0], agent_xy[1], smap.z_floor])
    bridge = _interpolate_toward(base, stand, cfg.interpolation_step)
    if len(bridge):
        keep = np.abs(bridge[:, 2] - smap.z_floor) < cfg.floor_tolerance
        base = np.concatenate([base, bridge[keep]])
    return voxel_downsample(PointCloud(base), cfg.voxel_size)


def build_occupancy_grid(smap: SemanticMap, bounds=None) -> OccupancyGrid:
    """Project the navigable and obstacle clouds onto a 2D grid.

    Grid bounds cover both clouds unless `bounds` (x_min, y_min, x_max, y_max)
    is given. A cell is OBSTACLE if any obstacle point projects into it,
    else FREE if any navigable point does, else UNKNOWN.
    """
    nav, obs = smap.navigable.points, smap.obstacles.points
    if len(nav) == 0 and len(obs) == 0:
        raise EmptyMapError("both navigable and obstacle clouds are empty")
    res = smap.config.grid_resolution
    stacked = np.concatenate([nav, obs]) if len(nav) and len(obs) else (nav if len(nav) else obs)
    if bounds is None:
        x_min, y_min = stacked[:, 0].min(), stacked[:, 1].min()
        x_max, y_max = stacked[:, 0].max(), stacked[:, 1].max()
    else:
        x_min, y_min, x_max, y_max = bounds
    nx = max(1, int(math.ceil((x_max - x_min) / res)))
    ny = max(1, int(math.ceil((y_max - y_min) / res)))
    cells = np.zeros((nx, ny), dtype=np.int8)

    def project(points):
        keep = (
            (points[:, 0] >= x_min) & (points[:, 0] <= x_max)
            & (points[:, 1] >= y_min) & (points[:, 1] <= y_max)
        )
        pts = points[keep]
        i = np.minimum(np.floor((pts[:, 0] - x_min) / res).astype(int), nx - 1)
        j = np.minimum(np.floor((pts[:, 1] - y_min) / res).astype(int), ny - 1)
        return i, j

    if len(nav):
        i, j = project(nav)
        cells[i, j] = FREE
    if len(obs):
        i, j = project(obs)
        cells[i, j] = OBSTACLE  # obstacle wins over free
    return OccupancyGrid(float(x_min), float(y_min), res, cells)


def detect_frontiers(grid: OccupancyGrid) -> list[tuple[int, int]]:
    """Free cells bordering unknown space with no adjacent obstacle.

    Adjacency is 4-connected; neighbors outside the grid count as neither
    unknown nor obstacle. Cells are returned sorted by (i, j).
    """
    cells = grid.cells
    free = cells == FREE
    unknown_neighbor = np.zeros_like(free)
    obstacle_neighbor = np.zeros_like(free)
    for axis, shift in ((0, 1), (0, -1), (1, 1), (1, -1)):
        rolled_unknown = np.zeros_like(free)
        rolled_obstacle = np.zeros_like(free)
        src = [slice(None), slice(None)]
        dst = [slice(None), slice(None)]
        if shift == 1:
            src[axis], dst[axis] = slice(1, None), slice(None, -1)
        else:
            src[axis], dst[axis] = slice(None, -1), slice(1, None)
        rolled_unknown[tuple(dst)] = cells[tuple(src)] == UNKNOWN
        rolled_obstacle[tuple(dst)] = cells[tuple(src)] == OBSTACLE
        unknown_neighbor |= rolled_unknown
        obstacle_neighbor |= rolled_obstacle
    ii, jj = np.nonzero(free & unknown_neighbor & ~obstacle_neighbor)
    return sorted(zip(ii.tolist(), jj.tolist()))


def frontiers_to_world(cells, grid: OccupancyGrid, z_floor: float) -> PointCloud:
    """Lift frontier cells to 3D at floor height, using each cell's min corner."""
    if not cells:
        return PointCloud.empty()
    points = np.empty((len(cells), 3))
    for k, (i, j) in enumerate(cells):
        if not (0 <= i < grid.nx and 0 <= j < grid.ny):
            raise GridBoundsError(f"cell ({i}, {j}) outside {grid.nx}x{grid.ny} grid")
        points[k] = (i * grid.resolution + grid.origin_x, j * grid.resolution + grid.origin_y, z_floor)
    return PointCloud(points)


def refresh_derived(smap: SemanticMap, agent_xy) -> SemanticMap:
    """Recompute the derived products after integrating new frames.

    The navigable cloud is the floor band plus navigable-class objects plus
    the accumulated bridge cloud. New bridges run from the current stand
    position toward the points observed since the last refresh only: those
    lie on camera sight lines from (almost exactly) the stand position, so
    the bridges cannot cross walls, which interpolating toward old points
    observed from elsewhere could.
    """
    cfg = smap.config
    stand = np.array([agent_xy[0], agent_xy[1], smap.z_floor])
    if smap.pending_bridge_sources:
        sources = voxel_downsample(
            PointCloud(np.concatenate(smap.pending_bridge_sources)), cfg.grid_resolution
        ).points
        smap.pending_bridge_sources = []
        fresh = _interpolate_toward(sources, stand, cfg.interpolation_step)
        if len(fresh):
            fresh = fresh[np.abs(fresh[:, 2] - smap.z_floor) < cfg.floor_tolerance]
        if len(fresh):
            smap.bridge = voxel_downsample(
                concat_clouds(smap.bridge, PointCloud(fresh)), cfg.voxel_size
            )
    parts = []
    if len(smap.scene):
        z = smap.scene.points[:, 2]
        band = (z >= smap.z_floor - cfg.floor_tolerance) & (z <= smap.z_floor + cfg.floor_tolerance)
        parts.append(smap.scene.points[band])
    for cls in sorted(cfg.nav_classes):
        cloud = smap.objects.get(cls)
        if cloud is not None and len(cloud):
            parts.append(cloud.points)
    if len(smap.bridge):
        parts.append(smap.bridge.points)
    smap.navigable = (
        voxel_downsample(PointCloud(np.concatenate(parts)), cfg.voxel_size)
        if parts
        else PointCloud.empty()
    )
    smap.obstacles = compute_obstacles(smap)
    if len(smap.navigable) == 0 and len(smap.obstacles) == 0:
        smap.grid = None
        smap.frontiers = PointCloud.empty()
        return smap
    smap.grid = build_occupancy_grid(smap)
    smap.frontiers = frontiers_to_world(detect_frontiers(smap.grid), smap.grid, smap.z_floor)
    return smap


def save_pgm(grid: OccupancyGrid, path) -> None:
    """Write the grid as ASCII PGM: unknown 128, free 255, obstacle 0.

    Rows run from max y down to min y so the image reads like a map.
    """
    value = np.full(grid.cells.shape, 128, dtype=int)
    value[grid.cells == FREE] = 255
    value[grid.cells == OBSTACLE] = 0
    lines = ["P2", f"{grid.nx} {grid.ny}", "255"]
    for j in range(grid.ny - 1, -1, -1):
        lines.append(" ".join(str(v) for v in value[:, j]))
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")
