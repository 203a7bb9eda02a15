"""Point cloud container, voxel downsampling, and PLY export."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(eq=False)
class PointCloud:
    """Points in the world frame with optional parallel RGB colors.

    `points` is always an (N, 3) float array; `colors`, when present, is an
    (N, 3) uint8 array of the same length.
    """

    points: np.ndarray
    colors: np.ndarray | None = None

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float).reshape(-1, 3)
        if self.colors is not None:
            self.colors = np.asarray(self.colors, dtype=np.uint8).reshape(-1, 3)
            if len(self.colors) != len(self.points):
                raise ValueError("colors must parallel points")

    def __len__(self) -> int:
        return len(self.points)

    @staticmethod
    def empty() -> "PointCloud":
        return PointCloud(np.zeros((0, 3)))


def concat_clouds(*clouds: PointCloud) -> PointCloud:
    """Concatenate clouds; colors are kept only if every part carries them."""
    parts = [c for c in clouds if len(c) > 0]
    if not parts:
        return PointCloud.empty()
    points = np.concatenate([c.points for c in parts])
    if all(c.colors is not None for c in parts):
        return PointCloud(points, np.concatenate([c.colors for c in parts]))
    return PointCloud(points)


def _voxel_keys(points: np.ndarray, size: float) -> np.ndarray:
    """Combined integer key per point, ordered lexicographically by (ix, iy, iz)."""
    idx = np.floor(points / size).astype(np.int64)
    lo = idx.min(axis=0)
    span = idx.max(axis=0) - lo + 1
    return ((idx[:, 0] - lo[0]) * span[1] + (idx[:, 1] - lo[1])) * span[2] + (idx[:, 2] - lo[2])


def voxel_downsample(cloud: PointCloud, size: float) -> PointCloud:
    """Replace the points inside each cubic voxel of side `size` by their centroid.

    Colors, when present, are averaged the same way. Output points are ordered
    by voxel index, so identical inputs yield identical outputs.
    """
    if size <= 0:
        raise ValueError("voxel size must be positive")
    if len(cloud) == 0:
        return PointCloud.empty()
    keys = _voxel_keys(cloud.points, size)
    uniq, inverse = np.unique(keys, return_inverse=True)
    counts = np.bincount(inverse, minlength=len(uniq)).astype(float)
    sums = np.zeros((len(uniq), 3))
    np.add.at(sums, inverse, cloud.points)
    centroids = sums / counts[:, None]
    if cloud.colors is None:
        return PointCloud(centroids)
    color_sums = np.zeros((len(uniq), 3))
    np.add.at(color_sums, inverse, cloud.colors.astype(float))
    return PointCloud(centroids, np.rint(color_sums / counts[:, None]).astype(np.uint8))


def save_ply(cloud: PointCloud, path) -> None:
    """Write an ASCII PLY file with one `x y z r g b` line per point.

    Colorless clouds are written mid-gray.
    """
    colors = cloud.colors
    if colors is None:
        colors = np.full((len(cloud), 3), 128, dtype=np.uint8)
    lines = [
        "ply",
        "format ascii 1.0",
        f"element vertex {len(cloud)}",
        "property float x",
        "property float y",
        "property float z",
        "property uchar red",
        "property uchar green",
        "property uchar blue",
        "end_header",
    ]
    for p, c in zip(cloud.points, colors):
        lines.append(f"{p[0]:.6f} {p[1]:.6f} {p[2]:.6f} {c[0]} {c[1]} {c[2]}")
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")
