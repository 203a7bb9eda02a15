"""Pinhole camera geometry and rigid-body transforms.

Conventions used throughout the package:

* World frame: right-handed, z up, meters.
* Camera frame: z forward (optical axis), x right, y down.
* Pixel (u, v): u is the column index, v is the row index.
* Quaternions are stored as (w, x, y, z) and must be unit length.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidDepthError

# Maps camera axes into the world frame for a camera with yaw 0:
# x_cam (right) -> -y_world, y_cam (down) -> -z_world, z_cam (forward) -> +x_world.
CAMERA_AXES = np.array(
    [
        [0.0, 0.0, 1.0],
        [-1.0, 0.0, 0.0],
        [0.0, -1.0, 0.0],
    ]
)


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole intrinsics in pixels."""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")
        if not (0 <= self.cx < self.width):
            raise ValueError("cx must lie inside the image width")
        if not (0 <= self.cy < self.height):
            raise ValueError("cy must lie inside the image height")

    def matrix(self) -> np.ndarray:
        return np.array(
            [
                [self.fx, 0.0, self.cx],
                [0.0, self.fy, self.cy],
                [0.0, 0.0, 1.0],
            ]
        )


def intrinsics_from_fov(width: int, height: int, fov_x_deg: float = 90.0) -> CameraIntrinsics:
    """Build intrinsics for a given horizontal field of view, square pixels."""
    fx = width / (2.0 * math.tan(math.radians(fov_x_deg) / 2.0))
    return CameraIntrinsics(fx=fx, fy=fx, cx=width / 2.0, cy=height / 2.0, width=width, height=height)


@dataclass(frozen=True, eq=False)
class Pose:
    """Rigid pose: position in meters plus a unit orientation quaternion."""

    position: np.ndarray
    orientation: np.ndarray

    def __post_init__(self):
        pos = np.asarray(self.position, dtype=float).reshape(3)
        quat = np.asarray(self.orientation, dtype=float).reshape(4)
        if abs(np.linalg.norm(quat) - 1.0) > 1e-9:
            raise ValueError("orientation quaternion must be unit length")
        object.__setattr__(self, "position", pos)
        object.__setattr__(self, "orientation", quat)

    @staticmethod
    def identity(position=(0.0, 0.0, 0.0)) -> "Pose":
        return Pose(np.asarray(position, dtype=float), np.array([1.0, 0.0, 0.0, 0.0]))


def quaternion_to_matrix(q: np.ndarray) -> np.ndarray:
    """Rotation matrix of a unit quaternion (w, x, y, z)."""
    w, x, y, z = np.asarray(q, dtype=float).reshape(4)
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def quaternion_from_matrix(rot: np.ndarray) -> np.ndarray:
    """Unit quaternion (w, x, y, z) of a rotation matrix, w >= 0."""
    m = np.asarray(rot, dtype=float)
    trace = m[0, 0] + m[1, 1] + m[2, 2]
    if trace > 0:
        s = math.sqrt(trace + 1.0) * 2.0
        q = np.array(
            [0.25 * s, (m[2, 1] - m[1, 2]) / s, (m[0, 2] - m[2, 0]) / s, (m[1, 0] - m[0, 1]) / s]
        )
    elif m[0, 0] > m[1, 1] and m[0, 0] > m[2, 2]:
        s = math.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2]) * 2.0
        q = np.array(
            [(m[2, 1] - m[1, 2]) / s, 0.25 * s, (m[0, 1] + m[1, 0]) / s, (m[0, 2] + m[2, 0]) / s]
        )
    elif m[1, 1] > m[2, 2]:
        s = math.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2]) * 2.0
        q = np.array(
            [(m[0, 2] - m[2, 0]) / s, (m[0, 1] + m[1, 0]) / s, 0.25 * s, (m[1, 2] + m[2, 1]) / s]
        )
    else:
        s = math.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1]) * 2.0
        q = np.array(
            [(m[1, 0] - m[0, 1]) / s, (m[0, 2] + m[2, 0]) / s, (m[1, 2] + m[2, 1]) / s, 0.25 * s]
        )
    if q[0] < 0:
        q = -q
    return q / np.linalg.norm(q)


def yaw_matrix(yaw: float) -> np.ndarray:
    c, s = math.cos(yaw), math.sin(yaw)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def camera_pose(position, yaw: float) -> Pose:
    """Pose of a level camera at `position` looking along world yaw `yaw`.

    Yaw 0 looks along +x; yaw is measured counter-clockwise about +z.
    """
    rot = yaw_matrix(yaw) @ CAMERA_AXES
    return Pose(np.asarray(position, dtype=float), quaternion_from_matrix(rot))


def backproject_pixel(u, v, depth, intrinsics: CameraIntrinsics, max_depth: float | None = None) -> np.ndarray:
    """Lift pixel (u, v) with z-depth `depth` into the camera frame.

    Returns depth * K^-1 * (u, v, 1)^T. Raises InvalidDepthError for
    non-positive, NaN, or out-of-range depth.
    """
    d = float(depth)
    if not math.isfinite(d) or d <= 0:
        raise InvalidDepthError(f"invalid depth {depth!r}")
    if max_depth is not None and d > max_depth:
        raise InvalidDepthError(f"depth {d} exceeds max depth {max_depth}")
    if not (0 <= u < intrinsics.width and 0 <= v < intrinsics.height):
        raise ValueError(f"pixel ({u}, {v}) outside image bounds")
    return np.array(
        [
            d * (u - intrinsics.cx) / intrinsics.fx,
            d * (v - intrinsics.cy) / intrinsics.fy,
            d,
        ]
    )


def backproject_depth_image(
    depth: np.ndarray, intrinsics: CameraIntrinsics, max_depth: float
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized backprojection of a full depth image.

    Invalid pixels (non-positive, NaN, > max_depth) are skipped rather than
    raised. Returns (points_cam (M, 3), flat pixel indices (M,)) where flat
    index = v * width + u.
    """
    depth = np.asarray(depth, dtype=float)
    height, width = depth.shape
    valid = np.isfinite(depth) & (depth > 0) & (depth <= max_depth)
    vs, us = np.nonzero(valid)
    d = depth[vs, us]
    points = np.empty((d.size, 3))
    points[:, 0] = d * (us - intrinsics.cx) / intrinsics.fx
    points[:, 1] = d * (vs - intrinsics.cy) / intrinsics.fy
    points[:, 2] = d
    return points, vs * width + us


def camera_to_world(points_cam: np.ndarray, pose: Pose) -> np.ndarray:
    """Apply the rigid transform R(q) x + p to one point or an (N, 3) batch."""
    rot = quaternion_to_matrix(pose.orientation)
    pts = np.asarray(points_cam, dtype=float)
    if pts.ndim == 1:
        return rot @ pts + pose.position
    return pts @ rot.T + pose.position
