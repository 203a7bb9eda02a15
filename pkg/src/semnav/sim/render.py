"""Synthetic panorama rendering by ray / axis-aligned-box intersection.

Each panorama heading renders one depth + label frame from evenly spaced
world yaw angles (heading h looks along yaw 2*pi*h/num_headings, so heading
indices line up with the directional affordance geometry). Depth stores the
camera-frame z distance of the nearest hit; rays that hit nothing, or only
beyond the depth ceiling, are invalid (depth 0).
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import PoseInsideGeometryError
from ..geometry import CameraIntrinsics, Pose, camera_pose, quaternion_to_matrix
from ..semantic_map import LabeledFrame, STRUCTURE, UNLABELED
from .scene import Scene

_STRUCTURE_COLOR = np.array([120, 120, 120], dtype=np.uint8)


def class_color(label: int) -> np.ndarray:
    """Deterministic pseudo-color per class id."""
    if label == STRUCTURE:
        return _STRUCTURE_COLOR.copy()
    return np.array(
        [(37 * label + 96) % 256, (97 * label + 48) % 256, (17 * label + 160) % 256],
        dtype=np.uint8,
    )


def _ray_grid(intrinsics: CameraIntrinsics) -> np.ndarray:
    """Camera-frame ray directions with z = 1 for every pixel, (H*W, 3)."""
    us, vs = np.meshgrid(np.arange(intrinsics.width), np.arange(intrinsics.height))
    dirs = np.empty((intrinsics.height * intrinsics.width, 3))
    dirs[:, 0] = ((us - intrinsics.cx) / intrinsics.fx).ravel()
    dirs[:, 1] = ((vs - intrinsics.cy) / intrinsics.fy).ravel()
    dirs[:, 2] = 1.0
    return dirs


def _raycast(origin, dirs_world, mins, maxs, labels):
    """Nearest-hit slab intersection of rays against a box set.

    Returns (t, label) per ray; t = inf and label = UNLABELED for misses.
    The parameter t is measured along the unnormalized ray direction, so for
    camera rays with z_cam = 1 it equals the camera-frame z depth.
    """
    d = np.where(np.abs(dirs_world) < 1e-12, 1e-12, dirs_world)
    inv = 1.0 / d
    lo = (mins[None, :, :] - origin) * inv[:, None, :]
    hi = (maxs[None, :, :] - origin) * inv[:, None, :]
    t_near = np.minimum(lo, hi).max(axis=2)
    t_far = np.maximum(lo, hi).min(axis=2)
    hit = (t_near <= t_far) & (t_far > 1e-9)
    t_near = np.where(hit & (t_near > 1e-9), t_near, np.inf)
    best = t_near.argmin(axis=1)
    rays = np.arange(len(dirs_world))
    t = t_near[rays, best]
    lab = np.where(np.isfinite(t), labels[best], UNLABELED)
    return t, lab


def render_panorama(
    scene: Scene,
    pose: Pose,
    intrinsics: CameraIntrinsics,
    num_headings: int,
    max_depth: float = 10.0,
) -> list[LabeledFrame]:
    """Render one labeled RGB-D frame per heading from the pose's position."""
    position = np.asarray(pose.position, dtype=float)
    if not scene.inside_bounds(position[:2]) or position[2] <= 0:
        raise PoseInsideGeometryError(f"camera at {position} outside the free volume")
    if scene.collides(position):
        raise PoseInsideGeometryError(f"camera at {position} inside solid geometry")
    mins, maxs, labels = scene.solid_geometry()
    dirs_cam = _ray_grid(intrinsics)
    frames = []
    shape = (intrinsics.height, intrinsics.width)
    for h in range(num_headings):
        yaw = 2.0 * math.pi * h / num_headings
        cam = camera_pose(position, yaw)
        rot = quaternion_to_matrix(cam.orientation)
        t, lab = _raycast(position, dirs_cam @ rot.T, mins, maxs, labels)
        valid = np.isfinite(t) & (t <= max_depth)
        depth = np.where(valid, t, 0.0).reshape(shape)
        lab = np.where(valid, lab, UNLABELED).reshape(shape)
        color = np.zeros(shape + (3,), dtype=np.uint8)
        for cls in np.unique(lab):
            if cls == UNLABELED:
                continue
            color[lab == cls] = class_color(int(cls))
        frames.append(
            LabeledFrame(
                depth=depth,
                color=color,
                labels=lab,
                pose=cam,
                intrinsics=intrinsics,
                heading_index=h,
            )
        )
    return frames
