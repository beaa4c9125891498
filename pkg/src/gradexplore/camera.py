"""Camera pose, frustum and occlusion tests, and the discrete visible-frontier count."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .frontier import FrontierSet
from .kernels.traversal import ray_clear, rays_clear_np
from .kernels.visibility import visible_counts_nb, visible_counts_np
from .voxel_map import VoxelMap, voxel_center


def trig(angles) -> tuple[np.ndarray, np.ndarray]:
    """cos/sin through libm so every backend sees identical values."""
    angles = np.atleast_1d(np.asarray(angles, dtype=np.float64)).ravel()
    return (
        np.array([math.cos(a) for a in angles]),
        np.array([math.sin(a) for a in angles]),
    )


def wrap_angle(theta):
    """Map angles to (-pi, pi]."""
    return math.pi - np.mod(math.pi - np.asarray(theta, dtype=np.float64), 2.0 * math.pi)


@dataclass(frozen=True)
class Pose:
    """4-DOF viewpoint: position in meters and yaw in radians."""

    x: float
    y: float
    z: float
    yaw: float = 0.0

    def __post_init__(self):
        vals = (float(self.x), float(self.y), float(self.z), float(self.yaw))
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"non-finite pose {vals}")
        object.__setattr__(self, "x", vals[0])
        object.__setattr__(self, "y", vals[1])
        object.__setattr__(self, "z", vals[2])
        object.__setattr__(self, "yaw", float(wrap_angle(vals[3])))

    @classmethod
    def from_array(cls, a) -> "Pose":
        a = np.asarray(a, dtype=np.float64).ravel()
        return cls(a[0], a[1], a[2], a[3])

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z, self.yaw])

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    def rotation(self) -> np.ndarray:
        """Columns are the camera x, y, z axes expressed in the world frame."""
        c, s = math.cos(self.yaw), math.sin(self.yaw)
        return np.array([[s, 0.0, c], [-c, 0.0, s], [0.0, -1.0, 0.0]])


@dataclass(frozen=True)
class CameraModel:
    r_min: float = 0.3
    r_max: float = 10.0
    fov_xz: float = math.pi / 2
    fov_yz: float = 2 * math.pi / 5

    def __post_init__(self):
        if not (0.0 <= self.r_min < self.r_max):
            raise ValueError("need 0 <= r_min < r_max")
        for name in ("fov_xz", "fov_yz"):
            if not (0.0 < getattr(self, name) < math.pi):
                raise ValueError(f"{name} must lie in (0, pi)")

    @property
    def normals(self) -> np.ndarray:
        """Inward unit normals of the four side planes, camera frame."""
        a, b = self.fov_xz / 2, self.fov_yz / 2
        return np.array(
            [
                [math.cos(a), 0.0, math.sin(a)],
                [-math.cos(a), 0.0, math.sin(a)],
                [0.0, math.cos(b), math.sin(b)],
                [0.0, -math.cos(b), math.sin(b)],
            ]
        )

    def kernel_params(self) -> tuple[float, ...]:
        a, b = self.fov_xz / 2, self.fov_yz / 2
        return (
            float(self.r_min),
            float(self.r_max),
            math.cos(a),
            math.sin(a),
            math.cos(b),
            math.sin(b),
        )


def to_camera_frame(q: Pose, p) -> np.ndarray:
    """World point(s) ``p`` expressed in the camera frame of ``q``."""
    p = np.asarray(p, dtype=np.float64)
    d = p - q.position
    c, s = math.cos(q.yaw), math.sin(q.yaw)
    dx, dy, dz = d[..., 0], d[..., 1], d[..., 2]
    return np.stack([dx * s - dy * c, -dz, dx * c + dy * s], axis=-1)


def from_camera_frame(q: Pose, sp) -> np.ndarray:
    sp = np.asarray(sp, dtype=np.float64)
    return sp @ q.rotation().T + q.position


def in_frustum_point(cam: CameraModel, q: Pose, p) -> bool:
    sx, sy, sz = (float(c) for c in to_camera_frame(q, p))
    r_min, r_max, cxz, sxz, cyz, syz = cam.kernel_params()
    if cxz * sx + sxz * sz <= 0.0 or -cxz * sx + sxz * sz <= 0.0:
        return False
    if cyz * sy + syz * sz <= 0.0 or -cyz * sy + syz * sz <= 0.0:
        return False
    delta = math.sqrt(sx * sx + sy * sy + sz * sz)
    return r_min <= delta <= r_max


def in_frustum(cam: CameraModel, q: Pose, v, rho: float) -> bool:
    """Frustum membership of voxel ``v``, tested at its center."""
    return in_frustum_point(cam, q, voxel_center(v, rho))


def unobstructed(vmap: VoxelMap, q: Pose, v) -> bool:
    """Every cell between the camera cell and ``v`` (both excluded) is strictly free."""
    c = vmap.center(v)
    if kernels.resolve() == "numba":
        return bool(ray_clear(vmap.log_odds, vmap.offset, vmap.rho, q.x, q.y, q.z, c[0], c[1], c[2]))
    return bool(rays_clear_np(vmap.log_odds, vmap.offset, vmap.rho, q.position[None, :], c[None, :])[0])


def _centers_of(frontiers, rho: float) -> np.ndarray:
    if isinstance(frontiers, FrontierSet):
        return frontiers.centers
    keys = np.asarray(frontiers, dtype=np.int64).reshape(-1, 3)
    return (keys + 0.5) * rho


def visible_counts(vmap: VoxelMap, frontiers, cam: CameraModel, positions, yaws, backend=None) -> np.ndarray:
    """Visible frontier counts for every (position, yaw) pair, shape ``(P, Y)``."""
    positions = np.ascontiguousarray(np.atleast_2d(positions), dtype=np.float64)
    yaws = np.ascontiguousarray(np.atleast_1d(yaws), dtype=np.float64)
    centers = np.ascontiguousarray(_centers_of(frontiers, vmap.rho))
    if not len(centers):
        return np.zeros((len(positions), len(yaws)), dtype=np.int64)
    cy, sy = trig(yaws)
    args = (vmap.log_odds, vmap.offset, vmap.rho, positions, cy, sy, centers) + cam.kernel_params()
    if kernels.resolve(backend) == "numba":
        return visible_counts_nb(*args)
    return visible_counts_np(*args)


def visible_frontier_count(vmap: VoxelMap, frontiers, cam: CameraModel, q: Pose, backend=None) -> int:
    """Number of frontier voxels inside the frustum of ``q`` and unobstructed from it."""
    return int(visible_counts(vmap, frontiers, cam, q.position, [q.yaw], backend=backend)[0, 0])
