"""Differentiable frontier information gain.

The discrete visible-frontier count is smoothed by a piecewise-linear
filter: a range factor that stays at 1 up to ``r_max`` and ramps to 0 at
``2 r_max``, times two angular factors (camera XZ and YZ planes) that
stay at 1 inside the field of view and ramp down to 0 on the optical axis
pointing away.  Gates (bounding cube, occlusion, erasure, and the active
linear piece) are decided at the primal pose and held fixed while
differentiating.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from . import kernels
from .autodiff import AdScalar
from .camera import CameraModel, Pose, _centers_of, trig
from .kernels.fuzzy import ig_path_nb
from .kernels.traversal import rays_clear_np
from .kernels.visibility import frustum_mask_np
from .voxel_map import VoxelMap, write_atomic


@dataclass(frozen=True)
class FuzzyConfig:
    r_max: float = 10.0
    fov_xz: float = math.pi / 2
    fov_yz: float = 2 * math.pi / 5

    @property
    def cube_edge(self) -> float:
        return 4.0 * self.r_max

    @classmethod
    def from_camera(cls, cam: CameraModel) -> "FuzzyConfig":
        return cls(cam.r_max, cam.fov_xz, cam.fov_yz)


def _check_cfg(cam: CameraModel, cfg: FuzzyConfig | None) -> FuzzyConfig:
    derived = FuzzyConfig.from_camera(cam)
    if cfg is not None and cfg != derived:
        raise ValueError("fuzzy config must match the camera's r_max and fields of view")
    return derived


# -- single-voxel filters on AdScalars ---------------------------------------


def pose_variables(q) -> list[AdScalar]:
    """Seed x, y, z, yaw as the four differentiation variables."""
    if isinstance(q, Pose):
        q = q.as_array()
    return AdScalar.variables(q)


def _as_ad_pose(q) -> list[AdScalar]:
    if isinstance(q, Pose) or not isinstance(q[0], AdScalar):
        return pose_variables(q)
    return list(q)


def camera_coords(q, p) -> tuple[AdScalar, AdScalar, AdScalar]:
    """Camera-frame coordinates of world point(s) ``p`` as AdScalars in the pose."""
    x, y, z, yaw = _as_ad_pose(q)
    p = np.asarray(p, dtype=np.float64)
    c, s = ad.cos(yaw), ad.sin(yaw)
    dx, dy, dz = p[..., 0] - x, p[..., 1] - y, p[..., 2] - z
    return dx * s - dy * c, -dz, dx * c + dy * s


def _phi_d_of(delta: AdScalar, r_max: float) -> AdScalar:
    # flat pieces own the kinks: derivative only strictly inside (r_max, 2 r_max)
    ramp = 2.0 - delta / r_max
    out = ad.where(delta.value <= r_max, 1.0, ramp)
    return ad.where(delta.value >= 2.0 * r_max, 0.0, out)


def phi_theta(lateral: AdScalar, axial: AdScalar, fov: float) -> AdScalar:
    """Angular filter on a planar projection ``(lateral, axial)`` of a camera-frame point."""
    r2 = lateral * lateral + axial * axial
    degenerate = r2.value <= 0.0
    safe = ad.where(degenerate, 1.0, r2)
    cos_uw = axial / ad.sqrt(safe)
    c_half = math.cos(fov / 2.0)
    ramp = (1.0 + cos_uw) * (1.0 / (1.0 + c_half))
    flat = degenerate | (cos_uw.value >= c_half)
    return ad.where(flat, 1.0, ramp)


def fuzzy_terms(sx: AdScalar, sy: AdScalar, sz: AdScalar, cfg: FuzzyConfig):
    """Range, XZ and YZ factors from camera-frame coordinates."""
    delta = ad.sqrt(sx * sx + sy * sy + sz * sz)
    return (
        _phi_d_of(delta, cfg.r_max),
        phi_theta(sx, sz, cfg.fov_xz),
        phi_theta(sy, sz, cfg.fov_yz),
    )


def phi_d(q, v, cfg: FuzzyConfig) -> AdScalar:
    sx, sy, sz = camera_coords(q, v)
    return _phi_d_of(ad.sqrt(sx * sx + sy * sy + sz * sz), cfg.r_max)


def fuzzy_filter(q, v, cfg: FuzzyConfig) -> AdScalar:
    """Product of the range filter and both angular filters for voxel center ``v``."""
    d, txz, tyz = fuzzy_terms(*camera_coords(q, v), cfg)
    return d * txz * tyz


# -- path information gain ----------------------------------------------------


def _poses_of(path) -> np.ndarray:
    poses = path.q if hasattr(path, "q") else path
    poses = np.asarray(poses, dtype=np.float64)
    if poses.ndim != 2 or poses.shape[1] != 4:
        raise ValueError("path must be an (n, 4) pose array")
    return poses


def _ig_numpy(vmap, centers, poses, cth, sth, cam, want_grad, scored):
    cfg = FuzzyConfig.from_camera(cam)
    r_min, r_max, cxz, sxz, cyz, syz = cam.kernel_params()
    half = 2.0 * r_max
    alive = np.ones(len(centers), dtype=bool)
    grad = np.zeros((len(poses), 4))
    total = 0.0
    for a, q in enumerate(poses):
        idx = np.flatnonzero(alive)
        if not idx.size:
            break
        x, y, z, _ = AdScalar.variables(q)
        c = AdScalar(cth[a], np.array([0.0, 0.0, 0.0, -sth[a]]))
        s = AdScalar(sth[a], np.array([0.0, 0.0, 0.0, cth[a]]))
        pts = centers[idx]
        dx, dy, dz = pts[:, 0] - x, pts[:, 1] - y, pts[:, 2] - z
        sx, sy, sz = dx * s - dy * c, -dz, dx * c + dy * s
        delta = np.sqrt(sx.value**2 + sy.value**2 + sz.value**2)
        gate = (
            (np.abs(sx.value) <= half)
            & (np.abs(sy.value) <= half)
            & (np.abs(sz.value) <= half)
            & (delta < half)
        )
        cand = np.flatnonzero(gate)
        if cand.size:
            clear = rays_clear_np(vmap.log_odds, vmap.offset, vmap.rho, q[None, :3], pts[cand])
            cand = cand[clear]
        if not cand.size:
            continue
        if scored is not None:
            scored[a, idx[cand]] = True
        d, txz, tyz = fuzzy_terms(sx[cand], sy[cand], sz[cand], cfg)
        phi = ad.ad_sum(d * txz * tyz)
        total += float(phi.value)
        if want_grad:
            grad[a] = phi.partials
        inside = frustum_mask_np(
            sx.value[cand], sy.value[cand], sz.value[cand], r_min, r_max, cxz, sxz, cyz, syz
        )
        alive[idx[cand[inside]]] = False
    return total, grad


def _ig_core(vmap: VoxelMap, frontiers, cam: CameraModel, poses, want_grad=True, record=False, backend=None):
    poses = np.ascontiguousarray(poses, dtype=np.float64).reshape(-1, 4)
    centers = np.ascontiguousarray(_centers_of(frontiers, vmap.rho), dtype=np.float64)
    cth, sth = trig(poses[:, 3])
    scored = np.zeros((len(poses), len(centers)), dtype=bool) if record else None
    if not len(poses) or not len(centers):
        return 0.0, np.zeros((len(poses), 4)), scored
    if kernels.resolve(backend) == "numba":
        buf = scored if record else np.zeros((0, 0), dtype=np.bool_)
        total, grad = ig_path_nb(
            vmap.log_odds, vmap.offset, vmap.rho, poses, cth, sth, centers,
            *cam.kernel_params(), bool(want_grad), buf,
        )
    else:
        total, grad = _ig_numpy(vmap, centers, poses, cth, sth, cam, want_grad, scored)
    return float(total), grad, scored


def ig_view(vmap: VoxelMap, frontiers, cam: CameraModel, q: Pose, cfg: FuzzyConfig | None = None, backend=None) -> AdScalar:
    """Fuzzy information gain of one viewpoint, with partials in (x, y, z, yaw)."""
    _check_cfg(cam, cfg)
    value, grad, _ = _ig_core(vmap, frontiers, cam, q.as_array()[None, :], backend=backend)
    return AdScalar(value, grad[0])


def ig_path(vmap: VoxelMap, frontiers, cam: CameraModel, path, cfg: FuzzyConfig | None = None, backend=None, with_grad=True) -> AdScalar:
    """Path information gain over the interior viewpoints; each voxel fully seen once.

    Partials are ordered ``(x, y, z, yaw)`` per interior viewpoint.
    """
    _check_cfg(cam, cfg)
    poses = _poses_of(path)
    if len(poses) < 2:
        raise ValueError("a path needs at least two viewpoints")
    interior = poses[1:-1]
    value, grad, _ = _ig_core(vmap, frontiers, cam, interior, want_grad=with_grad, backend=backend)
    return AdScalar(value, grad.ravel())


def ig_path_value(vmap, frontiers, cam, path, backend=None) -> float:
    poses = _poses_of(path)
    return _ig_core(vmap, frontiers, cam, poses[1:-1], want_grad=False, backend=backend)[0]


def grad_ig_path(vmap, frontiers, cam, path, cfg=None, backend=None) -> np.ndarray:
    return ig_path(vmap, frontiers, cam, path, cfg, backend=backend).partials


@dataclass
class GateTrace:
    """Gates decided at a primal path: which (viewpoint, voxel) pairs were scored."""

    centers: np.ndarray
    scored: np.ndarray  # (n_interior, n_frontier)
    value: float
    grad: np.ndarray


def trace_gates(vmap, frontiers, cam, path, backend=None) -> GateTrace:
    poses = _poses_of(path)
    centers = _centers_of(frontiers, vmap.rho)
    value, grad, scored = _ig_core(vmap, frontiers, cam, poses[1:-1], record=True, backend=backend)
    return GateTrace(centers, scored, value, grad.ravel())


def frozen_value(trace: GateTrace, cam: CameraModel, interior_poses) -> float:
    """Sum of the filter over the recorded pairs, re-evaluated at new interior poses."""
    cfg = FuzzyConfig.from_camera(cam)
    interior_poses = np.asarray(interior_poses, dtype=np.float64).reshape(-1, 4)
    total = 0.0
    for a, q in enumerate(interior_poses):
        pts = trace.centers[trace.scored[a]]
        if not len(pts):
            continue
        sx, sy, sz = camera_coords(q, pts)
        d, txz, tyz = fuzzy_terms(sx, sy, sz, cfg)
        total += float((d.value * txz.value * tyz.value).sum())
    return total


def kink_margin(trace: GateTrace, cam: CameraModel, interior_poses) -> float:
    """Smallest distance of any scored pair from a piecewise boundary of the filter."""
    r_max = cam.r_max
    cxz, cyz = math.cos(cam.fov_xz / 2), math.cos(cam.fov_yz / 2)
    interior_poses = np.asarray(interior_poses, dtype=np.float64).reshape(-1, 4)
    margin = math.inf
    for a, q in enumerate(interior_poses):
        pts = trace.centers[trace.scored[a]]
        if not len(pts):
            continue
        s = np.stack([c.value for c in camera_coords(q, pts)], axis=-1)
        delta = np.linalg.norm(s, axis=1)
        rxz = np.hypot(s[:, 0], s[:, 2])
        ryz = np.hypot(s[:, 1], s[:, 2])
        with np.errstate(invalid="ignore", divide="ignore"):
            cu_xz = np.where(rxz > 0, s[:, 2] / rxz, 1.0)
            cu_yz = np.where(ryz > 0, s[:, 2] / ryz, 1.0)
        margin = min(
            margin,
            float(np.abs(delta - r_max).min()),
            float(np.abs(delta - 2 * r_max).min()),
            float(np.abs(cu_xz - cxz).min()),
            float(np.abs(cu_yz - cyz).min()),
        )
    return margin


# -- visual regression dump ---------------------------------------------------


def cross_section(cfg: FuzzyConfig, plane: str = "yz", n: int = 81) -> tuple[np.ndarray, np.ndarray]:
    """Filter values over a camera-frame plane spanning the bounding cube.

    ``plane`` is ``"yz"`` (x = 0) or ``"xz"`` (y = 0).  Returns the axis
    coordinates and an ``(n, n)`` grid indexed ``[row = z, col = lateral]``.
    """
    h = cfg.cube_edge / 2
    coords = np.linspace(-h, h, n)
    lat, axial = np.meshgrid(coords, coords)
    zero = np.zeros_like(lat)
    sx, sy = (zero, lat) if plane == "yz" else (lat, zero) if plane == "xz" else (None, None)
    if sx is None:
        raise ValueError("plane must be 'yz' or 'xz'")
    consts = [AdScalar.constant(a, 1) for a in (sx, sy, axial)]
    d, txz, tyz = fuzzy_terms(*consts, cfg)
    return coords, d.value * txz.value * tyz.value


def write_cross_section_csv(path, cfg: FuzzyConfig, plane: str = "yz", n: int = 81) -> None:
    coords, grid = cross_section(cfg, plane, n)
    lat = "y" if plane == "yz" else "x"
    rows = [f"z\\{lat}," + ",".join(f"{c:.6g}" for c in coords)]
    for zc, row in zip(coords, grid):
        rows.append(f"{zc:.6g}," + ",".join(f"{v:.6g}" for v in row))
    write_atomic(path, "\n".join(rows) + "\n")
