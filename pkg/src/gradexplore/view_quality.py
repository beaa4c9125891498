"""Collision-penalized viewpoint scoring and next-best-view sampling."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .camera import CameraModel, Pose, visible_counts, visible_frontier_count, wrap_angle
from .voxel_map import VoxelMap

_ZONE_EPS = 1e-9


@dataclass(frozen=True)
class SafetyZones:
    red: tuple[float, float, float] = (0.6, 0.6, 0.35)
    yellow: tuple[float, float, float] = (1.2, 1.2, 0.7)
    lambda2: float = 0.5
    lambda3: float = 0.1

    def __post_init__(self):
        red = tuple(float(v) for v in self.red)
        yellow = tuple(float(v) for v in self.yellow)
        object.__setattr__(self, "red", red)
        object.__setattr__(self, "yellow", yellow)
        if any(r <= 0 for r in red) or any(r > y for r, y in zip(red, yellow)):
            raise ValueError("zones need 0 < red <= yellow componentwise")
        if self.lambda2 <= 0 or self.lambda3 <= 0:
            raise ValueError("lambda2 and lambda3 must be positive")


@dataclass(frozen=True)
class SamplerConfig:
    n_samples: int = 200
    headings: int = 8

    def __post_init__(self):
        if self.n_samples < 1 or self.headings < 1:
            raise ValueError("n_samples and headings must be positive")


def zone_keys(position, extent, rho: float) -> np.ndarray:
    """Keys of the cells overlapping the open box of size ``extent`` centered at ``position``."""
    p = np.asarray(position, dtype=np.float64)
    h = 0.5 * np.asarray(extent, dtype=np.float64)
    lo = np.floor((p - h) / rho + _ZONE_EPS).astype(np.int64)
    hi = np.ceil((p + h) / rho - _ZONE_EPS).astype(np.int64) - 1
    axes = [np.arange(a, b + 1) for a, b in zip(lo, hi)]
    grid = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in grid], axis=1)


def zone_values(vmap: VoxelMap, positions, extent, outside: float = 0.0) -> np.ndarray:
    """Log-odds of each zone cell for many positions; ``(P, K)`` with NaN padding."""
    pts = np.atleast_2d(np.asarray(positions, dtype=np.float64))
    h = 0.5 * np.asarray(extent, dtype=np.float64)
    lo = np.floor((pts - h) / vmap.rho + _ZONE_EPS).astype(np.int64)
    hi = np.ceil((pts + h) / vmap.rho - _ZONE_EPS).astype(np.int64) - 1
    span = (hi - lo).max(axis=0) + 1
    offs = np.stack(
        [g.ravel() for g in np.meshgrid(*[np.arange(s) for s in span], indexing="ij")], axis=1
    )
    keys = lo[:, None, :] + offs[None, :, :]
    valid = np.all(keys <= hi[:, None, :], axis=2)
    out = np.full(valid.shape, np.nan)
    out[valid] = vmap.values_at(keys[valid], outside=outside)
    return out


def alpha1_batch(vmap: VoxelMap, positions, zones: SafetyZones) -> np.ndarray:
    vals = zone_values(vmap, positions, zones.red)
    return np.where(np.nanmax(vals, axis=1) < 0.0, 1.0, 0.0)


def alpha2_batch(vmap: VoxelMap, positions, zones: SafetyZones) -> np.ndarray:
    vals = zone_values(vmap, positions, zones.yellow)
    bad = np.sum(np.nan_to_num(vals, nan=-1.0) >= 0.0, axis=1)
    return np.exp(-zones.lambda2 * bad)


def alpha1(vmap: VoxelMap, q: Pose, zones: SafetyZones) -> float:
    """1 when every red-zone cell is known free, else 0 (unknown counts as blocking)."""
    return float(alpha1_batch(vmap, q.position, zones)[0])


def alpha2(vmap: VoxelMap, q: Pose, zones: SafetyZones) -> float:
    """``exp(-lambda2 * k)`` with ``k`` the unknown-or-occupied cells in the yellow zone."""
    return float(alpha2_batch(vmap, q.position, zones)[0])


def pose_distance(q, q0) -> np.ndarray:
    """Position distance plus 0.1 x wrapped yaw difference."""
    a = np.atleast_2d(q.as_array() if isinstance(q, Pose) else q)
    b = q0.as_array() if isinstance(q0, Pose) else np.asarray(q0, dtype=np.float64)
    trans = np.linalg.norm(a[:, :3] - b[:3], axis=1)
    rot = np.abs(wrap_angle(a[:, 3] - b[3]))
    return trans + 0.1 * rot


def alpha3(q: Pose, q0: Pose, lambda3: float) -> float:
    return float(math.exp(-lambda3 * float(pose_distance(q, q0)[0])))


def view_quality(vmap: VoxelMap, frontiers, cam: CameraModel, q: Pose, q0: Pose, zones: SafetyZones) -> float:
    a1 = alpha1(vmap, q, zones)
    if a1 == 0.0:
        return 0.0
    f = visible_frontier_count(vmap, frontiers, cam, q)
    return f * a1 * alpha2(vmap, q, zones) * alpha3(q, q0, zones.lambda3)


@dataclass
class Candidates:
    poses: np.ndarray  # (P * H, 4), position-major
    quality: np.ndarray  # (P * H,)


def score_candidates(
    vmap: VoxelMap,
    frontiers,
    cam: CameraModel,
    q0: Pose,
    zones: SafetyZones,
    sampler: SamplerConfig,
    rng: np.random.Generator,
) -> Candidates:
    """Sample positions over known-free cells and score every heading at each."""
    free = vmap.grid_keys(vmap.free_mask)
    if not len(free):
        raise ValueError("next-best-view sampling needs at least one free voxel")
    pick = rng.integers(len(free), size=sampler.n_samples)
    positions = (free[pick] + 0.5) * vmap.rho
    headings = wrap_angle(2.0 * math.pi * np.arange(sampler.headings) / sampler.headings)
    a1 = alpha1_batch(vmap, positions, zones)
    a2 = alpha2_batch(vmap, positions, zones)
    counts = np.zeros((len(positions), len(headings)), dtype=np.int64)
    ok = a1 > 0
    if ok.any():
        counts[ok] = visible_counts(vmap, frontiers, cam, positions[ok], headings)
    poses = np.concatenate(
        [np.repeat(positions, len(headings), axis=0), np.tile(headings, len(positions))[:, None]],
        axis=1,
    )
    a3 = np.exp(-zones.lambda3 * pose_distance(poses, q0))
    quality = counts.ravel() * np.repeat(a1 * a2, len(headings)) * a3
    return Candidates(poses, quality)


def next_best_view(
    vmap: VoxelMap,
    frontiers,
    cam: CameraModel,
    q0: Pose,
    zones: SafetyZones,
    sampler: SamplerConfig,
    rng: np.random.Generator,
) -> Pose | None:
    """Best sampled viewpoint, or ``None`` when no sample sees any frontier."""
    cand = score_candidates(vmap, frontiers, cam, q0, zones, sampler, rng)
    best = int(np.argmax(cand.quality))
    if not cand.quality[best] > 0.0:
        return None
    return Pose.from_array(cand.poses[best])
