"""RRT through known space and path densification."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .camera import Pose, wrap_angle
from .view_quality import SafetyZones, zone_values
from .voxel_map import VoxelMap, write_atomic


class PlanningError(RuntimeError):
    """RRT exhausted its iteration budget without reaching the goal."""


@dataclass
class Path:
    """Ordered viewpoints; the first and last are fixed during optimization."""

    q: np.ndarray

    def __post_init__(self):
        q = np.array(self.q, dtype=np.float64)
        if q.ndim != 2 or q.shape[1] != 4 or len(q) < 2:
            raise ValueError("a path is an (n, 4) array with n >= 2")
        if not np.all(np.isfinite(q)):
            raise ValueError("path contains non-finite values")
        q[:, 3] = wrap_angle(q[:, 3])
        self.q = q

    @classmethod
    def from_poses(cls, poses) -> "Path":
        return cls(np.stack([p.as_array() for p in poses]))

    def __len__(self) -> int:
        return len(self.q)

    @property
    def viewpoints(self) -> list[Pose]:
        return [Pose.from_array(row) for row in self.q]

    @property
    def interior(self) -> np.ndarray:
        return self.q[1:-1]

    def length(self) -> float:
        return float(np.linalg.norm(np.diff(self.q[:, :3], axis=0), axis=1).sum())

    def save(self, path) -> None:
        lines = [" ".join(repr(float(v)) for v in row) for row in self.q]
        write_atomic(path, "\n".join(lines) + "\n")

    @classmethod
    def load(cls, path) -> "Path":
        rows = []
        with open(path) as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                parts = line.split()
                try:
                    if len(parts) != 4:
                        raise ValueError(f"expected 4 fields, got {len(parts)}")
                    rows.append([float(p) for p in parts])
                except ValueError as exc:
                    raise ValueError(f"{path}:{lineno}: {exc}") from None
        if len(rows) < 2:
            raise ValueError(f"{path}: a path needs at least two poses")
        return cls(np.array(rows))


def densify(path: Path, d_max: float) -> Path:
    """Insert evenly spaced poses so no segment is longer than ``d_max``."""
    if not d_max > 0:
        raise ValueError("d_max must be positive")
    q = path.q
    out = [q[0]]
    for a, b in zip(q[:-1], q[1:]):
        seg = float(np.linalg.norm(b[:3] - a[:3]))
        m = max(1, math.ceil(seg / d_max - 1e-12))
        dyaw = float(wrap_angle(b[3] - a[3]))
        for k in range(1, m):
            t = k / m
            pos = a[:3] + t * (b[:3] - a[:3])
            out.append(np.append(pos, wrap_angle(a[3] + t * dyaw)))
        out.append(b)
    return Path(np.array(out))


@dataclass(frozen=True)
class PlannerConfig:
    step: float = 1.0
    goal_bias: float = 0.1
    max_iter: int = 5000
    d_max: float = 2.0

    def __post_init__(self):
        if not (self.step > 0 and self.d_max > 0 and 0 <= self.goal_bias <= 1 and self.max_iter >= 1):
            raise ValueError("invalid planner parameters")


def red_zone_clear(vmap: VoxelMap, positions, zones: SafetyZones) -> np.ndarray:
    """True where no red-zone cell is occupied; cells outside the map count as occupied."""
    vals = zone_values(vmap, positions, zones.red, outside=1.0)
    return ~np.any(np.nan_to_num(vals, nan=-1.0) > 0.0, axis=1)


def edge_clear(vmap: VoxelMap, a, b, zones: SafetyZones) -> bool:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    n = max(1, math.ceil(np.linalg.norm(b - a) / (0.5 * vmap.rho)))
    t = np.linspace(0.0, 1.0, n + 1)[:, None]
    return bool(red_zone_clear(vmap, a + t * (b - a), zones).all())


def plan_rrt(
    vmap: VoxelMap,
    q0: Pose,
    q_goal: Pose,
    zones: SafetyZones,
    rng: np.random.Generator,
    cfg: PlannerConfig = PlannerConfig(),
) -> Path:
    """Plain RRT over known-free cells; occupied cells block, unknown ones do not.

    The returned path is densified to ``cfg.d_max`` and ends exactly at
    ``q_goal``.  Intermediate waypoints face their direction of travel.
    """
    start = q0.position
    goal = q_goal.position
    if not red_zone_clear(vmap, np.stack([start, goal]), zones).all():
        raise PlanningError("start or goal red zone intersects an occupied voxel")
    free = vmap.grid_keys(vmap.free_mask)
    if not len(free):
        raise PlanningError("no free voxels to sample")
    nodes = [start]
    parent = [-1]
    found = -1
    if edge_clear(vmap, start, goal, zones):
        nodes.append(goal)
        parent.append(0)
        found = 1
    it = 0
    while found < 0 and it < cfg.max_iter:
        it += 1
        if rng.random() < cfg.goal_bias:
            target = goal
        else:
            target = (free[rng.integers(len(free))] + rng.random(3)) * vmap.rho
        pts = np.asarray(nodes)
        near = int(np.argmin(np.sum((pts - target) ** 2, axis=1)))
        diff = target - pts[near]
        dist = float(np.linalg.norm(diff))
        if dist < 1e-9:
            continue
        new = pts[near] + diff * min(1.0, cfg.step / dist)
        if not edge_clear(vmap, pts[near], new, zones):
            continue
        nodes.append(new)
        parent.append(near)
        if np.linalg.norm(new - goal) <= cfg.step and edge_clear(vmap, new, goal, zones):
            nodes.append(goal)
            parent.append(len(nodes) - 2)
            found = len(nodes) - 1
    if found < 0:
        raise PlanningError(f"no path after {cfg.max_iter} iterations")
    chain = []
    k = found
    while k >= 0:
        chain.append(nodes[k])
        k = parent[k]
    chain.reverse()
    waypoints = np.asarray(chain)
    yaws = np.empty(len(waypoints))
    yaws[0] = q0.yaw
    yaws[-1] = q_goal.yaw
    for i in range(1, len(waypoints) - 1):
        d = waypoints[i + 1] - waypoints[i]
        yaws[i] = math.atan2(d[1], d[0])
    return densify(Path(np.column_stack([waypoints, yaws])), cfg.d_max)
