"""Slow reference implementations used by the test suite and ``gradexplore check``.

These avoid the production kernels entirely: traversal is derived from the
sorted list of grid-plane crossings, and the path gain is a literal scalar
loop over viewpoints and voxels.
"""

from __future__ import annotations

import math

import numpy as np
from .camera import CameraModel, Pose, to_camera_frame

_MERGE = 1e-9


def crossing_cells(origin, end, rho: float) -> list[tuple[int, int, int]]:
    """Cells pierced by the segment, from the midpoints between consecutive plane crossings.

    Crossings closer than ``1e-9`` in the segment parameter are merged, so a
    segment that only touches an edge or corner of a cell does not enter it.
    The origin's own cell leads even when the origin sits on a face, and
    the end cell is dropped.
    """
    o = np.asarray(origin, dtype=float)
    e = np.asarray(end, dtype=float)
    d = e - o
    ts = [0.0, 1.0]
    for ax in range(3):
        if d[ax] == 0.0:
            continue
        a, b = sorted((o[ax] / rho, e[ax] / rho))
        for m in range(math.floor(a) + 1, math.ceil(b)):
            ts.append((m * rho - o[ax]) / d[ax])
    ts.sort()
    merged = [ts[0]]
    for t in ts[1:]:
        if t - merged[-1] > _MERGE:
            merged.append(t)
    end_key = tuple(int(v) for v in np.floor(e / rho))
    cells = [tuple(int(v) for v in np.floor(o / rho))]
    for t0, t1 in zip(merged[:-1], merged[1:]):
        p = o + 0.5 * (t0 + t1) * d
        key = tuple(int(v) for v in np.floor(p / rho))
        if not cells or cells[-1] != key:
            cells.append(key)
    while cells and cells[-1] == end_key:
        cells.pop()
    return cells


def dense_sample_cells(origin, end, rho: float, step: float | None = None) -> list[tuple[int, int, int]]:
    """Cells hit by points sampled every ``step`` (default ``rho / 100``) along the segment."""
    o = np.asarray(origin, dtype=float)
    e = np.asarray(end, dtype=float)
    step = rho / 100 if step is None else step
    n = max(1, int(math.ceil(np.linalg.norm(e - o) / step)))
    t = np.linspace(0.0, 1.0, n + 1)[:, None]
    keys = np.floor((o + t * (e - o)) / rho).astype(int)
    end_key = tuple(int(v) for v in np.floor(e / rho))
    cells = []
    for k in map(tuple, keys.tolist()):
        if k == end_key:
            break
        if not cells or cells[-1] != k:
            cells.append(k)
    return cells


def _log_odds(vmap, key) -> float:
    g = tuple(int(k - o) for k, o in zip(key, vmap.offset))
    if any(c < 0 or c >= s for c, s in zip(g, vmap.shape)):
        return math.nan
    return float(vmap.log_odds[g])


def clear_line(vmap, origin, target_key) -> bool:
    """Every cell strictly between the camera cell and the target is known free."""
    c = (np.asarray(target_key, dtype=float) + 0.5) * vmap.rho
    cam_key = tuple(int(v) for v in np.floor(np.asarray(origin, dtype=float) / vmap.rho))
    for key in crossing_cells(origin, c, vmap.rho):
        if key == cam_key:
            continue
        if not _log_odds(vmap, key) < 0.0:
            return False
    return True


def in_frustum_ref(cam: CameraModel, q: Pose, key, rho: float) -> bool:
    s = to_camera_frame(q, (np.asarray(key, dtype=float) + 0.5) * rho)
    if not all(float(n @ s) > 0.0 for n in cam.normals):
        return False
    return cam.r_min <= float(np.linalg.norm(s)) <= cam.r_max


def visible_count_ref(vmap, frontier_keys, cam: CameraModel, q: Pose) -> int:
    return sum(
        1
        for key in map(tuple, np.asarray(frontier_keys).tolist())
        if in_frustum_ref(cam, q, key, vmap.rho) and clear_line(vmap, q.position, key)
    )


def fuzzy_ref(cam: CameraModel, q: Pose, key, rho: float) -> float:
    """Filter value from scalar math: range ramp times the two angular ramps."""
    sx, sy, sz = (float(v) for v in to_camera_frame(q, (np.asarray(key, dtype=float) + 0.5) * rho))
    delta = math.sqrt(sx * sx + sy * sy + sz * sz)
    r = cam.r_max
    phi_d = 1.0 if delta <= r else (2.0 - delta / r if delta < 2 * r else 0.0)

    def ang(lat, ax, fov):
        n = math.hypot(lat, ax)
        if n == 0.0:
            return 1.0
        cu = ax / n
        c = math.cos(fov / 2)
        return 1.0 if cu >= c else (1.0 + cu) / (1.0 + c)

    return phi_d * ang(sx, sz, cam.fov_xz) * ang(sy, sz, cam.fov_yz)


def ig_path_ref(vmap, frontier_keys, cam: CameraModel, poses) -> float:
    """Literal path gain: interior viewpoints in order, voxels erased once truly seen."""
    remaining = [tuple(k) for k in np.asarray(frontier_keys).tolist()]
    total = 0.0
    half = 2.0 * cam.r_max
    for row in np.asarray(poses, dtype=float)[1:-1]:
        q = Pose.from_array(row)
        keep = []
        for key in remaining:
            s = to_camera_frame(q, (np.asarray(key, dtype=float) + 0.5) * vmap.rho)
            scored = (
                np.all(np.abs(s) <= half)
                and float(np.linalg.norm(s)) < half
                and clear_line(vmap, q.position, key)
            )
            if scored:
                total += fuzzy_ref(cam, q, key, vmap.rho)
                if in_frustum_ref(cam, q, key, vmap.rho):
                    continue
            keep.append(key)
        remaining = keep
    return total


def frontier_keys_ref(vmap) -> set[tuple[int, int, int]]:
    """Unknown cells with at least one free cell among their 26 neighbours, by direct scan."""
    free = vmap.free_mask
    unknown = vmap.unknown_mask
    out = set()
    shape = free.shape
    for g in zip(*np.nonzero(unknown)):
        lo = [max(c - 1, 0) for c in g]
        hi = [min(c + 2, s) for c, s in zip(g, shape)]
        if free[lo[0]:hi[0], lo[1]:hi[1], lo[2]:hi[2]].any():
            out.add(tuple(int(c + o) for c, o in zip(g, vmap.offset)))
    return out


def reachable_ref(free: np.ndarray, start_index) -> np.ndarray:
    """6-connected flood fill from ``start_index`` by explicit queue."""
    seen = np.zeros_like(free, dtype=bool)
    if not free[tuple(start_index)]:
        return seen
    stack = [tuple(start_index)]
    seen[tuple(start_index)] = True
    while stack:
        c = stack.pop()
        for ax in range(3):
            for dlt in (-1, 1):
                n = list(c)
                n[ax] += dlt
                n = tuple(n)
                if 0 <= n[ax] < free.shape[ax] and free[n] and not seen[n]:
                    seen[n] = True
                    stack.append(n)
    return seen

