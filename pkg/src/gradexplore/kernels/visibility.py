"""Discrete visible-frontier counts for many positions and headings.

Camera frame for a yaw-only pose: optical axis (z) along the heading,
x to the right, y down.  For a world offset ``d = p - t``::

    sx = dx*sin(yaw) - dy*cos(yaw)
    sy = -dz
    sz = dx*cos(yaw) + dy*sin(yaw)
"""

import math

import numpy as np

from . import njit
from .traversal import ray_clear, rays_clear_np


@njit
def in_frustum_coords(sx, sy, sz, r_min, r_max, cxz, sxz, cyz, syz):
    if cxz * sx + sxz * sz <= 0.0:
        return False
    if -cxz * sx + sxz * sz <= 0.0:
        return False
    if cyz * sy + syz * sz <= 0.0:
        return False
    if -cyz * sy + syz * sz <= 0.0:
        return False
    delta = math.sqrt(sx * sx + sy * sy + sz * sz)
    return r_min <= delta <= r_max


@njit
def visible_counts_nb(grid, off, rho, positions, cy, sy, centers, r_min, r_max, cxz, sxz, cyz, syz):
    npos = positions.shape[0]
    nyaw = cy.shape[0]
    counts = np.zeros((npos, nyaw), dtype=np.int64)
    seen = np.zeros(nyaw, dtype=np.bool_)
    reach = r_max + 1e-9
    for p in range(npos):
        x, y, z = positions[p, 0], positions[p, 1], positions[p, 2]
        for v in range(centers.shape[0]):
            dx = centers[v, 0] - x
            dy = centers[v, 1] - y
            dz = centers[v, 2] - z
            if abs(dx) > reach or abs(dy) > reach or abs(dz) > reach:
                continue
            hit = False
            for a in range(nyaw):
                sxv = dx * sy[a] - dy * cy[a]
                szv = dx * cy[a] + dy * sy[a]
                seen[a] = in_frustum_coords(sxv, -dz, szv, r_min, r_max, cxz, sxz, cyz, syz)
                hit = hit or seen[a]
            if not hit:
                continue
            if not ray_clear(grid, off, rho, x, y, z, centers[v, 0], centers[v, 1], centers[v, 2]):
                continue
            for a in range(nyaw):
                if seen[a]:
                    counts[p, a] += 1
    return counts


def frustum_mask_np(sx, sy, sz, r_min, r_max, cxz, sxz, cyz, syz):
    delta = np.sqrt(sx * sx + sy * sy + sz * sz)
    return (
        (cxz * sx + sxz * sz > 0.0)
        & (-cxz * sx + sxz * sz > 0.0)
        & (cyz * sy + syz * sz > 0.0)
        & (-cyz * sy + syz * sz > 0.0)
        & (delta >= r_min)
        & (delta <= r_max)
    )


def visible_counts_np(grid, off, rho, positions, cy, sy, centers, r_min, r_max, cxz, sxz, cyz, syz):
    positions = np.atleast_2d(positions)
    counts = np.zeros((len(positions), len(cy)), dtype=np.int64)
    reach = r_max + 1e-9
    for p, pos in enumerate(positions):
        d = centers - pos
        near = np.all(np.abs(d) <= reach, axis=1)
        if not near.any():
            continue
        d = d[near]
        dx, dy, dz = d[:, 0:1], d[:, 1:2], d[:, 2:3]
        sxv = dx * sy - dy * cy
        szv = dx * cy + dy * sy
        seen = frustum_mask_np(sxv, -dz, szv, r_min, r_max, cxz, sxz, cyz, syz)
        cand = seen.any(axis=1)
        if not cand.any():
            continue
        clear = rays_clear_np(grid, off, rho, pos[None, :], centers[near][cand])
        counts[p] = seen[cand][clear].sum(axis=0)
    return counts
