"""Fuzzy-filtered path information gain with forward-mode partials.

Each term depends on a single viewpoint, so four partials per term are
carried alongside the value; the gradient costs a fixed multiple of the
value regardless of path length.
"""

import math

import numpy as np

from . import njit
from .traversal import ray_clear
from .visibility import in_frustum_coords


@njit
def ig_path_nb(
    grid, off, rho, poses, cth, sth, centers,
    r_min, r_max, cxz, sxz, cyz, syz,
    want_grad, scored,
):
    """Sweep over viewpoints, erasing voxels once they fall in a true frustum.

    ``scored`` is either an ``(nq, nf)`` boolean array that receives the
    pairs that passed the cube and occlusion gates, or a zero-size array.
    """
    nq = poses.shape[0]
    nf = centers.shape[0]
    record = scored.shape[0] == nq and scored.shape[1] == nf and nq > 0
    alive = np.ones(nf, dtype=np.bool_)
    grad = np.zeros((nq, 4))
    total = 0.0
    half = 2.0 * r_max
    kx_ramp = 1.0 / (1.0 + cxz)
    ky_ramp = 1.0 / (1.0 + cyz)
    dsx = np.zeros(4)
    dsz = np.zeros(4)
    for a in range(nq):
        x, y, z = poses[a, 0], poses[a, 1], poses[a, 2]
        c = cth[a]
        s = sth[a]
        g0 = 0.0
        g1 = 0.0
        g2 = 0.0
        g3 = 0.0
        for v in range(nf):
            if not alive[v]:
                continue
            dx = centers[v, 0] - x
            dy = centers[v, 1] - y
            dz = centers[v, 2] - z
            sx = dx * s - dy * c
            sy = -dz
            sz = dx * c + dy * s
            if abs(sx) > half or abs(sy) > half or abs(sz) > half:
                continue
            delta = math.sqrt(sx * sx + sy * sy + sz * sz)
            if delta >= half:
                continue
            if not ray_clear(grid, off, rho, x, y, z, centers[v, 0], centers[v, 1], centers[v, 2]):
                continue
            if record:
                scored[a, v] = True

            if delta <= r_max:
                pd = 1.0
                kd = 0.0
            else:
                pd = 2.0 - delta / r_max
                kd = -1.0 / r_max
            rxz = math.sqrt(sx * sx + sz * sz)
            px = 1.0
            kx = 0.0
            if rxz > 0.0:
                cu = sz / rxz
                if cu < cxz:
                    px = (1.0 + cu) * kx_ramp
                    kx = kx_ramp
            ryz = math.sqrt(sy * sy + sz * sz)
            py = 1.0
            ky = 0.0
            if ryz > 0.0:
                cu = sz / ryz
                if cu < cyz:
                    py = (1.0 + cu) * ky_ramp
                    ky = ky_ramp
            total += pd * px * py

            if want_grad and (kd != 0.0 or kx != 0.0 or ky != 0.0):
                dsx[0] = -s
                dsx[1] = c
                dsx[2] = 0.0
                dsx[3] = sz
                dsz[0] = -c
                dsz[1] = -s
                dsz[2] = 0.0
                dsz[3] = -sx
                for i in range(4):
                    dsy = 1.0 if i == 2 else 0.0
                    dphi = 0.0
                    if kd != 0.0:
                        ddelta = (sx * dsx[i] + sy * dsy + sz * dsz[i]) / delta
                        dphi += kd * ddelta * px * py
                    if kx != 0.0:
                        dcu = sx * (sx * dsz[i] - sz * dsx[i]) / (rxz * rxz * rxz)
                        dphi += pd * kx * dcu * py
                    if ky != 0.0:
                        dcu = sy * (sy * dsz[i] - sz * dsy) / (ryz * ryz * ryz)
                        dphi += pd * px * ky * dcu
                    if i == 0:
                        g0 += dphi
                    elif i == 1:
                        g1 += dphi
                    elif i == 2:
                        g2 += dphi
                    else:
                        g3 += dphi

            if in_frustum_coords(sx, sy, sz, r_min, r_max, cxz, sxz, cyz, syz):
                alive[v] = False
        grad[a, 0] = g0
        grad[a, 1] = g1
        grad[a, 2] = g2
        grad[a, 3] = g3
    return total, grad
