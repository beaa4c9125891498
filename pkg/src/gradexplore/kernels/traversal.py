"""Grid-stepping line voxelization (Amanatides-Woo style).

Crossing parameters are recomputed from the current cell index on every
step instead of being accumulated, so the numba loop, the numpy batch and
the test oracle all produce the same floating point values.  Crossings
closer than ``TIE_EPS`` (in segment parameter units) are taken as one
simultaneous step: a segment that only touches an edge or corner of a cell
does not pierce it.  Likewise a crossing at the very end of the segment is
not taken.  The origin's own cell always comes first, even when the origin
sits on a cell face.
"""

import math

import numpy as np

from . import njit

TIE_EPS = 1e-9


@njit
def _next_crossing(idx, o, d, rho):
    if d > 0.0:
        return ((idx + 1) * rho - o) / d
    if d < 0.0:
        return (idx * rho - o) / d
    return math.inf


@njit
def dda_collect(ox, oy, oz, ex, ey, ez, rho, out):
    """Write pierced keys (origin cell first, end cell excluded) into ``out``."""
    ix = int(math.floor(ox / rho))
    iy = int(math.floor(oy / rho))
    iz = int(math.floor(oz / rho))
    jx = int(math.floor(ex / rho))
    jy = int(math.floor(ey / rho))
    jz = int(math.floor(ez / rho))
    dx = ex - ox
    dy = ey - oy
    dz = ez - oz
    sx = 1 if dx > 0.0 else (-1 if dx < 0.0 else 0)
    sy = 1 if dy > 0.0 else (-1 if dy < 0.0 else 0)
    sz = 1 if dz > 0.0 else (-1 if dz < 0.0 else 0)
    n = 0
    cap = out.shape[0]
    while n < cap:
        if ix == jx and iy == jy and iz == jz:
            break
        out[n, 0] = ix
        out[n, 1] = iy
        out[n, 2] = iz
        n += 1
        tx = _next_crossing(ix, ox, dx, rho)
        ty = _next_crossing(iy, oy, dy, rho)
        tz = _next_crossing(iz, oz, dz, rho)
        tmin = min(tx, min(ty, tz))
        if tmin >= 1.0 - TIE_EPS:
            break
        if tx - tmin <= TIE_EPS:
            ix += sx
        if ty - tmin <= TIE_EPS:
            iy += sy
        if tz - tmin <= TIE_EPS:
            iz += sz
    return n


@njit
def ray_clear(grid, off, rho, ox, oy, oz, ex, ey, ez):
    """True iff every cell strictly between the origin cell and the end cell is free.

    ``grid`` holds log-odds; a cell is free iff it lies inside the grid and
    its log-odds is negative.
    """
    ix = int(math.floor(ox / rho))
    iy = int(math.floor(oy / rho))
    iz = int(math.floor(oz / rho))
    jx = int(math.floor(ex / rho))
    jy = int(math.floor(ey / rho))
    jz = int(math.floor(ez / rho))
    dx = ex - ox
    dy = ey - oy
    dz = ez - oz
    sx = 1 if dx > 0.0 else (-1 if dx < 0.0 else 0)
    sy = 1 if dy > 0.0 else (-1 if dy < 0.0 else 0)
    sz = 1 if dz > 0.0 else (-1 if dz < 0.0 else 0)
    nx, ny, nz = grid.shape
    cap = abs(jx - ix) + abs(jy - iy) + abs(jz - iz) + 2
    first = True
    for _ in range(cap):
        if ix == jx and iy == jy and iz == jz:
            break
        if not first:
            gx = ix - off[0]
            gy = iy - off[1]
            gz = iz - off[2]
            if gx < 0 or gy < 0 or gz < 0 or gx >= nx or gy >= ny or gz >= nz:
                return False
            if grid[gx, gy, gz] >= 0.0:
                return False
        first = False
        tx = _next_crossing(ix, ox, dx, rho)
        ty = _next_crossing(iy, oy, dy, rho)
        tz = _next_crossing(iz, oz, dz, rho)
        tmin = min(tx, min(ty, tz))
        if tmin >= 1.0 - TIE_EPS:
            break
        if tx - tmin <= TIE_EPS:
            ix += sx
        if ty - tmin <= TIE_EPS:
            iy += sy
        if tz - tmin <= TIE_EPS:
            iz += sz
    return True


def max_cells(origin, end, rho: float) -> int:
    a = np.floor(np.asarray(origin, dtype=np.float64) / rho)
    b = np.floor(np.asarray(end, dtype=np.float64) / rho)
    return int(np.abs(b - a).sum()) + 2


# -- numpy batch route ---------------------------------------------------------


def _crossings_np(idx, o, d, rho):
    # tiny components overflow to inf, which is the right "never crosses" answer
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        t = np.where(
            d > 0.0,
            ((idx + 1) * rho - o) / d,
            np.where(d < 0.0, (idx * rho - o) / d, np.inf),
        )
    return t


def dda_batch(origins, ends, rho: float):
    """Step many segments in lockstep.

    Yields ``(step, ray_index, keys)`` where ``keys`` are the cells entered
    by the active rays at that step; ``step == 0`` is the origin cell.
    """
    origins = np.atleast_2d(np.asarray(origins, dtype=np.float64))
    ends = np.atleast_2d(np.asarray(ends, dtype=np.float64))
    origins, ends = np.broadcast_arrays(origins, ends)
    cur = np.floor(origins / rho).astype(np.int64)
    end = np.floor(ends / rho).astype(np.int64)
    d = ends - origins
    sgn = np.sign(d).astype(np.int64)
    ray = np.arange(len(origins))
    o = origins
    step = 0
    while ray.size:
        live = np.any(cur != end, axis=1)
        ray, cur, end, d, sgn, o = ray[live], cur[live], end[live], d[live], sgn[live], o[live]
        if not ray.size:
            break
        yield step, ray, cur.copy()
        t = _crossings_np(cur, o, d, rho)
        tmin = t.min(axis=1)
        live = tmin < 1.0 - TIE_EPS
        advance = (t - tmin[:, None]) <= TIE_EPS
        cur = cur + np.where(advance, sgn, 0)
        ray, cur, end, d, sgn, o = ray[live], cur[live], end[live], d[live], sgn[live], o[live]
        step += 1


def rays_clear_np(grid, off, rho: float, origins, ends) -> np.ndarray:
    origins = np.atleast_2d(np.asarray(origins, dtype=np.float64))
    ends = np.atleast_2d(np.asarray(ends, dtype=np.float64))
    origins, ends = np.broadcast_arrays(origins, ends)
    clear = np.ones(len(ends), dtype=bool)
    shape = np.asarray(grid.shape)
    off = np.asarray(off)
    for step, ray, keys in dda_batch(origins, ends, rho):
        if step == 0:
            continue
        g = keys - off
        inside = np.all((g >= 0) & (g < shape), axis=1)
        free = np.zeros(len(ray), dtype=bool)
        gi = g[inside]
        free[inside] = grid[gi[:, 0], gi[:, 1], gi[:, 2]] < 0.0
        clear[ray[~free]] = False
    return clear


@njit
def rays_clear_nb(grid, off, rho, origins, ends):
    n = ends.shape[0]
    out = np.empty(n, dtype=np.bool_)
    for i in range(n):
        out[i] = ray_clear(
            grid, off, rho,
            origins[i, 0], origins[i, 1], origins[i, 2],
            ends[i, 0], ends[i, 1], ends[i, 2],
        )
    return out
