"""Mark the cells touched by a batch of rays sharing one origin.

The stamp grid receives 1 for cells crossed by a ray (or ray ends that
missed) and 2 for ray ends that hit a surface; a hit wins over any miss
of the same scan.
"""

import numpy as np

from . import njit
from .traversal import dda_batch, dda_collect

MISS = 1
HIT = 2


@njit
def stamp_scan_nb(stamp, off, rho, origin, ends, hits, buf):
    nx, ny, nz = stamp.shape
    for r in range(ends.shape[0]):
        n = dda_collect(
            origin[0], origin[1], origin[2], ends[r, 0], ends[r, 1], ends[r, 2], rho, buf
        )
        for m in range(n):
            gx = buf[m, 0] - off[0]
            gy = buf[m, 1] - off[1]
            gz = buf[m, 2] - off[2]
            if 0 <= gx < nx and 0 <= gy < ny and 0 <= gz < nz:
                if stamp[gx, gy, gz] == 0:
                    stamp[gx, gy, gz] = 1
        gx = int(np.floor(ends[r, 0] / rho)) - off[0]
        gy = int(np.floor(ends[r, 1] / rho)) - off[1]
        gz = int(np.floor(ends[r, 2] / rho)) - off[2]
        if 0 <= gx < nx and 0 <= gy < ny and 0 <= gz < nz:
            if hits[r]:
                stamp[gx, gy, gz] = 2
            elif stamp[gx, gy, gz] == 0:
                stamp[gx, gy, gz] = 1


def stamp_scan_np(stamp, off, rho, origin, ends, hits):
    shape = np.asarray(stamp.shape)
    off = np.asarray(off)

    def put(keys, value):
        g = keys - off
        inside = np.all((g >= 0) & (g < shape), axis=1)
        g = g[inside]
        np.maximum.at(stamp, (g[:, 0], g[:, 1], g[:, 2]), value)

    origin = np.asarray(origin, dtype=np.float64)
    for _, _, keys in dda_batch(origin[None, :], ends, rho):
        put(keys, MISS)
    end_keys = np.floor(ends / rho).astype(np.int64)
    hits = np.asarray(hits, dtype=bool)
    put(end_keys[~hits], MISS)
    put(end_keys[hits], HIT)
