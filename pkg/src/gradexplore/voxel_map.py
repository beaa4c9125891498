"""Uniform-resolution log-odds occupancy map.

The store is keyed by integer voxel keys ``floor(p / rho)``.  Because the
mapped region is a bounded box, the key space is backed by a dense array
over the bounds plus a ``stored`` mask; keys never written are absent and
read as unknown (log-odds 0, probability 0.5).
"""

from __future__ import annotations

import math
import os
import tempfile
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from . import kernels
from .kernels.scan import HIT, MISS, stamp_scan_nb, stamp_scan_np
from .kernels.traversal import dda_batch, dda_collect, max_cells

VoxelKey = tuple[int, int, int]

_GRID_EPS = 1e-9


class BoundsError(ValueError):
    """A point or key lies outside the mapped region."""


@dataclass(frozen=True)
class Aabb:
    min: tuple[float, float, float]
    max: tuple[float, float, float]

    def __post_init__(self):
        lo = tuple(float(v) for v in self.min)
        hi = tuple(float(v) for v in self.max)
        if len(lo) != 3 or len(hi) != 3:
            raise ValueError("Aabb corners must be 3-vectors")
        if any(a > b for a, b in zip(lo, hi)):
            raise ValueError(f"Aabb min {lo} exceeds max {hi}")
        object.__setattr__(self, "min", lo)
        object.__setattr__(self, "max", hi)

    @classmethod
    def centered(cls, center, extent) -> "Aabb":
        c = np.asarray(center, dtype=np.float64)
        h = 0.5 * np.asarray(extent, dtype=np.float64)
        return cls(tuple(c - h), tuple(c + h))

    @property
    def lo(self) -> np.ndarray:
        return np.asarray(self.min)

    @property
    def hi(self) -> np.ndarray:
        return np.asarray(self.max)

    def contains(self, p) -> bool:
        p = np.asarray(p, dtype=np.float64)
        return bool(np.all(p >= self.lo) and np.all(p <= self.hi))

    def contains_box(self, other: "Aabb") -> bool:
        return bool(np.all(other.lo >= self.lo) and np.all(other.hi <= self.hi))


def key_of(p, rho: float) -> VoxelKey:
    """Voxel key of point ``p``: componentwise ``floor(p / rho)``."""
    if rho <= 0:
        raise ValueError("resolution must be positive")
    i, j, k = (int(math.floor(float(c) / rho)) for c in p)
    return (i, j, k)


def keys_of(points, rho: float) -> np.ndarray:
    return np.floor(np.asarray(points, dtype=np.float64) / rho).astype(np.int64)


def voxel_center(key, rho: float) -> np.ndarray:
    return (np.asarray(key, dtype=np.float64) + 0.5) * rho


def raycast_voxels(origin, endpoint, rho: float) -> list[VoxelKey]:
    """Keys pierced by the segment, origin cell first, endpoint cell excluded."""
    if rho <= 0:
        raise ValueError("resolution must be positive")
    o = np.asarray(origin, dtype=np.float64)
    e = np.asarray(endpoint, dtype=np.float64)
    if kernels.resolve() == "numba":
        buf = np.empty((max_cells(o, e, rho), 3), dtype=np.int64)
        n = dda_collect(o[0], o[1], o[2], e[0], e[1], e[2], float(rho), buf)
        return [tuple(int(c) for c in row) for row in buf[:n]]
    return [
        tuple(int(c) for c in keys[0]) for _, _, keys in dda_batch(o[None, :], e[None, :], rho)
    ]


def grid_extent(bounds: Aabb, rho: float) -> tuple[np.ndarray, tuple[int, int, int]]:
    """Key offset and grid shape covering ``bounds`` (half-open at the top)."""
    lo = np.floor(bounds.lo / rho + _GRID_EPS).astype(np.int64)
    hi = np.ceil(bounds.hi / rho - _GRID_EPS).astype(np.int64)
    shape = tuple(int(v) for v in np.maximum(hi - lo, 1))
    return lo, shape


class VoxelMap:
    """Probabilistic occupancy over a bounded region, updated in log-odds."""

    def __init__(
        self,
        bounds: Aabb,
        rho: float = 0.3,
        l_hit: float = 0.85,
        l_miss: float = -0.4,
        l_min: float = -2.0,
        l_max: float = 3.5,
    ):
        if rho <= 0:
            raise ValueError("rho must be positive")
        if not (l_hit > 0 > l_miss):
            raise ValueError("need l_hit > 0 > l_miss")
        if not (l_min < 0 < l_max):
            raise ValueError("need l_min < 0 < l_max")
        self.bounds = bounds
        self.rho = float(rho)
        self.l_hit, self.l_miss = float(l_hit), float(l_miss)
        self.l_min, self.l_max = float(l_min), float(l_max)
        self.offset, self.shape = grid_extent(bounds, self.rho)
        self.log_odds = np.zeros(self.shape, dtype=np.float64)
        self.stored = np.zeros(self.shape, dtype=bool)

    # -- key handling ---------------------------------------------------------

    def index_of(self, key) -> tuple[int, int, int] | None:
        g = np.asarray(key, dtype=np.int64) - self.offset
        if np.any(g < 0) or np.any(g >= self.shape):
            return None
        return (int(g[0]), int(g[1]), int(g[2]))

    def in_bounds(self, key) -> bool:
        return self.index_of(key) is not None

    def key_of(self, p) -> VoxelKey:
        return key_of(p, self.rho)

    def center(self, key) -> np.ndarray:
        return voxel_center(key, self.rho)

    def grid_keys(self, mask: np.ndarray) -> np.ndarray:
        """Keys (lexicographic order) of the cells selected by a grid mask."""
        return np.argwhere(mask).astype(np.int64) + self.offset

    def values_at(self, keys, outside: float = 0.0) -> np.ndarray:
        """Log-odds at many keys; keys outside the grid read as ``outside``."""
        g = np.asarray(keys, dtype=np.int64).reshape(-1, 3) - self.offset
        inside = np.all((g >= 0) & (g < np.asarray(self.shape)), axis=1)
        out = np.full(len(g), float(outside))
        gi = g[inside]
        out[inside] = self.log_odds[gi[:, 0], gi[:, 1], gi[:, 2]]
        return out

    # -- queries --------------------------------------------------------------

    def __contains__(self, key) -> bool:
        idx = self.index_of(key)
        return idx is not None and bool(self.stored[idx])

    def __len__(self) -> int:
        return int(self.stored.sum())

    def log_odds_at(self, key) -> float:
        idx = self.index_of(key)
        return 0.0 if idx is None else float(self.log_odds[idx])

    def occupancy(self, key) -> float:
        idx = self.index_of(key)
        if idx is None or not self.stored[idx]:
            return 0.5
        return 1.0 / (1.0 + math.exp(-float(self.log_odds[idx])))

    def is_free(self, key) -> bool:
        return self.log_odds_at(key) < 0.0

    def is_occupied(self, key) -> bool:
        return self.log_odds_at(key) > 0.0

    def is_unknown(self, key) -> bool:
        return self.log_odds_at(key) == 0.0

    @property
    def free_mask(self) -> np.ndarray:
        return self.log_odds < 0.0

    @property
    def occupied_mask(self) -> np.ndarray:
        return self.log_odds > 0.0

    @property
    def unknown_mask(self) -> np.ndarray:
        return self.log_odds == 0.0

    # -- updates --------------------------------------------------------------

    def _update_cell(self, idx, delta: float) -> None:
        self.log_odds[idx] = min(self.l_max, max(self.l_min, self.log_odds[idx] + delta))
        self.stored[idx] = True

    def integrate_ray(self, origin, endpoint, hit: bool) -> None:
        """Single-ray binary Bayes update: misses along the ray, hit or miss at the end."""
        o_key, e_key = self.key_of(origin), self.key_of(endpoint)
        if self.index_of(o_key) is None or self.index_of(e_key) is None:
            raise BoundsError(f"ray {tuple(origin)} -> {tuple(endpoint)} leaves the map bounds")
        for key in raycast_voxels(origin, endpoint, self.rho):
            idx = self.index_of(key)
            if idx is not None:
                self._update_cell(idx, self.l_miss)
        self._update_cell(self.index_of(e_key), self.l_hit if hit else self.l_miss)

    def integrate_scan(self, origin, endpoints, hits, backend=None) -> np.ndarray:
        """Fuse one scan; each touched cell is updated once (a hit beats a miss).

        Returns the keys of the touched cells.
        """
        origin = np.asarray(origin, dtype=np.float64)
        endpoints = np.atleast_2d(np.asarray(endpoints, dtype=np.float64))
        hits = np.asarray(hits, dtype=bool).reshape(-1)
        if self.index_of(self.key_of(origin)) is None:
            raise BoundsError(f"scan origin {tuple(origin)} outside map bounds")
        if len(endpoints):
            g = keys_of(endpoints, self.rho) - self.offset
            if np.any(g < 0) or np.any(g >= np.asarray(self.shape)):
                raise BoundsError("scan endpoint outside map bounds")
        stamp = np.zeros(self.shape, dtype=np.int8)
        if kernels.resolve(backend) == "numba":
            span = np.abs(keys_of(endpoints, self.rho) - keys_of(origin[None, :], self.rho))
            cap = int(span.sum(axis=1).max(initial=0)) + 2
            buf = np.empty((cap, 3), dtype=np.int64)
            stamp_scan_nb(stamp, self.offset, self.rho, origin, endpoints, hits, buf)
        else:
            stamp_scan_np(stamp, self.offset, self.rho, origin, endpoints, hits)
        hit, miss = stamp == HIT, stamp == MISS
        self.log_odds[hit] = np.minimum(self.log_odds[hit] + self.l_hit, self.l_max)
        self.log_odds[miss] = np.maximum(self.log_odds[miss] + self.l_miss, self.l_min)
        touched = stamp > 0
        self.stored |= touched
        return self.grid_keys(touched)

    def copy(self) -> "VoxelMap":
        other = VoxelMap.__new__(VoxelMap)
        other.__dict__.update(self.__dict__)
        other.log_odds = self.log_odds.copy()
        other.stored = self.stored.copy()
        return other

    def set_log_odds(self, key, value: float) -> None:
        idx = self.index_of(key)
        if idx is None:
            raise BoundsError(f"key {tuple(key)} outside map bounds")
        self.log_odds[idx] = min(self.l_max, max(self.l_min, float(value)))
        self.stored[idx] = True

    # -- snapshot text format ------------------------------------------------

    def save(self, path) -> None:
        lines = [f"rho {self.rho!r}", "bounds " + " ".join(repr(v) for v in self.bounds.min + self.bounds.max)]
        keys = self.grid_keys(self.stored)
        vals = self.log_odds[self.stored]
        lines.extend(f"{i} {j} {k} {v!r}" for (i, j, k), v in zip(keys.tolist(), vals.tolist()))
        write_atomic(path, "\n".join(lines) + "\n")

    @classmethod
    def load(cls, path, bounds: Aabb | None = None, **params) -> "VoxelMap":
        rho = None
        entries = []
        with open(path) as fh:
            for lineno, raw in enumerate(fh, 1):
                parts = raw.split()
                if not parts or parts[0].startswith("#"):
                    continue
                try:
                    if parts[0] == "rho":
                        rho = float(parts[1])
                    elif parts[0] == "bounds":
                        vals = [float(v) for v in parts[1:7]]
                        if len(vals) != 6:
                            raise ValueError("bounds needs six numbers")
                        bounds = bounds or Aabb(tuple(vals[:3]), tuple(vals[3:]))
                    else:
                        if len(parts) != 4:
                            raise ValueError("expected 'i j k l'")
                        entries.append((int(parts[0]), int(parts[1]), int(parts[2]), float(parts[3])))
                except (ValueError, IndexError) as exc:
                    raise ValueError(f"{path}:{lineno}: malformed map line: {raw.strip()!r} ({exc})") from None
        if rho is None:
            raise ValueError(f"{path}: missing 'rho' header")
        if bounds is None:
            if not entries:
                raise ValueError(f"{path}: no bounds header and no voxels")
            keys = np.array([e[:3] for e in entries])
            bounds = Aabb(tuple(keys.min(0) * rho), tuple((keys.max(0) + 1) * rho))
        vmap = cls(bounds, rho=rho, **params)
        for i, j, k, v in entries:
            idx = vmap.index_of((i, j, k))
            if idx is None:
                raise ValueError(f"{path}: voxel {(i, j, k)} outside bounds")
            vmap.log_odds[idx] = v
            vmap.stored[idx] = True
        return vmap


def write_atomic(path, text: str) -> None:
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        # mkstemp creates 0600; honour the umask like a plain open() would
        umask = os.umask(0)
        os.umask(umask)
        os.chmod(tmp, 0o666 & ~umask)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def keys_to_lines(keys: Iterable) -> str:
    return "".join(f"{int(i)} {int(j)} {int(k)}\n" for i, j, k in keys)
