"""Frontier voxels: unknown cells in the 26-neighbour shell of free cells."""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from .voxel_map import VoxelMap, keys_to_lines, write_atomic

_CUBE = np.ones((3, 3, 3), dtype=bool)


def surrounding_shell(cell_key, leaf_edge: float, rho: float) -> list[tuple[int, int, int]]:
    """One-voxel shell around the cube of edge ``leaf_edge`` anchored at ``cell_key``.

    ``leaf_edge`` must be a whole multiple ``k * rho``; the shell then holds
    ``(k + 2)**3 - k**3`` keys.
    """
    ratio = leaf_edge / rho
    k = int(round(ratio))
    if k < 1 or abs(ratio - k) > 1e-9:
        raise ValueError(f"leaf edge {leaf_edge} is not a positive multiple of rho={rho}")
    i0, j0, k0 = (int(c) for c in cell_key)
    shell = []
    for di in range(-1, k + 1):
        for dj in range(-1, k + 1):
            for dk in range(-1, k + 1):
                if 0 <= di < k and 0 <= dj < k and 0 <= dk < k:
                    continue
                shell.append((i0 + di, j0 + dj, k0 + dk))
    return shell


def _frontier_mask(free: np.ndarray, unknown: np.ndarray) -> np.ndarray:
    return unknown & ndimage.binary_dilation(free, structure=_CUBE)


class FrontierSet:
    """Deduplicated frontier keys, held as a mask over the map grid."""

    def __init__(self, mask: np.ndarray, offset, rho: float):
        self.mask = mask
        self.offset = np.asarray(offset, dtype=np.int64)
        self.rho = float(rho)

    @classmethod
    def empty_like(cls, vmap: VoxelMap) -> "FrontierSet":
        return cls(np.zeros(vmap.shape, dtype=bool), vmap.offset, vmap.rho)

    @classmethod
    def from_keys(cls, vmap: VoxelMap, keys) -> "FrontierSet":
        fs = cls.empty_like(vmap)
        for key in keys:
            idx = vmap.index_of(key)
            if idx is not None:
                fs.mask[idx] = True
        return fs

    @property
    def keys(self) -> np.ndarray:
        """Sorted ``(N, 3)`` key array."""
        return np.argwhere(self.mask).astype(np.int64) + self.offset

    @property
    def centers(self) -> np.ndarray:
        return (self.keys + 0.5) * self.rho

    def __len__(self) -> int:
        return int(self.mask.sum())

    def __iter__(self):
        return (tuple(int(c) for c in k) for k in self.keys)

    def __contains__(self, key) -> bool:
        g = np.asarray(key, dtype=np.int64) - self.offset
        if np.any(g < 0) or np.any(g >= self.mask.shape):
            return False
        return bool(self.mask[tuple(g)])

    def __eq__(self, other) -> bool:
        if not isinstance(other, FrontierSet):
            return NotImplemented
        return set(self) == set(other)

    def copy(self) -> "FrontierSet":
        return FrontierSet(self.mask.copy(), self.offset, self.rho)

    def save(self, path) -> None:
        write_atomic(path, keys_to_lines(self.keys.tolist()))


def rebuild(vmap: VoxelMap) -> FrontierSet:
    """Batch frontier extraction over the whole map."""
    return FrontierSet(_frontier_mask(vmap.free_mask, vmap.unknown_mask), vmap.offset, vmap.rho)


def update_after_scan(frontiers: FrontierSet, vmap: VoxelMap, touched) -> FrontierSet:
    """Refresh frontier status in the neighbourhood of the touched keys.

    Only cells within one voxel of a touched cell can change status, so the
    work is confined to the touched bounding box grown by two cells (one for
    the changed neighbourhood, one for the dilation support).
    """
    touched = np.asarray(touched, dtype=np.int64).reshape(-1, 3)
    out = frontiers.copy()
    if not len(touched):
        return out
    g = touched - vmap.offset
    shape = np.asarray(vmap.shape)
    lo = np.maximum(g.min(axis=0) - 2, 0)
    hi = np.minimum(g.max(axis=0) + 3, shape)
    box = tuple(slice(a, b) for a, b in zip(lo, hi))
    sub = _frontier_mask(vmap.free_mask[box], vmap.unknown_mask[box])
    # the outer ring of the box lacks full dilation support; keep it only where it is exact
    ilo = np.where(lo > 0, 1, 0)
    ihi = np.where(hi < shape, sub.shape - np.ones(3, dtype=int), sub.shape)
    inner = tuple(slice(a, b) for a, b in zip(ilo, ihi))
    target = tuple(slice(a + s.start, a + s.stop) for a, s in zip(lo, inner))
    out.mask[target] = sub[inner]
    return out
