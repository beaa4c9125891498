import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gradexplore.voxel_map import Aabb, BoundsError, VoxelMap, grid_extent, key_of, raycast_voxels

from conftest import box_map

coord = st.floats(-50, 50, allow_nan=False)


def test_key_of_floors_negative_coordinates():
    assert key_of((-0.01, 0.0, 0.29), 0.3) == (-1, 0, 0)
    assert key_of((0.3, 0.6, -0.3), 0.3) == (1, 2, -1)


def test_key_of_rejects_bad_resolution():
    with pytest.raises(ValueError):
        key_of((0, 0, 0), 0.0)


@given(coord, coord, coord)
def test_point_lies_in_its_voxel(x, y, z):
    rho = 0.3
    k = np.array(key_of((x, y, z), rho))
    assert np.all(k * rho <= np.array([x, y, z]) + 1e-12)
    assert np.all(np.array([x, y, z]) < (k + 1) * rho + 1e-12)


def test_aabb_validation_and_containment():
    with pytest.raises(ValueError):
        Aabb((1, 0, 0), (0, 1, 1))
    box = Aabb.centered((1, 1, 1), (2, 2, 2))
    assert box.contains((0, 0, 0)) and not box.contains((2.1, 1, 1))
    assert box.contains_box(Aabb((0.5, 0.5, 0.5), (1, 1, 1)))


def test_grid_extent_covers_bounds():
    off, shape = grid_extent(Aabb((0, 0, 0), (19.8, 9.9, 3.0)), 0.3)
    assert tuple(off) == (0, 0, 0)
    assert shape == (66, 33, 10)


def test_unknown_by_default():
    vmap = box_map()
    key = (3, 3, 3)
    assert vmap.is_unknown(key) and key not in vmap and vmap.occupancy(key) == 0.5
    assert len(vmap) == 0


def test_single_ray_update(backend):
    vmap = box_map()
    vmap.integrate_ray((0.15, 0.15, 0.15), (1.05, 0.15, 0.15), hit=True)
    for i in range(3):
        assert vmap.log_odds_at((i, 0, 0)) == pytest.approx(-0.4)
    assert vmap.log_odds_at((3, 0, 0)) == pytest.approx(0.85)
    assert vmap.is_occupied((3, 0, 0)) and vmap.is_free((0, 0, 0))
    assert vmap.occupancy((3, 0, 0)) == pytest.approx(1 / (1 + math.exp(-0.85)))


def test_log_odds_clamped(backend):
    vmap = box_map()
    for _ in range(20):
        vmap.integrate_ray((0.15, 0.15, 0.15), (0.75, 0.15, 0.15), hit=True)
    assert vmap.log_odds_at((2, 0, 0)) == 3.5
    assert vmap.log_odds_at((0, 0, 0)) == -2.0


def test_ray_outside_bounds_raises():
    vmap = box_map()
    with pytest.raises(BoundsError):
        vmap.integrate_ray((0.15, 0.15, 0.15), (5.0, 0.15, 0.15), hit=False)


def test_scan_hit_beats_miss_and_reports_touched(backend):
    vmap = box_map()
    o = np.array([0.15, 0.15, 0.15])
    ends = np.array([[1.05, 0.15, 0.15], [2.05, 0.15, 0.15]])
    touched = vmap.integrate_scan(o, ends, [True, False], backend=backend)
    # cell 3 is a hit for ray 0 and a pass-through for ray 1
    assert vmap.log_odds_at((3, 0, 0)) == pytest.approx(0.85)
    assert vmap.log_odds_at((5, 0, 0)) == pytest.approx(-0.4)
    assert {tuple(k) for k in touched} == {(i, 0, 0) for i in range(7)}


def test_scan_backends_agree():
    rng = np.random.default_rng(3)
    a, b = box_map(), box_map()
    for _ in range(5):
        o = rng.uniform(0.2, 2.8, 3)
        ends = rng.uniform(0.01, 2.99, (200, 3))
        hits = rng.random(200) < 0.5
        ta = a.integrate_scan(o, ends, hits, backend="numba")
        tb = b.integrate_scan(o, ends, hits, backend="numpy")
        assert np.array_equal(ta, tb)
    assert np.array_equal(a.log_odds, b.log_odds)


def test_scan_equals_sequential_rays_when_disjoint(backend):
    vmap, ref = box_map(), box_map()
    o = (1.5, 1.5, 1.5)
    ends = [(0.05, 1.5, 1.5), (2.95, 1.5, 1.5), (1.5, 0.05, 1.5)]
    vmap.integrate_scan(o, ends, [True, False, True])
    # origin cell shared by all rays: scan updates it once, rays three times
    for e, h in zip(ends, [True, False, True]):
        ref.integrate_ray(o, e, h)
    ref.log_odds[5, 5, 5] = -0.4
    assert np.allclose(vmap.log_odds, ref.log_odds)


def test_save_load_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    vmap = box_map()
    vmap.integrate_scan((1.5, 1.5, 1.5), rng.uniform(0.01, 2.99, (50, 3)), rng.random(50) < 0.5)
    path = tmp_path / "map.txt"
    vmap.save(path)
    back = VoxelMap.load(path)
    assert back.bounds == vmap.bounds
    assert np.array_equal(back.log_odds, vmap.log_odds)
    assert np.array_equal(back.stored, vmap.stored)


def test_load_reports_line_number(tmp_path):
    path = tmp_path / "map.txt"
    path.write_text("rho 0.3\nbounds 0 0 0 3 3 3\n1 2 3 0.5\n1 2 oops 0.5\n")
    with pytest.raises(ValueError, match=":4:"):
        VoxelMap.load(path)


def test_values_at_outside_default():
    vmap = box_map(fill=-1.0)
    vals = vmap.values_at([(0, 0, 0), (-1, 0, 0), (10, 0, 0)], outside=7.0)
    assert list(vals) == [-1.0, 7.0, 7.0]


def test_raycast_same_cell_is_empty(backend):
    assert raycast_voxels((0.1, 0.1, 0.1), (0.2, 0.2, 0.2), 0.3) == []
