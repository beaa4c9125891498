import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gradexplore.camera import (
    CameraModel, Pose, from_camera_frame, in_frustum, in_frustum_point, to_camera_frame,
    unobstructed, visible_counts, visible_frontier_count, wrap_angle,
)
from gradexplore.frontier import rebuild
from gradexplore.oracles import visible_count_ref

from conftest import box_map, random_map

CAM = CameraModel()


def test_pose_wraps_yaw_and_rejects_nan():
    assert Pose(0, 0, 0, 3 * math.pi).yaw == pytest.approx(math.pi)
    with pytest.raises(ValueError):
        Pose(0, float("nan"), 0)


@given(st.floats(-100, 100))
def test_wrap_angle_range(a):
    w = float(wrap_angle(a))
    assert -math.pi < w <= math.pi
    assert math.isclose(math.cos(w), math.cos(a), abs_tol=1e-9)


def test_camera_axes():
    q = Pose(1, 2, 3, 0.0)
    # optical axis along world +x at zero yaw, image y pointing down
    assert np.allclose(to_camera_frame(q, (2, 2, 3)), (0, 0, 1))
    assert np.allclose(to_camera_frame(q, (1, 2, 4)), (0, -1, 0))
    assert np.allclose(to_camera_frame(q, (1, 1, 3)), (1, 0, 0))


@given(st.floats(-4, 4), st.floats(-4, 4), st.floats(-4, 4), st.floats(-7, 7))
def test_frame_round_trip(x, y, z, yaw):
    q = Pose(0.5, -1.0, 2.0, yaw)
    p = np.array([x, y, z])
    assert np.allclose(from_camera_frame(q, to_camera_frame(q, p)), p, atol=1e-9)


def test_frustum_edges():
    q = Pose(0, 0, 0, 0)
    assert in_frustum_point(CAM, q, (5, 0, 0))
    assert not in_frustum_point(CAM, q, (-5, 0, 0))
    assert not in_frustum_point(CAM, q, (0.2, 0, 0))  # inside r_min
    assert not in_frustum_point(CAM, q, (10.5, 0, 0))  # beyond r_max
    assert in_frustum_point(CAM, q, (5, 4.9, 0))  # within the 45 degree half angle
    assert not in_frustum_point(CAM, q, (5, 5.1, 0))
    h = math.tan(CAM.fov_yz / 2) * 5
    assert in_frustum_point(CAM, q, (5, 0, h - 0.01)) and not in_frustum_point(CAM, q, (5, 0, h + 0.01))


def test_normals_agree_with_kernel_params():
    rng = np.random.default_rng(1)
    q = Pose(0, 0, 0, 0.3)
    for p in rng.uniform(-12, 12, (500, 3)):
        s = to_camera_frame(q, p)
        ref = all(n @ s > 0 for n in CAM.normals) and CAM.r_min <= np.linalg.norm(s) <= CAM.r_max
        assert in_frustum_point(CAM, q, p) == ref


def test_unobstructed_excludes_end_cells(backend):
    vmap = box_map(fill=-1.0)
    vmap.set_log_odds((0, 0, 0), 2.0)
    vmap.set_log_odds((5, 0, 0), 2.0)
    q = Pose(0.15, 0.15, 0.15)
    assert unobstructed(vmap, q, (5, 0, 0))
    assert not unobstructed(vmap, q, (7, 0, 0))
    vmap.set_log_odds((3, 0, 0), 0.0)  # unknown blocks too
    assert not unobstructed(vmap, q, (5, 0, 0))


def test_in_frustum_uses_voxel_center():
    assert in_frustum(CAM, Pose(0.15, 0.15, 0.15), (10, 0, 0), 0.3)


@pytest.mark.parametrize("seed", range(5))
def test_visible_count_matches_brute_force(backend, seed):
    rng = np.random.default_rng(seed)
    vmap = random_map(rng, n=16, p_free=0.8, p_occ=0.05)
    fr = rebuild(vmap)
    free = vmap.grid_keys(vmap.free_mask)
    for _ in range(10):
        pos = (free[rng.integers(len(free))] + rng.random(3)) * vmap.rho
        q = Pose(*pos, rng.uniform(-math.pi, math.pi))
        assert visible_frontier_count(vmap, fr, CAM, q) == visible_count_ref(vmap, fr.keys, CAM, q)


def test_visible_counts_backends_agree():
    rng = np.random.default_rng(11)
    vmap = random_map(rng, n=16, p_free=0.8, p_occ=0.05)
    fr = rebuild(vmap)
    pos = rng.uniform(0.1, 4.7, (30, 3))
    yaws = np.linspace(-3, 3, 7)
    a = visible_counts(vmap, fr, CAM, pos, yaws, backend="numba")
    b = visible_counts(vmap, fr, CAM, pos, yaws, backend="numpy")
    assert a.shape == (30, 7) and np.array_equal(a, b)


def test_no_frontiers_no_counts():
    vmap = box_map(fill=-1.0)
    assert visible_frontier_count(vmap, rebuild(vmap), CAM, Pose(1, 1, 1)) == 0
