import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gradexplore.camera import CameraModel, Pose
from gradexplore.frontier import rebuild
from gradexplore.view_quality import (
    SafetyZones, SamplerConfig, alpha1, alpha2, alpha3, next_best_view, pose_distance,
    score_candidates, view_quality, zone_keys,
)

from conftest import box_map

CAM = CameraModel()
ZONES = SafetyZones()


def test_zone_validation():
    with pytest.raises(ValueError):
        SafetyZones(red=(1, 1, 1), yellow=(0.5, 2, 2))
    with pytest.raises(ValueError):
        SafetyZones(lambda2=0.0)
    with pytest.raises(ValueError):
        SamplerConfig(n_samples=0)


def test_zone_keys_cover_open_box():
    # a 0.6 box centered on a cell corner covers 2 x 2 x 2 cells
    assert len(zone_keys((0.6, 0.6, 0.6), (0.6, 0.6, 0.6), 0.3)) == 8
    # centered on a cell center it overlaps 3 per axis
    assert len(zone_keys((0.45, 0.45, 0.45), (0.6, 0.6, 0.6), 0.3)) == 27


@given(st.floats(0.2, 2.8), st.floats(0.2, 2.8), st.floats(0.2, 2.8))
def test_zone_keys_overlap_box(x, y, z):
    p = np.array([x, y, z])
    h = np.array(ZONES.red) / 2
    for k in zone_keys(p, ZONES.red, 0.3):
        lo, hi = k * 0.3, (k + 1) * 0.3
        assert np.all(lo < p + h + 1e-9) and np.all(hi > p - h - 1e-9)


def test_alpha1_requires_known_free():
    vmap = box_map(fill=-1.0)
    q = Pose(1.5, 1.5, 1.5)
    assert alpha1(vmap, q, ZONES) == 1.0
    vmap.set_log_odds((5, 5, 5), 0.0)  # unknown blocks
    assert alpha1(vmap, q, ZONES) == 0.0
    vmap.set_log_odds((5, 5, 5), 1.0)
    assert alpha1(vmap, q, ZONES) == 0.0


def test_alpha2_counts_unknown_and_occupied():
    vmap = box_map(fill=-1.0)
    q = Pose(1.5, 1.5, 1.5)
    assert alpha2(vmap, q, ZONES) == 1.0
    vmap.set_log_odds((3, 5, 5), 1.0)
    vmap.set_log_odds((6, 6, 5), 0.0)
    assert alpha2(vmap, q, ZONES) == pytest.approx(math.exp(-2 * ZONES.lambda2))


def test_alpha3_and_pose_distance():
    q0 = Pose(0, 0, 0, math.pi - 0.1)
    q = Pose(3, 4, 0, -math.pi + 0.1)
    assert float(pose_distance(q, q0)[0]) == pytest.approx(5.0 + 0.1 * 0.2)
    assert alpha3(q, q0, 0.1) == pytest.approx(math.exp(-0.1 * 5.02))


def _frontier_wall():
    """Free room whose +x face is unknown."""
    vmap = box_map(12, fill=-1.0)
    vmap.log_odds[10:] = 0.0
    vmap.stored[10:] = False
    return vmap, rebuild(vmap)


def test_view_quality_product():
    vmap, fr = _frontier_wall()
    q0 = Pose(1.05, 1.65, 1.65, 0.0)
    q = Pose(1.35, 1.65, 1.65, 0.0)
    vq = view_quality(vmap, fr, CAM, q, q0, ZONES)
    assert vq > 0
    assert view_quality(vmap, fr, CAM, Pose(2.85, 1.65, 1.65), q0, ZONES) == 0.0  # red zone reaches unknown


def test_nbv_prefers_facing_the_frontier(backend):
    vmap, fr = _frontier_wall()
    q0 = Pose(1.05, 1.65, 1.65, math.pi)
    best = next_best_view(vmap, fr, CAM, q0, ZONES, SamplerConfig(50, 8), np.random.default_rng(0))
    assert best is not None and abs(best.yaw) < math.pi / 4


def test_nbv_none_without_frontiers():
    vmap = box_map(fill=-1.0)
    assert next_best_view(vmap, rebuild(vmap), CAM, Pose(1.5, 1.5, 1.5), ZONES, SamplerConfig(20, 4), np.random.default_rng(0)) is None


def test_candidates_match_scalar_quality():
    vmap, fr = _frontier_wall()
    q0 = Pose(1.05, 1.65, 1.65, 0.0)
    cand = score_candidates(vmap, fr, CAM, q0, ZONES, SamplerConfig(10, 4), np.random.default_rng(1))
    assert cand.poses.shape == (40, 4)
    for row, qv in zip(cand.poses, cand.quality):
        assert qv == pytest.approx(view_quality(vmap, fr, CAM, Pose.from_array(row), q0, ZONES), rel=1e-12)


def test_sampling_is_seeded():
    vmap, fr = _frontier_wall()
    q0 = Pose(1.05, 1.65, 1.65, 0.0)
    a = next_best_view(vmap, fr, CAM, q0, ZONES, SamplerConfig(30, 8), np.random.default_rng(4))
    b = next_best_view(vmap, fr, CAM, q0, ZONES, SamplerConfig(30, 8), np.random.default_rng(4))
    assert a == b


def test_sampling_needs_free_space():
    vmap = box_map()
    with pytest.raises(ValueError):
        next_best_view(vmap, rebuild(vmap), CAM, Pose(1, 1, 1), ZONES, SamplerConfig(), np.random.default_rng(0))
