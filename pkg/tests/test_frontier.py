import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gradexplore.frontier import FrontierSet, rebuild, surrounding_shell, update_after_scan
from gradexplore.oracles import frontier_keys_ref

from conftest import box_map, random_map


@pytest.mark.parametrize("k", [1, 2, 3])
def test_shell_size(k):
    shell = surrounding_shell((4, 5, 6), k * 0.3, 0.3)
    assert len(shell) == (k + 2) ** 3 - k**3
    assert len(set(shell)) == len(shell)
    assert (4, 5, 6) not in shell


def test_shell_rejects_non_multiple():
    with pytest.raises(ValueError):
        surrounding_shell((0, 0, 0), 0.45, 0.3)


def test_single_free_cell_has_26_frontiers():
    vmap = box_map()
    vmap.set_log_odds((5, 5, 5), -1.0)
    fr = rebuild(vmap)
    assert len(fr) == 26
    assert set(fr) == set(surrounding_shell((5, 5, 5), 0.3, 0.3))


def test_occupied_neighbours_are_not_frontiers():
    vmap = box_map()
    vmap.set_log_odds((5, 5, 5), -1.0)
    vmap.set_log_odds((6, 5, 5), 1.0)
    fr = rebuild(vmap)
    assert (6, 5, 5) not in fr and len(fr) == 25


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_rebuild_matches_direct_scan(seed):
    vmap = random_map(np.random.default_rng(seed), p_free=0.2, p_occ=0.1)
    assert set(rebuild(vmap)) == frontier_keys_ref(vmap)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_incremental_matches_rebuild(seed):
    rng = np.random.default_rng(seed)
    vmap = box_map(12)
    fr = rebuild(vmap)
    for _ in range(4):
        o = rng.uniform(0.3, 3.3, 3)
        ends = rng.uniform(0.01, 3.59, (int(rng.integers(1, 40)), 3))
        touched = vmap.integrate_scan(o, ends, rng.random(len(ends)) < 0.3)
        fr = update_after_scan(fr, vmap, touched)
        assert fr == rebuild(vmap)


def test_update_with_nothing_touched_is_identity():
    vmap = box_map()
    vmap.set_log_odds((5, 5, 5), -1.0)
    fr = rebuild(vmap)
    assert update_after_scan(fr, vmap, np.zeros((0, 3))) == fr


def test_from_keys_and_save(tmp_path):
    vmap = box_map()
    fr = FrontierSet.from_keys(vmap, [(1, 2, 3), (1, 2, 3), (4, 4, 4), (99, 0, 0)])
    assert len(fr) == 2 and (4, 4, 4) in fr and (99, 0, 0) not in fr
    fr.save(tmp_path / "f.txt")
    assert (tmp_path / "f.txt").read_text() == "1 2 3\n4 4 4\n"
