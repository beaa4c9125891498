"""Time the numba kernels against their numpy fallbacks on a partially explored scene.

    python benchmarks/bench_backends.py [--scene clutter] [--repeats 5]
"""

from __future__ import annotations

import argparse
import statistics
import time

import numpy as np

from gradexplore.camera import visible_counts
from gradexplore.checks import random_poses, scenario
from gradexplore.diff_ig import ig_path, ig_path_value
from gradexplore.explorer import simulate_scan
from gradexplore.camera import Pose
from gradexplore.voxel_map import VoxelMap


def median_time(fun, repeats: int) -> float:
    fun()  # warm-up, includes numba compilation on first use
    samples = []
    for _ in range(repeats):
        t = time.perf_counter()
        fun()
        samples.append(time.perf_counter() - t)
    return statistics.median(samples)


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scene", default="clutter")
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    ex = scenario(args.scene, steps=1, seed=args.seed)
    rng = np.random.default_rng(args.seed)
    vm, fr, cam = ex.vmap, ex.frontiers, ex.cam
    path = random_poses(vm, 12, rng)
    positions = random_poses(vm, 200, rng)[:, :3]
    yaws = np.linspace(-np.pi, np.pi, 8, endpoint=False)
    batch = simulate_scan(ex.scene, cam, Pose.from_array(path[0]), ex.cfg.angular_resolution, vm.rho)

    def scan(backend):
        fresh = VoxelMap(ex.scene.bounds, **ex.cfg.map_kwargs())
        fresh.integrate_scan(batch.origin, batch.endpoints, batch.hits, backend=backend)

    cases = {
        f"scan fusion ({len(batch.endpoints)} rays)": scan,
        f"visible counts (200 x 8 poses, {len(fr)} frontiers)": lambda b: visible_counts(vm, fr, cam, positions, yaws, backend=b),
        "path gain, 10 viewpoints": lambda b: ig_path_value(vm, fr, cam, path, backend=b),
        "path gain + gradient, 10 viewpoints": lambda b: ig_path(vm, fr, cam, path, backend=b),
    }
    width = max(map(len, cases))
    print(f"{'kernel':<{width}}  {'numba ms':>9}  {'numpy ms':>9}  {'speedup':>7}")
    for name, fun in cases.items():
        t_nb = median_time(lambda: fun("numba"), args.repeats)
        t_np = median_time(lambda: fun("numpy"), args.repeats)
        print(f"{name:<{width}}  {1e3 * t_nb:9.2f}  {1e3 * t_np:9.2f}  {t_np / t_nb:7.1f}x")


if __name__ == "__main__":
    main()
