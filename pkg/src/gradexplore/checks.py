"""Oracle and property checks shared by ``gradexplore check`` and the acceptance tests."""

from __future__ import annotations

import math
import statistics
import time
from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np

from . import diff_ig, oracles
from .autodiff import AdScalar
from .camera import Pose, visible_frontier_count
from .config import RunConfig, load_config
from .diff_ig import frozen_value, ig_path, ig_path_value, kink_margin, trace_gates
from .explorer import Explorer, load_scene, simulate_scan
from .frontier import rebuild, update_after_scan
from .voxel_map import VoxelMap

SCENES = ("tunnel", "lab", "clutter")


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0


def scenario(name: str, steps: int = 2, seed: int = 0, cfg: RunConfig | None = None) -> Explorer:
    """A bundled scene explored for ``steps`` outer iterations: a realistic partial map."""
    cfg = cfg or load_config(name)
    ex = Explorer(load_scene(cfg.scene, cfg.base_dir), cfg, seed=seed)
    for it in range(1, steps + 1):
        state, _, _ = ex.step(it)
        if state != "ok":
            break
    return ex


def random_poses(vmap: VoxelMap, n: int, rng: np.random.Generator) -> np.ndarray:
    """Poses at random points of known-free cells with uniform yaw."""
    free = vmap.grid_keys(vmap.free_mask)
    pos = (free[rng.integers(len(free), size=n)] + rng.random((n, 3))) * vmap.rho
    return np.column_stack([pos, rng.uniform(-math.pi, math.pi, n)])


def fd_gradient(fun, x: np.ndarray, h: float) -> np.ndarray:
    g = np.empty_like(x)
    for i in range(len(x)):
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        g[i] = (fun(xp) - fun(xm)) / (2 * h)
    return g


@dataclass
class GradSample:
    rel_err: float
    grad_norm: float


def gradient_samples(ex: Explorer, n_paths: int, rng: np.random.Generator, n_poses: int = 5, h: float = 1e-5, margin: float = 1e-3, backend=None, max_tries: int | None = None) -> list[GradSample]:
    """Compare the path gradient with central differences of the gate-frozen value.

    Paths with any scored pair within ``margin`` of a filter breakpoint, or
    with no scored pair at all, are redrawn.
    """
    out = []
    tries = 0
    max_tries = max_tries or 50 * n_paths
    while len(out) < n_paths and tries < max_tries:
        tries += 1
        q = random_poses(ex.vmap, n_poses, rng)
        trace = trace_gates(ex.vmap, ex.frontiers, ex.cam, q, backend=backend)
        interior = q[1:-1]
        if not trace.scored.any() or kink_margin(trace, ex.cam, interior) < margin:
            continue
        g = ig_path(ex.vmap, ex.frontiers, ex.cam, q, backend=backend).partials
        g_fd = fd_gradient(lambda x: frozen_value(trace, ex.cam, x), interior.ravel(), h)
        scale = float(np.linalg.norm(g_fd))
        err = float(np.linalg.norm(g - g_fd))
        out.append(GradSample(err / scale if scale > 0 else err, scale))
    return out


@contextmanager
def phi_d_sign_error():
    """Flip the sign of the range filter's slope (a deliberately broken build)."""
    original = diff_ig._phi_d_of

    def broken(delta, r_max):
        good = original(delta, r_max)
        return AdScalar(good.value, -good.partials)

    diff_ig._phi_d_of = broken
    try:
        yield
    finally:
        diff_ig._phi_d_of = original


# -- individual checks -----------------------------------------------------------


def check_gradients(n_paths: int = 100, seed: int = 0, tol: float = 1e-4, mutate: bool = False, scenes=SCENES) -> CheckResult:
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst, count = 0.0, 0
    ctx = phi_d_sign_error() if mutate else _null()
    # the injected fault lives in the numpy route
    backend = "numpy" if mutate else None
    with ctx:
        for name in scenes:
            ex = scenario(name, seed=seed)
            samples = gradient_samples(ex, n_paths, rng, backend=backend)
            count += len(samples)
            worst = max([worst] + [s.rel_err for s in samples])
    want = n_paths * len(scenes)
    ok = worst <= tol and count == want
    return CheckResult("gradient vs finite differences", ok, f"{count}/{want} paths, worst rel err {worst:.2e}", time.perf_counter() - t0)


@contextmanager
def _null():
    yield


def check_visibility(n_poses: int = 100, seed: int = 0, scenes=SCENES) -> CheckResult:
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    mismatches, total = 0, 0
    for name in scenes:
        ex = scenario(name, seed=seed)
        keys = ex.frontiers.keys
        for row in random_poses(ex.vmap, n_poses, rng):
            q = Pose.from_array(row)
            total += 1
            if visible_frontier_count(ex.vmap, ex.frontiers, ex.cam, q) != oracles.visible_count_ref(ex.vmap, keys, ex.cam, q):
                mismatches += 1
    return CheckResult("visible count vs brute force", mismatches == 0, f"{total - mismatches}/{total} poses agree", time.perf_counter() - t0)


def check_ig_path(n_paths: int = 20, seed: int = 0, tol: float = 1e-9, scenes=SCENES) -> CheckResult:
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst = 0.0
    total = 0
    for name in scenes:
        ex = scenario(name, seed=seed)
        keys = ex.frontiers.keys
        for _ in range(n_paths):
            q = random_poses(ex.vmap, 5, rng)
            worst = max(worst, abs(ig_path_value(ex.vmap, ex.frontiers, ex.cam, q) - oracles.ig_path_ref(ex.vmap, keys, ex.cam, q)))
            total += 1
    return CheckResult("path gain vs brute force", worst <= tol, f"{total} paths, worst abs err {worst:.1e}", time.perf_counter() - t0)


def check_frontiers(n_sequences: int = 50, scans: int = 4, seed: int = 0, scene: str = "lab") -> CheckResult:
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    cfg = load_config(scene)
    sc = load_scene(cfg.scene, cfg.base_dir)
    ex = Explorer(sc, cfg, seed=seed)
    bad = 0
    for _ in range(n_sequences):
        vmap = VoxelMap(sc.bounds, **cfg.map_kwargs())
        fr = rebuild(vmap)
        for _ in range(scans):
            q = _free_pose(ex, rng)
            batch = simulate_scan(sc, ex.cam, q, cfg.angular_resolution * 3, vmap.rho)
            touched = vmap.integrate_scan(batch.origin, batch.endpoints, batch.hits)
            fr = update_after_scan(fr, vmap, touched)
            if fr != rebuild(vmap):
                bad += 1
                break
    return CheckResult("incremental frontiers vs rebuild", bad == 0, f"{n_sequences - bad}/{n_sequences} scan sequences agree", time.perf_counter() - t0)


def _free_pose(ex: Explorer, rng) -> Pose:
    """A pose whose true red zone is clear."""
    while True:
        row = random_poses(ex.truth.as_map, 1, rng)[0]
        if ex._executable(row[None, :]) == 1:
            return Pose.from_array(row)


@dataclass
class CostRow:
    n: int
    t_eval: float
    t_grad: float
    t_fd: float

    @property
    def ratio(self) -> float:
        return self.t_grad / self.t_eval

    @property
    def fd_ratio(self) -> float:
        return self.t_fd / self.t_grad


def _time(fun, repeats: int) -> float:
    fun()
    samples = []
    for _ in range(repeats):
        t = time.perf_counter()
        fun()
        samples.append(time.perf_counter() - t)
    return statistics.median(samples)


def cost_table(ex: Explorer, sizes=(10, 20, 40), seed: int = 0, repeats: int = 7, backend=None) -> list[CostRow]:
    """Median timings of value, gradient and finite-difference gradient for paths of n interior viewpoints."""
    rng = np.random.default_rng(seed)
    rows = []
    for n in sizes:
        q = random_poses(ex.vmap, n + 2, rng)
        vm, fr, cam = ex.vmap, ex.frontiers, ex.cam
        t_eval = _time(lambda: ig_path_value(vm, fr, cam, q, backend=backend), repeats)
        t_grad = _time(lambda: ig_path(vm, fr, cam, q, backend=backend), repeats)

        def fd():
            x = q[1:-1].ravel()
            fd_gradient(lambda v: ig_path_value(vm, fr, cam, np.vstack([q[0], v.reshape(-1, 4), q[-1]]), backend=backend), x, 1e-5)

        t_fd = _time(fd, 1)
        rows.append(CostRow(n, t_eval, t_grad, t_fd))
    return rows


def check_cost(seed: int = 0, scene: str = "clutter") -> tuple[CheckResult, list[CostRow]]:
    t0 = time.perf_counter()
    ex = scenario(scene, steps=1, seed=seed)
    rows = cost_table(ex, seed=seed)
    ratios = [r.ratio for r in rows]
    ok = max(ratios) <= 5.0 and ratios[-1] <= ratios[0] + 1.0 and rows[-1].fd_ratio >= 10.0
    detail = "; ".join(f"n={r.n}: grad/eval {r.ratio:.2f}, fd/grad {r.fd_ratio:.0f}" for r in rows)
    return CheckResult("gradient cost", ok, f"{len(ex.frontiers)} frontiers; {detail}", time.perf_counter() - t0), rows


def run_all(seed: int = 0, quick: bool = False, mutate: bool = False) -> list[CheckResult]:
    scale = 0.2 if quick else 1.0
    results = [
        check_gradients(max(1, int(100 * scale)), seed, mutate=mutate),
        check_visibility(max(1, int(100 * scale)), seed),
        check_ig_path(max(1, int(20 * scale)), seed),
        check_frontiers(max(1, int(50 * scale)), seed=seed),
        check_cost(seed)[0],
    ]
    return results
