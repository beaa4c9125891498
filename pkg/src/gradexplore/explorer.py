"""Ground-truth scenes, simulated depth scans and the exploration loop."""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .camera import CameraModel, Pose
from .config import RunConfig, resolve_scene
from .diff_ig import ig_path_value
from .frontier import FrontierSet, rebuild, update_after_scan
from .global_planner import Path, PlanningError, plan_rrt, red_zone_clear
from .path_optimizer import OptimizeResult, optimize_path
from .view_quality import SafetyZones, next_best_view
from .voxel_map import Aabb, VoxelMap, write_atomic

METRICS_HEADER = "iter,ig_init,ig_opt,len_init,len_opt,coverage,wall_s"

_FACE_6 = ndimage.generate_binary_structure(3, 1)


class ScanError(ValueError):
    """The sensor pose is outside the scene or inside an obstacle."""


@dataclass(frozen=True)
class Scene:
    name: str
    bounds: Aabb
    obstacles: tuple[Aabb, ...]
    start: Pose | None = None

    def __post_init__(self):
        for i, box in enumerate(self.obstacles):
            if not self.bounds.contains_box(box):
                raise ValueError(f"obstacle {i} of scene {self.name!r} leaves the bounds")

    @classmethod
    def from_dict(cls, data: dict) -> "Scene":
        def box(v, what):
            if isinstance(v, dict):
                return Aabb(tuple(v["min"]), tuple(v["max"]))
            if len(v) != 2:
                raise ValueError(f"{what} must be a [min, max] pair of triples")
            return Aabb(tuple(v[0]), tuple(v[1]))

        try:
            bounds = box(data["bounds"], "bounds")
            obstacles = tuple(box(o, f"obstacles[{i}]") for i, o in enumerate(data.get("obstacles", [])))
        except KeyError as exc:
            raise ValueError(f"scene is missing field {exc}") from None
        start = data.get("start")
        if start is not None:
            start = Pose(*start) if len(start) == 4 else Pose(*start, 0.0)
        return cls(str(data.get("name", "scene")), bounds, obstacles, start)

    @classmethod
    def load(cls, path) -> "Scene":
        with open(path) as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
        try:
            return cls.from_dict(data)
        except (ValueError, TypeError) as exc:
            raise ValueError(f"{path}: {exc}") from None

    @property
    def box_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        if not self.obstacles:
            return np.zeros((0, 3)), np.zeros((0, 3))
        return (
            np.array([b.min for b in self.obstacles]),
            np.array([b.max for b in self.obstacles]),
        )

    def point_in_obstacle(self, p) -> bool:
        lo, hi = self.box_arrays
        p = np.asarray(p, dtype=np.float64)
        return bool(np.any(np.all((p > lo) & (p < hi), axis=1)))


def load_scene(name_or_path: str, base_dir: str = ".") -> Scene:
    return Scene.load(resolve_scene(name_or_path, base_dir))


# -- ground truth -------------------------------------------------------------


@dataclass
class GroundTruth:
    """Voxelized scene on the map grid: a cell is occupied iff its center lies in an obstacle."""

    occupied: np.ndarray
    offset: np.ndarray
    rho: float
    as_map: VoxelMap

    @classmethod
    def build(cls, scene: Scene, rho: float) -> "GroundTruth":
        vmap = VoxelMap(scene.bounds, rho=rho)
        idx = np.indices(vmap.shape).reshape(3, -1).T
        centers = (idx + vmap.offset + 0.5) * rho
        occ = np.zeros(len(centers), dtype=bool)
        for box in scene.obstacles:
            occ |= np.all((centers > box.lo) & (centers < box.hi), axis=1)
        occ = occ.reshape(vmap.shape)
        # a certain map of the truth: +l_max occupied, l_min free
        vmap.log_odds[:] = np.where(occ, vmap.l_max, vmap.l_min)
        vmap.stored[:] = True
        return cls(occ, vmap.offset, rho, vmap)

    @property
    def free(self) -> np.ndarray:
        return ~self.occupied

    def reachable(self, start) -> np.ndarray:
        """Free cells 6-connected to the start cell."""
        labels, _ = ndimage.label(self.free, structure=_FACE_6)
        g = tuple(np.floor(np.asarray(start) / self.rho).astype(np.int64) - self.offset)
        if any(c < 0 or c >= s for c, s in zip(g, labels.shape)) or labels[g] == 0:
            raise ValueError("start position is not in ground-truth free space")
        return labels == labels[g]

    def coverage_target(self, start) -> np.ndarray:
        """Reachable free cells plus the occupied cells bounding them."""
        reach = self.reachable(start)
        surface = self.occupied & ndimage.binary_dilation(reach, structure=_FACE_6)
        return reach | surface


def coverage_ratio(vmap: VoxelMap, target: np.ndarray) -> float:
    """Fraction of target cells that the map classifies as free or occupied."""
    n = int(target.sum())
    if n == 0:
        return 1.0
    known = vmap.log_odds != 0.0
    return float((known & target).sum()) / n


# -- sensing --------------------------------------------------------------------


def scan_directions(cam: CameraModel, resolution: float) -> np.ndarray:
    """Unit ray directions over the frustum in the camera frame, one per ``resolution`` radians."""
    if not resolution > 0:
        raise ValueError("angular resolution must be positive")
    na = int(math.floor(cam.fov_xz / resolution + 1e-9)) + 1
    nb = int(math.floor(cam.fov_yz / resolution + 1e-9)) + 1
    a = np.linspace(-cam.fov_xz / 2, cam.fov_xz / 2, na)
    b = np.linspace(-cam.fov_yz / 2, cam.fov_yz / 2, nb)
    ta, tb = np.meshgrid(np.tan(a), np.tan(b), indexing="ij")
    d = np.stack([ta.ravel(), tb.ravel(), np.ones(ta.size)], axis=1)
    return d / np.linalg.norm(d, axis=1, keepdims=True)


def _slab(origin, dirs, lo, hi):
    """Entry and exit parameters of rays against boxes, shapes ``(R, B)``."""
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / dirs
        t1 = (lo[None, :, :] - origin) * inv[:, None, :]
        t2 = (hi[None, :, :] - origin) * inv[:, None, :]
    # axis-parallel rays: inside the slab is unbounded, outside never enters
    par = dirs[:, None, :] == 0.0
    inside = (origin > lo[None]) & (origin < hi[None])
    t1 = np.where(par, np.where(inside, -np.inf, np.inf), t1)
    t2 = np.where(par, np.where(inside, np.inf, -np.inf), t2)
    tnear = np.minimum(t1, t2).max(axis=2)
    tfar = np.maximum(t1, t2).min(axis=2)
    return tnear, tfar


@dataclass
class ScanBatch:
    origin: np.ndarray
    endpoints: np.ndarray
    hits: np.ndarray


def simulate_scan(scene: Scene, cam: CameraModel, q: Pose, resolution: float, rho: float) -> ScanBatch:
    """Cast frustum rays against the true obstacles.

    A ray whose first obstacle lies within ``[r_min, r_max]`` reports a hit
    nudged just inside the obstacle; otherwise it reports a miss at
    ``r_max``, cut short where it would leave the scene bounds.  Rays that
    meet an obstacle closer than ``r_min`` return nothing.
    """
    origin = q.position
    if not scene.bounds.contains(origin):
        raise ScanError(f"scan pose {tuple(origin)} is outside the scene bounds")
    if scene.point_in_obstacle(origin):
        raise ScanError(f"scan pose {tuple(origin)} is inside an obstacle")
    dirs = scan_directions(cam, resolution) @ q.rotation().T
    lo, hi = scene.box_arrays
    t_obs = np.full(len(dirs), np.inf)
    if len(lo):
        tnear, tfar = _slab(origin, dirs, lo, hi)
        valid = (tnear <= tfar) & (tfar > 0.0)
        t_obs = np.where(valid, np.maximum(tnear, 0.0), np.inf).min(axis=1)
    _, t_exit = _slab(origin, dirs, scene.bounds.lo[None], scene.bounds.hi[None])
    t_exit = t_exit[:, 0]
    keep = ~(t_obs < cam.r_min)
    hit = keep & (t_obs <= np.minimum(cam.r_max, t_exit))
    t_end = np.where(hit, t_obs + 1e-5 * rho, np.minimum(cam.r_max, t_exit))
    ends = origin + dirs * t_end[:, None]
    margin = 1e-6 * rho
    ends = np.clip(ends, scene.bounds.lo + margin, scene.bounds.hi - margin)
    return ScanBatch(origin, ends[keep], hit[keep])


# -- exploration loop ---------------------------------------------------------


@dataclass
class IterationRecord:
    iteration: int
    ig_init: float
    ig_opt: float
    len_init: float
    len_opt: float
    coverage: float
    wall_s: float
    j_init: float = 0.0
    j_opt: float = 0.0
    ig_goal: float = 0.0
    executed: int = 0
    opt_status: str = ""

    def csv_row(self, wall_time: bool = False) -> str:
        wall = repr(self.wall_s) if wall_time else ""
        vals = (self.ig_init, self.ig_opt, self.len_init, self.len_opt, self.coverage)
        return f"{self.iteration}," + ",".join(repr(float(v)) for v in vals) + f",{wall}"


@dataclass
class RunMetrics:
    records: list[IterationRecord] = field(default_factory=list)

    def to_csv(self, wall_time: bool = False) -> str:
        return METRICS_HEADER + "\n" + "".join(r.csv_row(wall_time) + "\n" for r in self.records)

    def save(self, path, wall_time: bool = False) -> None:
        write_atomic(path, self.to_csv(wall_time))

    @property
    def final_coverage(self) -> float:
        return self.records[-1].coverage if self.records else 0.0


@dataclass
class ExplorationResult:
    metrics: RunMetrics
    vmap: VoxelMap
    frontiers: FrontierSet
    paths: list[tuple[Path, Path]]
    status: str  # converged | no-view | rrt-failed | max-iterations
    initial_coverage: float
    optimizations: list[OptimizeResult] = field(default_factory=list)

    @property
    def complete(self) -> bool:
        return self.status in ("converged", "no-view")


class Explorer:
    """Stateful exploration session over one scene; ``step`` runs one outer iteration."""

    def __init__(self, scene: Scene, cfg: RunConfig, seed: int | None = None, backend=None):
        self.scene = scene
        self.cfg = cfg
        self.backend = backend
        self.rng = np.random.default_rng(cfg.seed if seed is None else seed)
        self.cam = cfg.camera()
        self.zones: SafetyZones = cfg.safety_zones()
        self.truth = GroundTruth.build(scene, cfg.map.rho)
        start = scene.start if scene.start is not None else Pose(*scene.bounds.lo + cfg.map.rho * 4.5, 0.0)
        self.q0 = start
        if not red_zone_clear(self.truth.as_map, start.position, self.zones)[0]:
            raise ValueError("start pose collides with the scene")
        self.target = self.truth.coverage_target(start.position)
        self.vmap = VoxelMap(scene.bounds, **cfg.map_kwargs())
        self.frontiers = FrontierSet.empty_like(self.vmap)
        self.scan(start)
        self.frontiers = rebuild(self.vmap)

    def scan(self, q: Pose) -> None:
        batch = simulate_scan(self.scene, self.cam, q, self.cfg.angular_resolution, self.vmap.rho)
        touched = self.vmap.integrate_scan(batch.origin, batch.endpoints, batch.hits, backend=self.backend)
        self.frontiers = update_after_scan(self.frontiers, self.vmap, touched)

    @property
    def coverage(self) -> float:
        return coverage_ratio(self.vmap, self.target)

    def _plan(self) -> tuple[str, Path | None]:
        cfg = self.cfg
        for _ in range(cfg.planner.retries):
            goal = next_best_view(
                self.vmap, self.frontiers, self.cam, self.q0, self.zones,
                cfg.sampler_config(), self.rng,
            )
            if goal is None:
                return "no-view", None
            try:
                return "ok", plan_rrt(self.vmap, self.q0, goal, self.zones, self.rng, cfg.planner_config())
            except PlanningError:
                continue
        return "rrt-failed", None

    def _executable(self, q: np.ndarray) -> int:
        """Number of leading poses whose true red zone is free of obstacles."""
        ok = red_zone_clear(self.truth.as_map, q[:, :3], self.zones)
        bad = np.flatnonzero(~ok)
        return len(q) if not len(bad) else int(bad[0])

    def step(self, iteration: int) -> tuple[str, IterationRecord | None, tuple | None]:
        t_start = time.perf_counter()
        state, rrt = self._plan()
        if rrt is None:
            return state, None, None
        ig_init = ig_path_value(self.vmap, self.frontiers, self.cam, rrt, backend=self.backend)
        opt = optimize_path(
            self.vmap, self.frontiers, self.cam, rrt, self.cfg.weights(),
            self.cfg.optimizer.budget, backend=self.backend, max_step=self.cfg.optimizer.max_step,
        )
        # the goal's own view counts toward termination, so short paths still report gain
        q = opt.path.q
        ig_goal = ig_path_value(self.vmap, self.frontiers, self.cam, np.vstack([q, q[-1:]]), backend=self.backend)
        executed = q
        n = self._executable(q)
        if n <= 1:
            executed = rrt.q
            n = self._executable(rrt.q)
        for row in executed[1:n]:
            self.scan(Pose.from_array(row))
        if n > 1:
            self.q0 = Pose.from_array(executed[n - 1])
        rec = IterationRecord(
            iteration, ig_init, opt.ig, rrt.length(), opt.path.length(), self.coverage,
            time.perf_counter() - t_start, opt.j_init, opt.j_final, ig_goal, max(n - 1, 0), opt.status,
        )
        return ("converged" if ig_goal <= self.cfg.run.epsilon else "ok"), rec, (rrt, opt)


def run_exploration(scene: Scene, cfg: RunConfig, seed: int | None = None, backend=None, progress=None) -> ExplorationResult:
    """Plan, optimize and execute paths until the gain drops below epsilon or no view remains."""
    ex = Explorer(scene, cfg, seed, backend)
    initial = ex.coverage
    metrics = RunMetrics()
    paths, opts = [], []
    status = "max-iterations"
    for it in range(1, cfg.run.max_iterations + 1):
        state, rec, plans = ex.step(it)
        if rec is not None:
            metrics.records.append(rec)
            paths.append((plans[0], plans[1].path))
            opts.append(plans[1])
            if progress is not None:
                progress(rec)
        if state != "ok":
            status = state
            break
    return ExplorationResult(metrics, ex.vmap, ex.frontiers, paths, status, initial, opts)
