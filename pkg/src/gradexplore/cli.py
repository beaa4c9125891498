"""Command-line entry points."""

from __future__ import annotations

import argparse
import os
import sys

from . import kernels
from .config import ConfigError, load_config

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_PLANNING = 2
EXIT_ITERATION_CAP = 3

_STATUS_EXIT = {
    "converged": EXIT_OK,
    "no-view": EXIT_OK,
    "rrt-failed": EXIT_PLANNING,
    "max-iterations": EXIT_ITERATION_CAP,
}


def _fail(msg: str, code: int = EXIT_CONFIG) -> int:
    print(f"error: {msg}", file=sys.stderr)
    return code


def _load(args):
    cfg = load_config(args.config)
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    return cfg


def cmd_explore(args) -> int:
    from .explorer import load_scene, run_exploration
    from .voxel_map import write_atomic

    try:
        cfg = _load(args)
        if args.max_iterations is not None:
            if args.max_iterations < 1:
                raise ConfigError("--max-iterations must be positive")
            cfg.run.max_iterations = args.max_iterations
        scene = load_scene(cfg.scene, cfg.base_dir)
    except (ConfigError, FileNotFoundError, ValueError) as exc:
        return _fail(str(exc))
    out = args.out
    os.makedirs(os.path.join(out, "paths"), exist_ok=True)

    def progress(rec):
        if not args.quiet:
            print(
                f"[{rec.iteration:3d}] ig {rec.ig_init:9.3f} -> {rec.ig_opt:9.3f}  "
                f"len {rec.len_init:7.3f} -> {rec.len_opt:7.3f}  coverage {rec.coverage:.4f}"
            )

    result = run_exploration(scene, cfg, seed=cfg.seed, backend=args.backend, progress=progress)
    result.metrics.save(os.path.join(out, "metrics.csv"), wall_time=args.wall_time)
    result.vmap.save(os.path.join(out, "map.txt"))
    result.frontiers.save(os.path.join(out, "frontiers.txt"))
    for i, (init, opt) in enumerate(result.paths, 1):
        init.save(os.path.join(out, "paths", f"{i:03d}_init.txt"))
        opt.save(os.path.join(out, "paths", f"{i:03d}_opt.txt"))
    timing = "iter,wall_s,j_init,j_opt,ig_goal,executed,opt_status\n" + "".join(
        f"{r.iteration},{r.wall_s!r},{r.j_init!r},{r.j_opt!r},{r.ig_goal!r},{r.executed},{r.opt_status}\n"
        for r in result.metrics.records
    )
    write_atomic(os.path.join(out, "timing.csv"), timing)
    if args.trace:
        rows = ["iter,opt_iter,j,ig,g_l,step"]
        for i, opt in enumerate(result.optimizations, 1):
            rows.extend(f"{i},{t.iteration},{t.j!r},{t.ig!r},{t.g_l!r},{t.step!r}" for t in opt.trace)
        write_atomic(os.path.join(out, "trace.csv"), "\n".join(rows) + "\n")
    print(
        f"{scene.name}: {result.status} after {len(result.metrics.records)} iterations, "
        f"coverage {result.metrics.final_coverage:.4f}"
    )
    return _STATUS_EXIT[result.status]


def cmd_optimize_once(args) -> int:
    from .frontier import rebuild
    from .global_planner import Path
    from .path_optimizer import optimize_path
    from .voxel_map import VoxelMap, write_atomic

    try:
        cfg = _load(args)
        vmap = VoxelMap.load(args.map, **{k: v for k, v in cfg.map_kwargs().items() if k != "rho"})
        path = Path.load(args.path)
    except (ConfigError, FileNotFoundError, ValueError) as exc:
        return _fail(str(exc))
    budget = cfg.optimizer.budget if args.budget is None else args.budget
    if budget < 0:
        return _fail("--budget must be non-negative")
    frontiers = rebuild(vmap)
    res = optimize_path(
        vmap, frontiers, cfg.camera(), path, cfg.weights(), budget,
        backend=args.backend, max_step=cfg.optimizer.max_step,
    )
    print(f"ig      {res.ig_init:.6f} -> {res.ig:.6f}")
    print(f"length  {path.length():.6f} -> {res.path.length():.6f}")
    print(f"J       {res.j_init:.8f} -> {res.j_final:.8f}  ({res.iterations} iterations, {res.status})")
    print("iter,j,ig,g_l,step")
    for t in res.trace:
        print(f"{t.iteration},{t.j:.10g},{t.ig:.10g},{t.g_l:.10g},{t.step:.6g}")
    os.makedirs(args.out, exist_ok=True)
    res.path.save(os.path.join(args.out, "path_opt.txt"))
    write_atomic(
        os.path.join(args.out, "trace.csv"),
        "iter,j,ig,g_l,step\n" + "".join(f"{t.iteration},{t.j!r},{t.ig!r},{t.g_l!r},{t.step!r}\n" for t in res.trace),
    )
    return EXIT_OK


def cmd_check(args) -> int:
    from . import checks

    results = checks.run_all(seed=args.seed or 0, quick=args.quick, mutate=args.inject_phi_d_sign_error)
    width = max(len(r.name) for r in results)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name:<{width}}  {r.detail}  ({r.seconds:.1f}s)")
    return EXIT_OK if all(r.passed for r in results) else 1


def cmd_cross_section(args) -> int:
    from .diff_ig import FuzzyConfig, write_cross_section_csv

    try:
        cfg = _load(args)
    except (ConfigError, FileNotFoundError) as exc:
        return _fail(str(exc))
    fuzzy = FuzzyConfig.from_camera(cfg.camera())
    os.makedirs(args.out, exist_ok=True)
    for plane in ("yz", "xz"):
        write_cross_section_csv(os.path.join(args.out, f"phi_{plane}.csv"), fuzzy, plane, args.n)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gradexplore", description="Gradient-optimized frontier exploration in a voxel simulator.")
    p.add_argument("--backend", choices=("numba", "numpy"), default=None, help="kernel backend (default: numba when available)")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, default_config="tunnel"):
        sp.add_argument("--config", default=default_config, help="config file or bundled name (tunnel, lab, clutter)")
        sp.add_argument("--seed", type=int, default=None, help="overrides the config seed")

    sp = sub.add_parser("explore", help="run a full exploration")
    common(sp)
    sp.add_argument("--out", default="out", help="output directory")
    sp.add_argument("--trace", action="store_true", help="write per-step optimizer traces to trace.csv")
    sp.add_argument("--wall-time", action="store_true", help="fill the wall_s column (breaks byte-identical reruns)")
    sp.add_argument("--max-iterations", type=int, default=None, help="overrides run.max_iterations (stops early for map snapshots)")
    sp.add_argument("--quiet", action="store_true")
    sp.set_defaults(func=cmd_explore)

    sp = sub.add_parser("optimize-once", help="optimize one stored path against a stored map")
    common(sp)
    sp.add_argument("--map", required=True, help="map snapshot (map.txt)")
    sp.add_argument("--path", required=True, help="path file, one 'x y z yaw' line per pose")
    sp.add_argument("--budget", type=int, default=None, help="iteration budget (default from config)")
    sp.add_argument("--out", default="out", help="output directory")
    sp.set_defaults(func=cmd_optimize_once)

    sp = sub.add_parser("check", help="run the oracle and benchmark checks")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--quick", action="store_true", help="fewer samples")
    sp.add_argument("--inject-phi-d-sign-error", action="store_true", help=argparse.SUPPRESS)
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("cross-section", help="dump filter values over the two camera planes as CSV")
    common(sp)
    sp.add_argument("--n", type=int, default=81)
    sp.add_argument("--out", default="out")
    sp.set_defaults(func=cmd_cross_section)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.backend:
        kernels.set_backend(args.backend)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
