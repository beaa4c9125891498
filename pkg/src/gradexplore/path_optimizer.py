"""Descent on ``J(Q) = -alpha * IG_path(Q) + beta * g_L(Q)`` over the interior viewpoints."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import AdScalar
from .camera import CameraModel, wrap_angle
from .diff_ig import ig_path
from .global_planner import Path

ARMIJO_C = 1e-4
STEP_TOL = 1e-4


@dataclass(frozen=True)
class ObjectiveWeights:
    alpha: float = 5e-4
    beta: float = 0.05
    w: tuple[float, float, float, float] = (1.0, 1.0, 1.0, 0.1)

    def __post_init__(self):
        object.__setattr__(self, "w", tuple(float(v) for v in self.w))
        if len(self.w) != 4 or min(self.w) <= 0:
            raise ValueError("W needs four positive diagonal entries")
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("alpha and beta must be non-negative")


def _full_ad(q: np.ndarray) -> AdScalar:
    """All poses as an AdScalar batch; only interior coordinates carry partials."""
    n = len(q)
    nv = 4 * (n - 2)
    partials = np.zeros((n, 4, nv))
    if nv:
        partials[1:-1].reshape(nv, nv)[...] = np.eye(nv)
    return AdScalar(q, partials)


def path_length_cost(path, w=(1.0, 1.0, 1.0, 0.1)) -> AdScalar:
    """Sum of W-weighted squared consecutive pose differences, yaw wrapped.

    Partials are taken with respect to the interior coordinates.
    """
    q = path.q if isinstance(path, Path) else np.asarray(path, dtype=np.float64)
    if len(q) < 2:
        raise ValueError("a path needs at least two viewpoints")
    full = _full_ad(q)
    d = full[1:] - full[:-1]
    # wrapping shifts yaw differences by a constant multiple of 2 pi
    shift = np.zeros_like(d.value)
    shift[:, 3] = wrap_angle(d.value[:, 3]) - d.value[:, 3]
    d = d + shift
    return ad.ad_sum(d * d * np.asarray(w, dtype=np.float64))


@dataclass
class TraceRow:
    iteration: int
    j: float
    ig: float
    g_l: float
    step: float


@dataclass
class OptimizeResult:
    path: Path
    ig: float
    ig_init: float
    j_init: float
    j_final: float
    iterations: int
    status: str
    trace: list[TraceRow] = field(default_factory=list)


class _Objective:
    def __init__(self, vmap, frontiers, cam, endpoints, weights, backend):
        self.vmap = vmap
        self.frontiers = frontiers
        self.cam = cam
        self.first, self.last = endpoints
        self.weights = weights
        self.backend = backend

    def poses(self, x: np.ndarray) -> np.ndarray:
        return np.vstack([self.first, x.reshape(-1, 4), self.last])

    def __call__(self, x: np.ndarray, with_grad: bool):
        q = self.poses(x)
        ig = ig_path(self.vmap, self.frontiers, self.cam, q, backend=self.backend, with_grad=with_grad)
        gl = path_length_cost(q, self.weights.w)
        a, b = self.weights.alpha, self.weights.beta
        j = -a * float(ig.value) + b * float(gl.value)
        grad = -a * ig.partials + b * gl.partials if with_grad else None
        return j, float(ig.value), float(gl.value), grad


def optimize_path(
    vmap,
    frontiers,
    cam: CameraModel,
    path: Path,
    weights: ObjectiveWeights = ObjectiveWeights(),
    budget: int = 30,
    backend=None,
    max_step: float | None = None,
) -> OptimizeResult:
    """Preconditioned gradient descent with Armijo backtracking.

    The direction is ``-W^-1 grad J``; every trial point re-derives the
    visibility gates, so accepted steps decrease the true objective.  The
    gradient holds those gates fixed, so ``max_step`` optionally caps how far
    any single coordinate moves in one step.  Endpoints are copied through
    untouched.
    """
    if budget < 0:
        raise ValueError("iteration budget must be non-negative")
    q0 = path.q
    obj = _Objective(vmap, frontiers, cam, (q0[0], q0[-1]), weights, backend)
    x = q0[1:-1].ravel().copy()
    j, ig, gl, grad = obj(x, with_grad=True)
    j_init, ig_init = j, ig
    trace = [TraceRow(0, j, ig, gl, 0.0)]
    if not x.size:
        return OptimizeResult(path, ig, ig_init, j, j, 0, "no-interior", trace)
    winv = np.tile(1.0 / np.asarray(weights.w), len(x) // 4)
    t0 = 1.0 / (4.0 * weights.beta) if weights.beta > 0 else 1.0
    status = "budget"
    it = 0
    while it < budget:
        if not np.all(np.isfinite(grad)):
            status = "nonfinite"
            break
        direction = -winv * grad
        slope = float(grad @ direction)
        if not slope < 0.0:
            status = "stationary"
            break
        dnorm = float(np.linalg.norm(direction))
        t = t0
        if max_step is not None:
            t = min(t, max_step / float(np.abs(direction).max()))
        accepted = False
        while t * dnorm >= STEP_TOL:
            trial = x + t * direction
            trial[3::4] = wrap_angle(trial[3::4])
            j_new = obj(trial, with_grad=False)[0]
            if math.isfinite(j_new) and j_new <= j + ARMIJO_C * t * slope and j_new < j:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            status = "converged"
            break
        it += 1
        x = trial
        j_new, ig, gl, grad = obj(x, with_grad=True)
        j = j_new
        trace.append(TraceRow(it, j, ig, gl, t * dnorm))
        if t * dnorm < STEP_TOL:
            status = "converged"
            break
    out = Path(obj.poses(x))
    out.q[0] = q0[0]
    out.q[-1] = q0[-1]
    return OptimizeResult(out, ig, ig_init, j_init, j, it, status, trace)
