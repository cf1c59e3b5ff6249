"""Optimization primitives shared by the learners and the planner.

All projections are Euclidean. The ascent routine maximizes; pass the
objective, not its negation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba
import numpy as np


class ConvergenceError(RuntimeError):
    """An iterative solver hit its iteration cap.

    ``point`` holds the last iterate and ``grad_norm`` the last
    projected-gradient norm so callers can inspect how far off it was.
    """

    def __init__(self, message, point=None, grad_norm=math.nan):
        super().__init__(message)
        self.point = point
        self.grad_norm = grad_norm


@dataclass(frozen=True)
class SolverConfig:
    max_iters: int = 100_000
    grad_tol: float = 1e-7
    obj_tol: float = 1e-10
    armijo_c: float = 1e-4
    backtrack_factor: float = 0.5
    projection_tol: float = 1e-10
    projection_max_cycles: int = 1000
    obj_patience: int = 5

    def __post_init__(self):
        for name in ("max_iters", "grad_tol", "obj_tol", "armijo_c",
                     "projection_tol", "projection_max_cycles", "obj_patience"):
            if not getattr(self, name) > 0:
                raise ValueError(f"SolverConfig.{name} must be positive")
        if not 0 < self.backtrack_factor < 1:
            raise ValueError("SolverConfig.backtrack_factor must lie in (0, 1)")


@dataclass
class AscentDiagnostics:
    iterations: int = 0
    evaluations: int = 0
    grad_norm: float = math.inf
    converged: bool = False
    reason: str = ""
    values: list = field(default_factory=list, repr=False)


def project_capped_simplex(v, K: float, iters: int = 100) -> np.ndarray:
    """Project ``v`` onto ``{x in [0, 1]^T : sum(x) <= K}``.

    The solution is ``clip(v - lam, 0, 1)`` for the smallest ``lam >= 0``
    meeting the budget; ``lam`` is found by bisection. A 2-D input is
    projected row by row.
    """
    if K <= 0:
        raise ValueError("K must be positive")
    v = np.asarray(v, dtype=float)
    if v.ndim == 2:
        return np.stack([project_capped_simplex(row, K, iters) for row in v])
    x = np.clip(v, 0.0, 1.0)
    if x.sum() <= K:
        return x
    lo, hi = 0.0, float(v.max())
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if np.clip(v - mid, 0.0, 1.0).sum() > K:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-16 * max(1.0, hi):
            break
    x = np.clip(v - hi, 0.0, 1.0)
    # hi is the feasible side of the bracket; rescale the free block so the
    # budget is met to rounding
    free = (x > 0) & (x < 1)
    if free.any():
        x[free] += (K - x.sum()) / free.sum()
        np.clip(x, 0.0, 1.0, out=x)
    return x


def project_pairwise_band(a, b, c):
    """Nearest ``(a', b')`` to ``(a, b)`` with ``|a' - b'| <= c``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    excess = np.maximum(np.abs(a - b) - c, 0.0) / 2.0
    s = np.sign(a - b) * excess
    a2, b2 = a - s, b + s
    if a2.ndim == 0:
        return float(a2), float(b2)
    return a2, b2


def dykstra(x0, projections, tol: float = 1e-10, max_cycles: int = 1000):
    """Dykstra's alternating projections onto an intersection of convex sets.

    ``projections`` is a sequence of callables, each the exact projection
    onto one set. Returns ``(x, cycles, converged)``.
    """
    x = np.array(x0, dtype=float)
    incs = [np.zeros_like(x) for _ in projections]
    for cycle in range(1, max_cycles + 1):
        prev = x.copy()
        for k, proj in enumerate(projections):
            y = x + incs[k]
            x = proj(y)
            incs[k] = y - x
        if np.max(np.abs(x - prev)) <= tol:
            return x, cycle, True
    return x, max_cycles, False


@numba.njit(cache=True)
def _band_box_dykstra(Z, C, bound, tol, max_cycles, inc_pair, inc_box):
    # inc_pair[r, j, k] is the Dykstra increment of coordinate j from pair
    # (j, k); together with inc_box they are the dual variables of the
    # projection problem, and the iterate is always Z - (sum of increments).
    R, s = Z.shape
    out = np.empty_like(Z)
    worst = 0
    for r in range(R):
        x = Z[r].copy()
        for j in range(s):
            x[j] -= inc_box[r, j]
            for k in range(s):
                x[j] -= inc_pair[r, j, k]
        cycles = 0
        for cycle in range(max_cycles):
            cycles = cycle + 1
            change = 0.0
            for j in range(s):
                for k in range(j + 1, s):
                    ya = x[j] + inc_pair[r, j, k]
                    yb = x[k] + inc_pair[r, k, j]
                    d = ya - yb
                    c = C[j, k]
                    if d > c:
                        sh = 0.5 * (d - c)
                        na, nb = ya - sh, yb + sh
                    elif d < -c:
                        sh = 0.5 * (-c - d)
                        na, nb = ya + sh, yb - sh
                    else:
                        na, nb = ya, yb
                    inc_pair[r, j, k] = ya - na
                    inc_pair[r, k, j] = yb - nb
                    change = max(change, abs(na - x[j]), abs(nb - x[k]))
                    x[j] = na
                    x[k] = nb
            for j in range(s):
                y = x[j] + inc_box[r, j]
                nv = min(max(y, -bound), bound)
                inc_box[r, j] = y - nv
                change = max(change, abs(nv - x[j]))
                x[j] = nv
            if change <= tol:
                break
        worst = max(worst, cycles)
        out[r] = x
    return out, worst


class BandBoxProjector:
    """Projection onto ``{z : |z_j - z_k| <= C[j, k], |z_j| <= bound}``, row by row.

    Uses Dykstra's method with one set per pair ``(j, k)`` plus the box.
    The increments are kept between calls: they are dual variables of the
    projection problem, every value of them is dual feasible, so starting
    from the previous call's values is valid and, when successive inputs
    are close (as inside a gradient method), much faster than starting
    from zero.
    """

    def __init__(self, C, bound: float, rows: int, tol: float = 1e-10, max_cycles: int = 1000):
        self.C = np.ascontiguousarray(C, dtype=float)
        s = self.C.shape[0]
        if self.C.shape != (s, s):
            raise ValueError("pairwise bounds must be a square matrix")
        self.bound, self.tol, self.max_cycles = float(bound), float(tol), int(max_cycles)
        self.inc_pair = np.zeros((rows, s, s))
        self.inc_box = np.zeros((rows, s))
        self.last_cycles = 0

    def __call__(self, Z) -> np.ndarray:
        Z = np.ascontiguousarray(Z, dtype=float)
        if Z.shape != self.inc_box.shape:
            raise ValueError("shape mismatch between values and pairwise bounds")
        out, self.last_cycles = _band_box_dykstra(Z, self.C, self.bound, self.tol,
                                                  self.max_cycles, self.inc_pair, self.inc_box)
        return out


def project_band_box(Z, C, bound: float, tol: float = 1e-10, max_cycles: int = 1000):
    """Project each row of ``Z`` onto ``{z : |z_j - z_k| <= C[j, k], |z_j| <= bound}``.

    Returns ``(projected, cycles_used)`` where ``cycles_used`` is the worst
    row's Dykstra cycle count.
    """
    Z = np.ascontiguousarray(Z, dtype=float)
    if Z.ndim != 2 or np.shape(C) != (Z.shape[1], Z.shape[1]):
        raise ValueError("shape mismatch between values and pairwise bounds")
    proj = BandBoxProjector(C, bound, Z.shape[0], tol, max_cycles)
    return proj(Z), proj.last_cycles


def band_box_violation(Z, C, bound: float) -> float:
    """Largest constraint violation of ``Z`` for the set used by :func:`project_band_box`."""
    Z = np.asarray(Z, dtype=float)
    diff = np.abs(Z[:, :, None] - Z[:, None, :]) - np.asarray(C)[None]
    return float(max(diff.max(initial=0.0), (np.abs(Z) - bound).max(initial=0.0), 0.0))


def projected_gradient_ascent(fun, project, x0, config: SolverConfig | None = None,
                              initial_step: float | None = None, record: bool = False):
    """Maximize a smooth function over a convex set by projected gradient ascent.

    ``fun(x)`` returns ``(value, gradient)``; ``project(y)`` returns the
    nearest feasible point. Trial steps start from a Barzilai-Borwein
    estimate and are halved until the Armijo condition holds, so the
    accepted objective values never decrease.

    Stops when the gradient mapping ``|P(x + t g) - x| / t`` drops below
    ``grad_tol``, when the relative objective change stays below
    ``obj_tol`` for ``obj_patience`` consecutive iterations (a single short
    step says little), or after ``max_iters`` iterations
    (``converged=False``).

    Returns ``(x, value, diagnostics)``.
    """
    cfg = config or SolverConfig()
    x = np.array(x0, dtype=float)
    f, g = fun(x)
    diag = AscentDiagnostics(evaluations=1)
    if not np.isfinite(f) or not np.all(np.isfinite(g)):
        raise FloatingPointError("objective is not finite at the initial point")
    t = initial_step if initial_step is not None else 1.0 / max(1.0, float(np.abs(g).max()))
    if record:
        diag.values.append(float(f))
    flat = 0
    for it in range(1, cfg.max_iters + 1):
        diag.iterations = it
        slope_ok = False
        while t > 1e-30:
            xn = project(x + t * g)
            d = xn - x
            fn, gn = fun(xn)
            diag.evaluations += 1
            if not np.isfinite(fn):
                raise FloatingPointError("objective became non-finite")
            if fn >= f + cfg.armijo_c * float(np.vdot(g, d)):
                slope_ok = True
                break
            t *= cfg.backtrack_factor
        if not slope_ok:
            diag.reason = "line search stalled"
            diag.converged = True
            diag.grad_norm = float(np.linalg.norm(project(x + g) - x))
            return x, float(f), diag
        diag.grad_norm = float(np.linalg.norm(d)) / t
        rel = abs(fn - f) / max(1.0, abs(f))
        y = gn - g
        sy = float(np.vdot(d, y))
        t_next = float(np.vdot(d, d)) / -sy if sy < 0 else 2.0 * t
        x, f, g = xn, fn, gn
        if record:
            diag.values.append(float(f))
        if diag.grad_norm <= cfg.grad_tol:
            diag.converged, diag.reason = True, "gradient tolerance"
            return x, float(f), diag
        flat = flat + 1 if rel <= cfg.obj_tol else 0
        if flat >= cfg.obj_patience:
            diag.converged, diag.reason = True, "objective tolerance"
            return x, float(f), diag
        t = min(max(t_next, 1e-12), 1e12)
    diag.reason = "iteration cap"
    return x, float(f), diag


def finite_diff_check(objective, gradient, point, step: float = 1e-6) -> float:
    """Worst per-coordinate relative error of ``gradient`` against central differences.

    The error at coordinate ``k`` is ``|g_k - fd_k| / max(|fd_k|, floor)``
    with ``floor = 1e-6 * max(1, max_k |fd_k|)``, so coordinates whose true
    derivative is near zero are judged on an absolute scale.
    """
    x = np.array(point, dtype=float)
    g = np.asarray(gradient(x), dtype=float).ravel()
    flat = x.ravel()
    fd = np.empty_like(flat)
    for k in range(flat.size):
        orig = flat[k]
        flat[k] = orig + step
        fp = objective(flat.reshape(x.shape))
        flat[k] = orig - step
        fm = objective(flat.reshape(x.shape))
        flat[k] = orig
        fd[k] = (fp - fm) / (2 * step)
    floor = 1e-6 * max(1.0, float(np.abs(fd).max(initial=0.0)))
    return float(np.max(np.abs(g - fd) / np.maximum(np.abs(fd), floor)))
