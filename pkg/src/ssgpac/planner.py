"""Defender planning against a learned adversary, and the utility guarantee.

``plan_strategy`` maximizes ``f(x) = x^T U q(x)`` over the coverage
polytope. The objective is nonconvex, so several starts are run and the
best local optimum is kept. Gradients are central differences, which
works for any predictor, including the piecewise-smooth NPL model.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .complexity import EXACT_MAX_T, irwin_hall_cdf
from .game import SecurityGame, ValidationError, as_predictor, uniform_strategy
from .optim import SolverConfig, project_capped_simplex, projected_gradient_ascent
from .simulate import sample_strategies

FD_STEP = 1e-6
POLISH_MAX_T = 4
POLISH_STEP = 1e-3
POLISH_MIN_STEP = 1e-7
PLANNER_CONFIG = SolverConfig(max_iters=5_000, grad_tol=1e-9, obj_tol=1e-13)
# below this feasible-volume fraction, rejection sampling of starts is too slow
_MIN_REJECTION_VOLUME = 1e-3


@dataclass
class PlanDiagnostics:
    start_points: np.ndarray = field(repr=False)
    start_values: list
    final_values: list
    best_start: int
    polished: bool = False


def _utilities(U, predict, X):
    Q = predict(X)
    return np.einsum("ni,ij,nj->n", X, U, Q)


def _objective(U, predict, T):
    eye = np.eye(T) * FD_STEP

    def fun(x):
        pts = np.vstack([x[None, :], x + eye, x - eye])
        vals = _utilities(U, predict, pts)
        return float(vals[0]), (vals[1:T + 1] - vals[T + 1:]) / (2 * FD_STEP)

    return fun


def _starts(game: SecurityGame, num_starts: int, seed: int) -> np.ndarray:
    T, K = game.num_targets, game.num_resources
    first = uniform_strategy(game)[None, :]
    if num_starts == 1:
        return first
    volume = float(irwin_hall_cdf(T, K)) if T <= EXACT_MAX_T else 0.0
    sampler = "uniform-rejection" if volume >= _MIN_REJECTION_VOLUME else "dirichlet-scaled"
    rest = sample_strategies(T, K, num_starts - 1, sampler, seed)
    return np.vstack([first, rest])


def _polish(U, predict, x, f, K):
    """Compass search over all ``3^T - 1`` directions with a shrinking step."""
    T = x.size
    dirs = np.array([d for d in itertools.product((-1.0, 0.0, 1.0), repeat=T) if any(d)])
    h = POLISH_STEP
    while h >= POLISH_MIN_STEP:
        cand = project_capped_simplex(x + h * dirs, K)
        vals = _utilities(U, predict, cand)
        j = int(np.argmax(vals))
        if vals[j] > f:
            x, f = cand[j], float(vals[j])
        else:
            h /= 2
    return x, f


def plan_strategy(game: SecurityGame, model, num_starts: int = 32, seed: int = 0,
                  config: SolverConfig | None = None, polish: bool | None = None):
    """Best coverage vector against ``model`` found by multi-start projected ascent.

    Parameters
    ----------
    game : SecurityGame
    model : predictor
        Anything :func:`as_predictor` accepts; it must handle a stack of
        coverage vectors.
    num_starts : int
        The ``K/T`` uniform point plus ``num_starts - 1`` random feasible
        starts drawn with ``seed``.
    polish : bool, optional
        Run the compass-search polish; defaults to ``T <= 4``.

    Returns
    -------
    x, utility, PlanDiagnostics
    """
    if num_starts < 1:
        raise ValidationError("num_starts must be at least 1")
    T, K = game.num_targets, game.num_resources
    U = np.asarray(game.payoff, dtype=float)
    predict = as_predictor(model, game)
    fun = _objective(U, predict, T)
    project = lambda y: project_capped_simplex(y, K)
    cfg = config or PLANNER_CONFIG

    starts = _starts(game, num_starts, seed)
    start_vals = [float(v) for v in _utilities(U, predict, starts)]
    finals, points = [], []
    for x0 in starts:
        x, f, _ = projected_gradient_ascent(fun, project, x0, cfg)
        points.append(x)
        finals.append(f)
    best = int(np.argmax(finals))
    x, f = points[best], finals[best]
    do_polish = T <= POLISH_MAX_T if polish is None else polish
    if do_polish:
        x, f = _polish(U, predict, x, f, K)
    # never return less than the best start (ascent is monotone, this guards round-off)
    j = int(np.argmax(start_vals))
    if start_vals[j] > f:
        x, f = starts[j].copy(), start_vals[j]
    return x, f, PlanDiagnostics(starts, start_vals, finals, best, do_polish)


# -- utility guarantee -------------------------------------------------------

def delta_from_risk(alpha: float, eps_star: float) -> tuple[float, float]:
    """``Delta = (alpha + eps_star)^(1/3)`` and the l1 deviation ``sqrt(2) * Delta``.

    With probability at least ``1 - Delta`` over strategies the learned and
    true attack distributions are within ``sqrt(2) * Delta`` in l1.
    """
    total = alpha + eps_star
    if total < 0:
        raise ValidationError("alpha + eps_star must be non-negative")
    delta = total ** (1.0 / 3.0)
    return delta, math.sqrt(2.0) * delta


@dataclass(frozen=True)
class UtilityBoundInputs:
    """Inputs of the utility guarantee.

    Attributes
    ----------
    opt_utility : float
        Utility of the optimal strategy against the true adversary.
    eps : float
        Radius of the low-density balls around the learned and true optima.
    K_p : float
        Lipschitz constant of the true response function (not the number
        of resources).
    khat : float
        Lipschitz bound of the learned NPL class.
    alpha, eps_star : float
        PAC risk gap and the KL gap of the best hypothesis.
    """

    opt_utility: float
    eps: float
    K_p: float
    khat: float
    alpha: float
    eps_star: float = 0.0

    def __post_init__(self):
        if min(self.eps, self.K_p, self.khat, self.eps_star) < 0:
            raise ValidationError("eps, K_p, khat and eps_star must be non-negative")
        if self.alpha + self.eps_star < 0:
            raise ValidationError("alpha + eps_star must be non-negative")


def utility_lower_bound(inputs: UtilityBoundInputs) -> float:
    """``opt - (K_p + 1) eps - 2 sqrt(2) Delta - 6 khat eps``."""
    delta, l1 = delta_from_risk(inputs.alpha, inputs.eps_star)
    return (inputs.opt_utility - (inputs.K_p + 1) * inputs.eps - 2 * l1
            - 6 * inputs.khat * inputs.eps)


def empirical_pinsker_check(q_p, q_h) -> tuple[float, float, bool]:
    """Both sides of ``0.5 * |q_p - q_h|_1^2 <= KL(q_p || q_h)``."""
    q_p = np.asarray(q_p, dtype=float)
    q_h = np.asarray(q_h, dtype=float)
    if q_p.shape != q_h.shape:
        raise ValidationError("distributions must have the same shape")
    pos = q_p > 0
    if np.any(q_h[pos] <= 0):
        kl = math.inf
    else:
        kl = float(np.sum(q_p[pos] * (np.log(q_p[pos]) - np.log(q_h[pos]))))
    half_l1_sq = 0.5 * float(np.abs(q_p - q_h).sum()) ** 2
    return kl, half_l1_sq, bool(half_l1_sq <= kl or math.isinf(kl))
