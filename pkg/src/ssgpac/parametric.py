"""Standard and generalized SUQR response models with maximum-likelihood fitting.

Generalized SUQR uses one coverage weight ``w1`` shared by all targets and
per-target intercepts measured against the last target::

    h_i(x) = w1 * (x_i - x_{T-1}) + c_i,    i = 0 .. T-2

Standard SUQR scores every target with ``w1*x_i + w2*R_i + w3*P_i``.
Both log-likelihoods are concave (conditional logit), so projected
gradient ascent from zero reaches the maximizer.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .game import (DEFAULT_BIG_M, AttackDataset, SecurityGame, ValidationError,
                   log_softmax_from_exponents, softmax_from_exponents)
from .optim import ConvergenceError, SolverConfig, projected_gradient_ascent

SSUQR_RIDGE = 1e-8


@dataclass(frozen=True)
class GeneralizedSuqrModel:
    w1: float
    c: np.ndarray
    M: float = DEFAULT_BIG_M

    needs_game = False

    def __post_init__(self):
        c = np.array(self.c, dtype=float).reshape(-1)
        c.setflags(write=False)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "w1", float(self.w1))
        if not (np.isfinite(self.w1) and np.all(np.isfinite(c))):
            raise ValidationError("SUQR parameters must be finite")

    @property
    def num_targets(self) -> int:
        return self.c.size + 1

    def exponents(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.num_targets:
            raise ValidationError(f"expected {self.num_targets} targets, got {x.shape[-1]}")
        return self.w1 * (x[..., :-1] - x[..., -1:]) + self.c

    def predict(self, x) -> np.ndarray:
        return softmax_from_exponents(self.exponents(x))


@dataclass(frozen=True)
class StandardSuqrModel:
    w1: float
    w2: float
    w3: float

    needs_game = True

    def __post_init__(self):
        for name in ("w1", "w2", "w3"):
            v = float(getattr(self, name))
            if not np.isfinite(v):
                raise ValidationError("SUQR parameters must be finite")
            object.__setattr__(self, name, v)

    @property
    def weights(self) -> np.ndarray:
        return np.array([self.w1, self.w2, self.w3])

    def predict(self, x, game: SecurityGame) -> np.ndarray:
        if not game.has_features:
            raise ValidationError("standard SUQR needs rewards and penalties")
        x = np.asarray(x, dtype=float)
        u = self.w1 * x + self.w2 * game.rewards + self.w3 * game.penalties
        u = u - u.max(axis=-1, keepdims=True)
        e = np.exp(u)
        return e / e.sum(axis=-1, keepdims=True)


def gsuqr_predict(model: GeneralizedSuqrModel, x) -> np.ndarray:
    return model.predict(x)


def ssuqr_predict(model: StandardSuqrModel, game: SecurityGame, x) -> np.ndarray:
    return model.predict(x, game)


# -- log-likelihoods ---------------------------------------------------------

def gsuqr_loglik(theta, X, counts):
    """Log-likelihood and gradient for ``theta = (w1, c_0, ..., c_{T-2})``.

    ``X`` holds the unique strategies (s, T) and ``counts`` the attack
    counts (s, T).
    """
    theta = np.asarray(theta, dtype=float)
    diff = X[:, :-1] - X[:, -1:]
    h = theta[0] * diff + theta[1:]
    logq = log_softmax_from_exponents(h)
    ll = float(np.sum(counts * logq))
    resid = counts[:, :-1] - counts.sum(axis=1, keepdims=True) * np.exp(logq[:, :-1])
    grad = np.empty_like(theta)
    grad[0] = np.sum(resid * diff)
    grad[1:] = resid.sum(axis=0)
    return ll, grad


def ssuqr_features(X, game: SecurityGame) -> np.ndarray:
    """Feature tensor (s, T, 3): coverage, reward and penalty per target."""
    X = np.asarray(X, dtype=float)
    s, T = X.shape
    F = np.empty((s, T, 3))
    F[:, :, 0] = X
    F[:, :, 1] = game.rewards
    F[:, :, 2] = game.penalties
    return F


def ssuqr_loglik(w, F, counts, ridge: float = 0.0):
    """Log-likelihood (minus ``ridge * |w|^2``) and gradient for standard SUQR."""
    w = np.asarray(w, dtype=float)
    u = F @ w
    u = u - u.max(axis=1, keepdims=True)
    logq = u - np.log(np.exp(u).sum(axis=1, keepdims=True))
    ll = float(np.sum(counts * logq)) - ridge * float(w @ w)
    resid = counts - counts.sum(axis=1, keepdims=True) * np.exp(logq)
    grad = np.einsum("st,stk->k", resid, F) - 2 * ridge * w
    return ll, grad


def log_likelihood(model, dataset: AttackDataset, game: SecurityGame | None = None) -> float:
    """Total log-likelihood of the attacks in ``dataset`` under ``model``."""
    if len(dataset) == 0:
        raise ValidationError("dataset is empty")
    X, n = dataset.unique_strategies, dataset.counts
    if isinstance(model, StandardSuqrModel):
        if game is None:
            raise ValidationError("standard SUQR needs the game")
        q = model.predict(X, game)
    else:
        q = model.predict(X)
    with np.errstate(divide="ignore"):
        logq = np.log(q)
    return float(np.sum(np.where(n > 0, n * logq, 0.0)))


def empirical_risk(model, dataset: AttackDataset, game: SecurityGame | None = None) -> float:
    """Average loss ``-LL / m``; minimizing it is maximum likelihood."""
    return -log_likelihood(model, dataset, game) / len(dataset)


# -- fitting -----------------------------------------------------------------

def project_shared_l1(theta, radius: float) -> np.ndarray:
    """Euclidean projection onto ``{(w, c) : |w| + |c_i| <= radius for all i}``.

    For a fixed ``|w| = t`` the intercepts are clipped to ``radius - t``;
    the optimal ``t`` zeroes a piecewise-linear increasing derivative and
    is found exactly by walking its breakpoints.
    """
    theta = np.asarray(theta, dtype=float)
    w, c = theta[0], theta[1:]
    a, b = abs(w), np.abs(c)
    if a + (b.max(initial=0.0)) <= radius:
        return theta.copy()

    def slope(t):
        return t - a + np.sum(np.maximum(b - (radius - t), 0.0))

    if slope(0.0) >= 0:
        t = 0.0
    elif slope(radius) <= 0:
        t = radius
    else:
        knots = np.unique(np.concatenate([[0.0, radius], np.clip(radius - b, 0.0, radius)]))
        t = radius
        for lo, hi in zip(knots[:-1], knots[1:]):
            if slope(hi) >= 0:
                active = (radius - b) <= lo
                t = (a - np.sum(b[active] - radius)) / (1.0 + active.sum())
                t = min(max(t, lo), hi)
                break
    out = np.empty_like(theta)
    out[0] = np.sign(w) * t
    out[1:] = np.sign(c) * np.minimum(b, radius - t)
    return out


def _require_data(dataset: AttackDataset):
    if len(dataset) == 0:
        raise ValidationError("cannot fit a model to an empty dataset")


def gsuqr_fit(dataset: AttackDataset, M: float = DEFAULT_BIG_M,
              config: SolverConfig | None = None) -> GeneralizedSuqrModel:
    """Maximum-likelihood generalized SUQR under ``|w1| + |c_i| <= M/2``.

    The constraint keeps every exponent in ``[-M/2, M/2]`` for all feasible
    coverage vectors, since ``x_i - x_{T-1}`` lies in ``[-1, 1]``.
    """
    _require_data(dataset)
    if M <= 0:
        raise ValidationError("M must be positive")
    X, n = dataset.unique_strategies, dataset.counts
    T = dataset.num_targets
    theta, _, diag = projected_gradient_ascent(
        lambda th: gsuqr_loglik(th, X, n),
        lambda th: project_shared_l1(th, M / 2),
        np.zeros(T), config)
    if not diag.converged:
        raise ConvergenceError(f"generalized SUQR fit did not converge in {diag.iterations} iterations",
                               theta, diag.grad_norm)
    return GeneralizedSuqrModel(theta[0], theta[1:], M)


def ssuqr_fit(dataset: AttackDataset, game: SecurityGame,
              config: SolverConfig | None = None, ridge: float = SSUQR_RIDGE) -> StandardSuqrModel:
    """Maximum-likelihood standard SUQR with a tiny ridge for separable data."""
    _require_data(dataset)
    if not game.has_features:
        raise ValidationError("standard SUQR needs rewards and penalties")
    if dataset.num_targets != game.num_targets:
        raise ValidationError("dataset and game disagree on the number of targets")
    F = ssuqr_features(dataset.unique_strategies, game)
    n = dataset.counts
    w, _, diag = projected_gradient_ascent(
        lambda v: ssuqr_loglik(v, F, n, ridge), lambda v: v, np.zeros(3), config)
    if not diag.converged:
        raise ConvergenceError(f"standard SUQR fit did not converge in {diag.iterations} iterations",
                               w, diag.grad_norm)
    return StandardSuqrModel(*w)
