"""Non-parametric Lipschitz (NPL) adversary model.

Learning happens in two steps. First the exponent values at the training
strategies ("anchors") are fitted by maximum likelihood subject to

    |h_ij - h_ik| <= khat * |x^j - x^k|_1   and   |h_ij| <= M / 2,

then each component is extended to all coverage vectors as the least
Lipschitz function through those values::

    h_i(x) = min_j ( h_ij + L_i * |x - x^j|_1 ),
    L_i    = max_{j != k} |h_ij - h_ik| / |x^j - x^k|_1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .game import (DEFAULT_BIG_M, AttackDataset, ValidationError, l1_distance_matrix,
                   log_softmax_from_exponents, softmax_from_exponents)
from .optim import (BandBoxProjector, ConvergenceError, SolverConfig, band_box_violation,
                    projected_gradient_ascent)

DEFAULT_KHAT = 5.0
KHAT_GRID = (0.5, 1.0, 2.0, 5.0, 10.0)


@dataclass(frozen=True, eq=False)
class NplModel:
    anchors: np.ndarray          # (s, T)
    values: np.ndarray           # (T-1, s)
    lipschitz: np.ndarray        # (T-1,)
    khat: float = DEFAULT_KHAT
    M: float = DEFAULT_BIG_M
    clamp: bool = True

    needs_game = False

    def __post_init__(self):
        for name in ("anchors", "values", "lipschitz"):
            a = np.array(getattr(self, name), dtype=float)
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        s, T = self.anchors.shape
        if self.values.shape != (T - 1, s) or self.lipschitz.shape != (T - 1,):
            raise ValidationError("inconsistent NPL model shapes")

    @property
    def num_targets(self) -> int:
        return self.anchors.shape[1]

    def exponents(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        X = x.reshape(-1, self.num_targets)
        D = l1_distance_matrix(X, self.anchors)                        # (n, s)
        h = np.min(self.values[None, :, :] + self.lipschitz[None, :, None] * D[:, None, :],
                   axis=2)                                               # (n, T-1)
        if self.clamp:
            np.clip(h, -self.M / 2, self.M / 2, out=h)
        return h[0] if single else h

    def predict(self, x) -> np.ndarray:
        return softmax_from_exponents(self.exponents(x))


def anchor_loglik(H, counts):
    """Log-likelihood of anchor values ``H`` (T-1, s) and its gradient."""
    logq = log_softmax_from_exponents(H.T)                    # (s, T)
    ll = float(np.sum(counts * logq))
    grad = (counts[:, :-1] - counts.sum(axis=1, keepdims=True) * np.exp(logq[:, :-1])).T
    return ll, grad


def _pull_inside(H, C, bound):
    # Scale toward 0 (strictly feasible when anchors are distinct) to remove
    # round-off violations left by the alternating projections.
    diff = np.abs(H[:, :, None] - H[:, None, :])
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(diff > C[None], C[None] / diff, 1.0)
    theta = min(float(ratio.min(initial=1.0)), 1.0)
    if np.abs(H).max(initial=0.0) > bound:
        theta = min(theta, bound / np.abs(H).max())
    return H * theta if theta < 1.0 else H


BARRIER_GAP_TOL = 1e-9
BARRIER_MAX_NEWTON = 500
BARRIER_MU_FACTOR = 10.0


def _barrier_terms(H, n, C, bound, mu, value_only=False):
    """Barrier objective, gradient and dense Hessian for the anchor program.

    Minimizes ``-LL(H) - mu * (sum log(C_jk - (h_j - h_k)) + sum log(bound^2 - h^2))``
    over ordered pairs ``j != k`` of every row.
    """
    R, s = H.shape
    logq = log_softmax_from_exponents(H.T)
    P = np.exp(logq[:, :R])                                     # (s, R)
    tot = n.sum(axis=1)
    S = C[None] - (H[:, :, None] - H[:, None, :])               # (R, s, s), +inf on diagonals
    b1, b2 = bound - H, bound + H
    if S.min() <= 0 or b1.min() <= 0 or b2.min() <= 0:
        return math.inf, None, None
    val = -float(np.sum(n * logq)) - mu * (float(np.sum(np.log(S[np.isfinite(S)])))
                                           + float(np.sum(np.log(b1) + np.log(b2))))
    if value_only:
        return val, None, None
    iS = 1.0 / S
    grad = -(n[:, :R] - tot[:, None] * P).T + mu * (iS.sum(axis=2) - iS.sum(axis=1)
                                                     + 1 / b1 - 1 / b2)
    W = iS ** 2
    W = mu * (W + W.transpose(0, 2, 1))
    hess = np.zeros((R * s, R * s))
    idx = np.arange(s)
    for r in range(R):
        blk = slice(r * s, (r + 1) * s)
        hess[blk, blk] = -W[r]
        hess[r * s + idx, r * s + idx] = W[r].sum(axis=1) + mu * (1 / b1[r] ** 2 + 1 / b2[r] ** 2)
        for r2 in range(R):
            hess[r * s + idx, r2 * s + idx] += tot * (P[:, r] * (r == r2) - P[:, r] * P[:, r2])
    return val, grad, hess


def _barrier_fit(n, C, bound):
    """Interior-point (log-barrier Newton) solution of the anchor program.

    Iterates stay strictly feasible. Stops once the duality-gap bound
    ``num_constraints * mu`` is below ``BARRIER_GAP_TOL``.
    """
    s, T = n.shape
    R = T - 1
    C = C.astype(float).copy()
    np.fill_diagonal(C, np.inf)
    H = np.zeros((R, s))
    m_cons = R * (s * (s - 1) + 2 * s)
    mu = 1.0
    steps = 0
    while True:
        while True:
            val, grad, hess = _barrier_terms(H, n, C, bound, mu)
            try:
                step = -cho_solve(cho_factor(hess, overwrite_a=True), grad.ravel())
            except np.linalg.LinAlgError:
                step = -np.linalg.lstsq(hess, grad.ravel(), rcond=None)[0]
            dec = -float(grad.ravel() @ step)
            if dec / 2 <= 1e-12 * max(1.0, abs(val)) or dec <= 0:
                break
            D = step.reshape(R, s)
            t = 1.0
            while True:
                cand = H + t * D
                cval = _barrier_terms(cand, n, C, bound, mu, value_only=True)[0]
                if cval <= val - 0.25 * t * dec:
                    break
                t *= 0.5
                if t < 1e-14:
                    break
            if t < 1e-14:
                break
            H = cand
            steps += 1
            if steps > BARRIER_MAX_NEWTON:
                raise ConvergenceError("barrier method exceeded the Newton step cap", H, dec)
        if m_cons * mu <= BARRIER_GAP_TOL:
            return H
        mu /= BARRIER_MU_FACTOR


def _pooled_fit(n, bound):
    # khat = 0: every row is constant across anchors, so the anchors pool
    tot = n.sum(axis=0)
    h = np.log(np.maximum(tot[:-1], 1e-300)) - np.log(max(tot[-1], 1e-300))
    return np.clip(h, -bound, bound)


def npl_fit_anchors(dataset: AttackDataset, khat: float = DEFAULT_KHAT, M: float = DEFAULT_BIG_M,
                    config: SolverConfig | None = None, method: str = "barrier"):
    """Lipschitz-constrained maximum-likelihood exponents at the unique strategies.

    Parameters
    ----------
    method : {"barrier", "pga"}
        ``barrier`` is a log-barrier Newton method (strictly feasible
        iterates, duality gap below ``1e-9``). ``pga`` is projected gradient
        ascent with Dykstra projections configured by ``config``; it is
        much slower once many constraints are active and is kept as an
        independent second solver.

    Returns
    -------
    values : ndarray, shape (T-1, s)
        Column ``j`` belongs to ``dataset.unique_strategies[j]``.
    objective : float
        Log-likelihood at ``values``.
    """
    if len(dataset) == 0:
        raise ValidationError("cannot fit a model to an empty dataset")
    if M <= 0:
        raise ValidationError("M must be positive")
    if khat < 0:
        raise ValidationError("khat must be non-negative")
    X, n = dataset.unique_strategies, dataset.counts
    s, T = X.shape
    C = khat * l1_distance_matrix(X, X)
    bound = M / 2
    if method == "barrier":
        if khat == 0 or s == 1:
            H = np.repeat(_pooled_fit(n, bound)[:, None], s, axis=1)
            # a single anchor is unconstrained apart from the box
        else:
            H = _barrier_fit(n, C, bound)
    elif method == "pga":
        cfg = config or SolverConfig()
        project = BandBoxProjector(C, bound, T - 1, cfg.projection_tol, cfg.projection_max_cycles)
        H, _, diag = projected_gradient_ascent(
            lambda H: anchor_loglik(H, n), project, np.zeros((T - 1, s)), cfg)
        if not diag.converged:
            raise ConvergenceError(f"anchor fit did not converge in {diag.iterations} iterations",
                                   H, diag.grad_norm)
    else:
        raise ValidationError(f"unknown method {method!r}")
    if band_box_violation(H, C, bound) > 0:
        H = _pull_inside(H, C, bound)
    return H, anchor_loglik(H, n)[0]


def minlip_lipschitz(values, anchors) -> np.ndarray:
    """Smallest per-component Lipschitz constant consistent with the anchor values."""
    values = np.asarray(values, dtype=float)
    anchors = np.asarray(anchors, dtype=float)
    s = anchors.shape[0]
    if s <= 1:
        return np.zeros(values.shape[0])
    D = l1_distance_matrix(anchors, anchors)
    iu = np.triu_indices(s, k=1)
    d = D[iu]
    keep = d > 0
    diffs = np.abs(values[:, iu[0]] - values[:, iu[1]])[:, keep]
    return (diffs / d[keep]).max(axis=1, initial=0.0)


def minlip_extend(values, anchors, khat: float = DEFAULT_KHAT, M: float = DEFAULT_BIG_M,
                  clamp: bool = True) -> NplModel:
    return NplModel(anchors, values, minlip_lipschitz(values, anchors), khat, M, clamp)


def npl_fit(dataset: AttackDataset, khat: float = DEFAULT_KHAT, M: float = DEFAULT_BIG_M,
            clamp: bool = True, config: SolverConfig | None = None,
            method: str = "barrier") -> NplModel:
    values, _ = npl_fit_anchors(dataset, khat, M, config, method)
    return minlip_extend(values, dataset.unique_strategies, khat, M, clamp)


def npl_predict(model: NplModel, x) -> np.ndarray:
    return model.predict(x)


def select_khat(dataset: AttackDataset, grid=KHAT_GRID, folds: int = 5, seed: int = 0,
                M: float = DEFAULT_BIG_M) -> tuple[float, dict]:
    """Pick ``khat`` by cross-validated held-out log-likelihood.

    Folds partition the unique strategies. Returns the best value and the
    mean held-out log-likelihood per record for every grid point.
    """
    s = dataset.num_unique
    if s < 2:
        raise ValidationError("need at least two unique strategies for cross-validation")
    folds = min(folds, s)
    order = np.random.default_rng(seed).permutation(s)
    parts = np.array_split(order, folds)
    scores = {}
    for k in grid:
        total, count = 0.0, 0
        for part in parts:
            train = dataset.by_strategy(np.setdiff1d(order, part))
            test = dataset.by_strategy(part)
            model = npl_fit(train, k, M)
            q = model.predict(test.strategies)
            total += float(np.sum(np.log(q[np.arange(len(test)), test.targets])))
            count += len(test)
        scores[k] = total / count
    best = max(scores, key=lambda k: (scores[k], -k))
    return best, scores
