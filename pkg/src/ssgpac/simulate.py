"""Ground-truth adversaries, defender strategy samplers and attack simulation."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .game import AttackDataset, SecurityGame, ValidationError

# Coverage, reward and penalty weights of the human-subject SUQR fit that the
# simulated-data experiments reuse.
PAPER_SUQR_WEIGHTS = (-9.85, 0.37, 0.15)

TRUTH_KINDS = ("suqr-standard", "suqr-generalized", "suqr-quadratic")
SAMPLERS = ("uniform-rejection", "dirichlet-scaled", "anchored-grid")
MAX_REJECTION_ATTEMPTS = 10_000_000


@dataclass(frozen=True, eq=False)
class GroundTruth:
    """A known adversary: ``q_i(x) ∝ exp(w1 * phi(x_i) + c_i)``.

    ``phi`` is the identity for the two SUQR kinds and the square for
    ``suqr-quadratic``. The standard kind is the generalized one with
    ``c_i = w2 R_i + w3 P_i``; ``w2``/``w3`` are kept for reference.
    """

    kind: str
    w1: float
    c: np.ndarray
    w2: float | None = None
    w3: float | None = None

    needs_game = False

    def __post_init__(self):
        if self.kind not in TRUTH_KINDS:
            raise ValidationError(f"unknown ground-truth kind {self.kind!r}")
        c = np.array(self.c, dtype=float).reshape(-1)
        if not (np.isfinite(self.w1) and np.all(np.isfinite(c))):
            raise ValidationError("ground-truth parameters must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "c", c)

    @classmethod
    def from_game(cls, game: SecurityGame, kind: str = "suqr-standard",
                  weights=PAPER_SUQR_WEIGHTS) -> "GroundTruth":
        if not game.has_features:
            raise ValidationError("the game needs rewards and penalties")
        w1, w2, w3 = weights
        return cls(kind, w1, w2 * game.rewards + w3 * game.penalties, w2, w3)

    @property
    def num_targets(self) -> int:
        return self.c.size

    def predict(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        feat = x ** 2 if self.kind == "suqr-quadratic" else x
        u = self.w1 * feat + self.c
        u = u - u.max(axis=-1, keepdims=True)
        e = np.exp(u)
        return e / e.sum(axis=-1, keepdims=True)


def random_game(T: int, K: int, seed: int, r_max: float = 10.0, p_min: float = -10.0) -> SecurityGame:
    """Random game with rewards in ``[1, r_max]`` and penalties in ``[p_min, -1]``.

    The payoff is ``U = diag(R)``: ``x^T U q = sum_i x_i R_i q_i`` is the
    expected value of the attacks the defender intercepts.
    """
    rng = np.random.default_rng(seed)
    R = rng.uniform(1.0, r_max, T)
    P = rng.uniform(p_min, -1.0, T)
    return SecurityGame(T, K, np.diag(R), rewards=R, penalties=P, r_max=r_max, p_min=p_min)


def sample_strategies(T: int, K: float, count: int, sampler: str = "uniform-rejection",
                      seed: int | np.random.Generator = 0, *, center=None,
                      concentration: float = 1.0, grid_steps: int = 10) -> np.ndarray:
    """Draw ``count`` feasible coverage vectors, shape ``(count, T)``.

    ``uniform-rejection`` is exactly uniform on the polytope.
    ``dirichlet-scaled`` draws ``K * Dirichlet`` over ``T`` targets plus a
    slack coordinate and caps entries at 1; with ``center`` the Dirichlet
    mean is ``center`` and ``concentration`` sets how tightly draws cluster.
    ``anchored-grid`` draws uniformly from feasible points of the lattice
    with spacing ``1 / grid_steps``, so repeats are likely.
    """
    rng = np.random.default_rng(seed)
    if count < 0:
        raise ValueError("count must be non-negative")
    if count == 0:
        return np.zeros((0, T))
    if sampler == "uniform-rejection":
        return _rejection(rng, T, K, count, lambda n: rng.random((n, T)))
    if sampler == "anchored-grid":
        return _rejection(rng, T, K, count,
                          lambda n: rng.integers(0, grid_steps + 1, (n, T)) / grid_steps)
    if sampler == "dirichlet-scaled":
        if center is None:
            alpha = np.ones(T + 1) * concentration
        else:
            center = np.asarray(center, dtype=float)
            slack = max(K - center.sum(), 0.0)
            mean = np.append(center, slack) / K
            alpha = concentration * np.maximum(mean, 1e-3)
        draws = K * rng.dirichlet(alpha, size=count)[:, :T]
        return np.minimum(draws, 1.0)
    raise ValueError(f"unknown sampler {sampler!r}; choose from {SAMPLERS}")


def _rejection(rng, T, K, count, draw):
    out, attempts = [], 0
    while sum(len(o) for o in out) < count:
        n = max(1024, 2 * count)
        attempts += n
        if attempts > MAX_REJECTION_ATTEMPTS:
            raise RuntimeError("rejection sampler exceeded 1e7 attempts; "
                               "try sampler='dirichlet-scaled'")
        cand = draw(n)
        out.append(cand[cand.sum(axis=1) <= K + 1e-12])
    return np.concatenate(out)[:count]


def simulate_attacks(truth, strategies, attacks_per_strategy: int = 1,
                     seed: int | np.random.Generator = 0) -> AttackDataset:
    """Draw attacks from ``truth`` against every strategy in turn."""
    rng = np.random.default_rng(seed)
    X = np.asarray(strategies, dtype=float)
    T = X.shape[1]
    if attacks_per_strategy < 0:
        raise ValueError("attacks_per_strategy must be non-negative")
    if X.shape[0] == 0 or attacks_per_strategy == 0:
        return AttackDataset(np.zeros((0, T)), np.zeros(0, dtype=int), T)
    Q = truth.predict(X)
    cdf = np.cumsum(Q, axis=1)
    cdf[:, -1] = 1.0
    u = rng.random((X.shape[0], attacks_per_strategy))
    targets = np.array([np.searchsorted(cdf[j], u[j], side="right") for j in range(X.shape[0])])
    return AttackDataset(np.repeat(X, attacks_per_strategy, axis=0), targets.reshape(-1), T)


def simulate_dataset(truth, T: int, K: float, num_strategies: int, attacks_per_strategy: int,
                     sampler: str = "uniform-rejection", seed: int = 0) -> AttackDataset:
    """Sample strategies, then attacks against them, from one seeded stream."""
    rng = np.random.default_rng(seed)
    X = sample_strategies(T, K, num_strategies, sampler, rng)
    return simulate_attacks(truth, X, attacks_per_strategy, rng)
