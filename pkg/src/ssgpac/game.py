"""Security game domain types: games, coverage strategies, attack data.

Targets are 0-indexed. Whenever an attack distribution is built from a
vector of ``T - 1`` exponents, the last target (index ``T - 1``) is the
reference whose exponent is fixed to zero.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

DEFAULT_BIG_M = 20.0
_SUM_TOL = 1e-12
_FEAS_TOL = 1e-9


class ValidationError(ValueError):
    """Raised when an input violates a domain invariant."""


@dataclass(frozen=True)
class SecurityGame:
    """A security game with ``num_targets`` targets and ``num_resources`` resources.

    ``payoff`` is the defender's bilinear utility matrix: playing coverage
    ``x`` against attack distribution ``q`` yields ``x @ payoff @ q``.
    Rewards and penalties are only needed by the standard SUQR model.
    """

    num_targets: int
    num_resources: int
    payoff: np.ndarray
    rewards: np.ndarray | None = None
    penalties: np.ndarray | None = None
    r_max: float = 10.0
    p_min: float = -10.0

    def __post_init__(self):
        T, K = self.num_targets, self.num_resources
        if T < 2 or not 1 <= K < T:
            raise ValidationError(f"need 1 <= K < T, got T={T}, K={K}")
        U = np.array(self.payoff, dtype=float)
        if U.shape != (T, T) or not np.all(np.isfinite(U)):
            raise ValidationError(f"payoff must be a finite {T}x{T} matrix")
        U.setflags(write=False)
        object.__setattr__(self, "payoff", U)
        if self.r_max <= 0 or self.p_min >= 0:
            raise ValidationError("r_max must be positive and p_min negative")
        for name, lo, hi in (("rewards", 0.0, self.r_max),
                             ("penalties", self.p_min, 0.0)):
            v = getattr(self, name)
            if v is None:
                continue
            v = np.array(v, dtype=float)
            if v.shape != (T,):
                raise ValidationError(f"{name} must have length {T}")
            if np.any(v < lo) or np.any(v > hi):
                raise ValidationError(f"{name} must lie in [{lo}, {hi}]")
            v.setflags(write=False)
            object.__setattr__(self, name, v)

    @property
    def has_features(self) -> bool:
        return self.rewards is not None and self.penalties is not None

    def to_dict(self) -> dict:
        d = {"T": self.num_targets, "K": self.num_resources,
             "U": self.payoff.tolist()}
        if self.rewards is not None:
            d["R"] = self.rewards.tolist()
        if self.penalties is not None:
            d["P"] = self.penalties.tolist()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SecurityGame":
        try:
            T, K, U = int(d["T"]), int(d["K"]), d["U"]
        except KeyError as exc:
            raise ValidationError(f"game is missing field {exc}") from None
        kwargs = {}
        if d.get("R") is not None:
            kwargs["rewards"] = d["R"]
            kwargs["r_max"] = max(10.0, max(d["R"]))
        if d.get("P") is not None:
            kwargs["penalties"] = d["P"]
            kwargs["p_min"] = min(-10.0, min(d["P"]))
        return cls(T, K, U, **kwargs)


def load_game(path) -> SecurityGame:
    with open(path) as fh:
        try:
            d = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: invalid JSON ({exc})") from None
    return SecurityGame.from_dict(d)


def check_strategy(x, num_resources: float | None = None, tol: float = _FEAS_TOL) -> np.ndarray:
    """Validate a coverage vector (or a stack of them) and return it as floats.

    Every entry must lie in ``[0, 1]`` and, when ``num_resources`` is given,
    each vector must sum to at most ``num_resources``.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim not in (1, 2) or x.shape[-1] < 2:
        raise ValidationError(f"bad strategy shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValidationError("strategy has non-finite entries")
    if np.any(x < -tol) or np.any(x > 1 + tol):
        raise ValidationError("coverage probabilities must lie in [0, 1]")
    if num_resources is not None and np.any(x.sum(axis=-1) > num_resources + tol):
        raise ValidationError(f"coverage exceeds {num_resources} resources")
    return x


def check_distribution(q, tol: float = _SUM_TOL) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    if np.any(q < 0) or np.any(np.abs(q.sum(axis=-1) - 1.0) > tol):
        raise ValidationError("not a probability vector")
    return q


def softmax_from_exponents(h) -> np.ndarray:
    """Attack distribution from ``T - 1`` exponents, last target pinned to 0.

    ``q_i = exp(h_i) / (1 + sum_j exp(h_j))`` for ``i < T - 1`` and
    ``q_{T-1} = 1 / (1 + sum_j exp(h_j))``. Works on a single exponent
    vector or on a stack of shape ``(n, T - 1)``.
    """
    h = np.asarray(h, dtype=float)
    if h.ndim == 0 or not np.all(np.isfinite(h)):
        raise ValidationError("exponents must be a finite vector")
    full = np.concatenate([h, np.zeros(h.shape[:-1] + (1,))], axis=-1)
    full -= full.max(axis=-1, keepdims=True)
    e = np.exp(full)
    return e / e.sum(axis=-1, keepdims=True)


def log_softmax_from_exponents(h) -> np.ndarray:
    h = np.asarray(h, dtype=float)
    full = np.concatenate([h, np.zeros(h.shape[:-1] + (1,))], axis=-1)
    mx = full.max(axis=-1, keepdims=True)
    lse = mx + np.log(np.exp(full - mx).sum(axis=-1, keepdims=True))
    return full - lse


def defender_utility(game: SecurityGame, x, q) -> float:
    """Expected defender utility ``x^T U q``."""
    x = np.asarray(x, dtype=float)
    q = np.asarray(q, dtype=float)
    T = game.num_targets
    if x.shape != (T,) or q.shape != (T,):
        raise ValidationError(f"expected length-{T} vectors, got {x.shape} and {q.shape}")
    return float(x @ game.payoff @ q)


@dataclass(frozen=True)
class AttackRecord:
    strategy: np.ndarray
    target: int


@dataclass(frozen=True, eq=False)
class AttackDataset:
    """Observed attacks: one row of ``strategies`` per attacked ``targets`` entry.

    The aggregated view (``unique_strategies``, ``counts``) merges records
    with identical coverage vectors; ``counts[j, i]`` is the number of
    attacks on target ``i`` while strategy ``j`` was deployed.
    """

    strategies: np.ndarray
    targets: np.ndarray
    num_targets: int
    unique_strategies: np.ndarray = field(init=False, repr=False)
    counts: np.ndarray = field(init=False, repr=False)
    inverse: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        T = int(self.num_targets)
        X = np.array(self.strategies, dtype=float).reshape(-1, T) if np.size(self.strategies) \
            else np.zeros((0, T))
        y = np.array(self.targets, dtype=np.int64).reshape(-1)
        if X.shape[0] != y.shape[0]:
            raise ValidationError("strategies and targets differ in length")
        if y.size and (y.min() < 0 or y.max() >= T):
            raise ValidationError(f"target index out of range [0, {T - 1}]")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "strategies", X)
        object.__setattr__(self, "targets", y)
        if y.size:
            uniq, inv = np.unique(X, axis=0, return_inverse=True)
            inv = inv.reshape(-1)
        else:
            uniq, inv = np.zeros((0, T)), np.zeros(0, dtype=np.int64)
        counts = np.zeros((uniq.shape[0], T))
        np.add.at(counts, (inv, y), 1.0)
        for a in (uniq, counts, inv):
            a.setflags(write=False)
        object.__setattr__(self, "unique_strategies", uniq)
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "inverse", inv)

    def __len__(self) -> int:
        return int(self.targets.shape[0])

    @property
    def num_unique(self) -> int:
        return int(self.unique_strategies.shape[0])

    @property
    def records(self) -> list[AttackRecord]:
        return [AttackRecord(x, int(t)) for x, t in zip(self.strategies, self.targets)]

    def subset(self, mask) -> "AttackDataset":
        mask = np.asarray(mask)
        return AttackDataset(self.strategies[mask], self.targets[mask], self.num_targets)

    def by_strategy(self, strategy_ids) -> "AttackDataset":
        """Records whose aggregated-strategy index is in ``strategy_ids``."""
        return self.subset(np.isin(self.inverse, np.asarray(strategy_ids)))


def dedupe_dataset(records, num_targets: int | None = None) -> AttackDataset:
    """Build an :class:`AttackDataset` from ``AttackRecord`` items or ``(x, target)`` pairs."""
    records = list(records)
    if not records:
        if num_targets is None:
            raise ValidationError("num_targets is required for an empty record list")
        return AttackDataset(np.zeros((0, num_targets)), np.zeros(0, dtype=int), num_targets)
    xs, ys = [], []
    for r in records:
        x, t = (r.strategy, r.target) if isinstance(r, AttackRecord) else r
        xs.append(np.asarray(x, dtype=float))
        ys.append(int(t))
    T = xs[0].shape[0]
    if any(x.shape != (T,) for x in xs) or (num_targets is not None and T != num_targets):
        raise ValidationError("records have inconsistent dimensions")
    return AttackDataset(np.stack(xs), np.asarray(ys), T)


def read_dataset_csv(path) -> AttackDataset:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[-1] != "target":
            raise ValidationError(f"{path}: header must end with 'target'")
        T = len(header) - 1
        xs, ys = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != T + 1:
                raise ValidationError(f"{path}:{lineno}: expected {T + 1} fields")
            try:
                xs.append([float(v) for v in row[:T]])
                ys.append(int(row[T]))
            except ValueError as exc:
                raise ValidationError(f"{path}:{lineno}: {exc}") from None
    return AttackDataset(np.array(xs).reshape(-1, T), np.array(ys, dtype=int), T)


def dataset_to_csv(dataset: AttackDataset) -> str:
    """CSV text with header ``x_0,...,x_{T-1},target`` and one row per record."""
    T = dataset.num_targets
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"x_{i}" for i in range(T)] + ["target"])
    for x, t in zip(dataset.strategies, dataset.targets):
        w.writerow([repr(float(v)) for v in x] + [int(t)])
    return buf.getvalue()


def write_dataset_csv(dataset: AttackDataset, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(dataset_to_csv(dataset))


def as_predictor(model, game: SecurityGame | None = None):
    """Return a callable mapping coverage vectors to attack distributions."""
    if getattr(model, "needs_game", False):
        if game is None:
            raise ValidationError(f"{type(model).__name__} needs a game with rewards/penalties")
        return lambda x: model.predict(x, game)
    if callable(getattr(model, "predict", None)):
        return model.predict
    if callable(model):
        return model
    raise TypeError(f"cannot predict with {model!r}")


def l1_distance_matrix(A, B) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    return np.abs(A[:, None, :] - B[None, :, :]).sum(axis=-1)


def uniform_strategy(game: SecurityGame) -> np.ndarray:
    return np.full(game.num_targets, game.num_resources / game.num_targets)

