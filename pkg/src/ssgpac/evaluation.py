"""Prediction-error metric and train/test evaluation.

The error of a fitted model on test attacks is

    alpha = (1/m_test) * sum_records [ ln q_ref(target | x) - ln q_model(target | x) ]

where the reference is either a known ground truth or the smoothed
empirical attack frequencies at each test strategy. Over many random
splits, the value reported for a confidence level ``delta`` is the
``ceil((1 - delta) * splits)``-th smallest alpha.
"""
from __future__ import annotations

import csv
import io
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .game import AttackDataset, SecurityGame, ValidationError, as_predictor

log = logging.getLogger(__name__)

DEFAULT_DELTAS = (0.01, 0.05, 0.1, 0.25, 0.5)


def _reference_probs(reference, test: AttackDataset, predict_game=None) -> np.ndarray:
    X, n = test.unique_strategies, test.counts
    if isinstance(reference, str):
        if reference != "empirical":
            raise ValidationError(f"unknown reference {reference!r}")
        totals = n.sum(axis=1, keepdims=True)
        if np.any(totals == 0):
            log.warning("dropping test strategies without attacks")
        return (n + 1.0) / (totals + n.shape[1])
    return as_predictor(reference, predict_game)(X)


def alpha_metric(model, test: AttackDataset, reference="empirical",
                 game: SecurityGame | None = None) -> float:
    """Fine-grained error: mean log-likelihood gap between reference and model."""
    if len(test) == 0:
        raise ValidationError("test dataset is empty")
    X, n = test.unique_strategies, test.counts
    q_model = as_predictor(model, game)(X)
    q_ref = _reference_probs(reference, test, game)
    with np.errstate(divide="ignore"):
        gap = np.log(q_ref) - np.log(q_model)
    return float(np.sum(np.where(n > 0, n * gap, 0.0)) / n.sum())


def coarse_grained_alpha(model, test: AttackDataset, threshold: float = 1e-9,
                         game: SecurityGame | None = None) -> float:
    """Coarse error: will each target be attacked at least once under each test strategy?

    The model's probability that target ``i`` is hit at least once during
    the ``n_j`` attacks against strategy ``j`` is ``1 - (1 - q_i)^n_j``.
    It is clipped to ``[threshold, 1 - threshold]`` and scored by Bernoulli
    log-loss against the observed labels, averaged over all
    (strategy, target) pairs. A perfect predictor scores 0.
    """
    if not 0 < threshold < 1:
        raise ValidationError("threshold must lie in (0, 1)")
    if len(test) == 0:
        raise ValidationError("test dataset is empty")
    X, n = test.unique_strategies, test.counts
    q = as_predictor(model, game)(X)
    totals = n.sum(axis=1, keepdims=True)
    with np.errstate(divide="ignore"):
        p_hit = -np.expm1(totals * np.log1p(-np.minimum(q, 1.0)))
    p_hit = np.clip(p_hit, threshold, 1 - threshold)
    labels = n > 0
    loss = -np.where(labels, np.log(p_hit), np.log1p(-p_hit))
    return float(loss.mean())


def percentile_alpha(values, delta: float) -> float:
    """The ``ceil((1 - delta) * n)``-th order statistic of ``values``."""
    if not 0 <= delta < 1:
        raise ValidationError("delta must lie in [0, 1)")
    v = np.sort(np.asarray(values, dtype=float))
    rank = max(1, math.ceil((1 - delta) * v.size - 1e-9))
    return float(v[rank - 1])


@dataclass
class EvalReport:
    model: str
    mode: str
    num_splits: int
    deltas: list
    alphas: dict
    split_alphas: list = field(repr=False)
    num_records: int = 0
    fit_r2: float | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["alphas"] = {repr(float(k)): v for k, v in self.alphas.items()}
        return d


def split_strategies(num_unique: int, train_fraction: float, rng) -> tuple[np.ndarray, np.ndarray]:
    if num_unique < 2:
        raise ValidationError("need at least two unique strategies to split")
    n_train = min(max(1, round(train_fraction * num_unique)), num_unique - 1)
    order = rng.permutation(num_unique)
    return np.sort(order[:n_train]), np.sort(order[n_train:])


def _score(model, test, reference, mode, game, threshold):
    if mode == "fine":
        return alpha_metric(model, test, reference, game)
    if mode == "coarse":
        return coarse_grained_alpha(model, test, threshold, game)
    raise ValidationError(f"unknown mode {mode!r}")


def evaluate(fitters: dict, data, num_splits: int = 100, deltas=DEFAULT_DELTAS,
             train_fraction: float = 0.7, seed: int = 0, reference="empirical",
             mode: str = "fine", game: SecurityGame | None = None,
             threshold: float = 1e-9, jobs: int = 1) -> dict[str, EvalReport]:
    """Fit every model on random strategy-partitioned splits and report alpha percentiles.

    ``fitters`` maps a name to ``fit(train_dataset) -> model``. ``data`` is
    an :class:`AttackDataset` or a callable ``seed -> AttackDataset`` that
    simulates fresh data for each split. Splits are independent and use
    seeds spawned from ``seed``, so results do not depend on ``jobs``.
    """
    if num_splits < 1:
        raise ValidationError("num_splits must be at least 1")
    if not 0 < train_fraction < 1:
        raise ValidationError("train_fraction must lie in (0, 1)")
    deltas = [float(d) for d in deltas]
    children = np.random.SeedSequence(seed).spawn(num_splits)

    def one_split(ss):
        rng = np.random.default_rng(ss)
        ds = data(int(rng.integers(2**63))) if callable(data) else data
        train_ids, test_ids = split_strategies(ds.num_unique, train_fraction, rng)
        train, test = ds.by_strategy(train_ids), ds.by_strategy(test_ids)
        return {name: _score(fit(train), test, reference, mode, game, threshold)
                for name, fit in fitters.items()}, len(ds)

    if jobs > 1:
        with ThreadPoolExecutor(jobs) as pool:
            results = list(pool.map(one_split, children))
    else:
        results = [one_split(c) for c in children]

    reports = {}
    for name in fitters:
        vals = [r[0][name] for r in results]
        reports[name] = EvalReport(
            model=name, mode=mode, num_splits=num_splits, deltas=deltas,
            alphas={d: percentile_alpha(vals, d) for d in deltas},
            split_alphas=vals, num_records=results[0][1])
    return reports


def inverse_sqrt_fit(sizes, alphas) -> tuple[float, float, float]:
    """Least-squares fit ``alpha = a + b / sqrt(m)``; returns ``(a, b, r2)``."""
    u = 1.0 / np.sqrt(np.asarray(sizes, dtype=float))
    y = np.asarray(alphas, dtype=float)
    A = np.column_stack([np.ones_like(u), u])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(resid @ resid) / ss_tot if ss_tot > 0 else 1.0
    return float(coef[0]), float(coef[1]), r2


@dataclass
class SweepReport:
    sizes: list
    median_alpha: list
    per_seed: list = field(repr=False)
    intercept: float = math.nan
    slope: float = math.nan
    r2: float = math.nan

    def to_dict(self) -> dict:
        return asdict(self)


def sample_size_sweep(fit, make_data, sizes, seeds, reference, train_fraction: float = 0.7,
                      mode: str = "fine", game: SecurityGame | None = None) -> SweepReport:
    """Median alpha over ``seeds`` at each sample size, with the ``1/sqrt(m)`` fit.

    ``make_data(m, seed)`` returns a dataset with ``m`` attack records.
    """
    per_seed = []
    for m in sizes:
        row = []
        for s in seeds:
            ds = make_data(m, s)
            rng = np.random.default_rng([int(s), int(m)])
            tr, te = split_strategies(ds.num_unique, train_fraction, rng)
            row.append(_score(fit(ds.by_strategy(tr)), ds.by_strategy(te),
                              reference, mode, game, 1e-9))
        per_seed.append(row)
    med = [float(np.median(r)) for r in per_seed]
    a, b, r2 = inverse_sqrt_fit(sizes, med)
    return SweepReport(list(sizes), med, per_seed, a, b, r2)


def plot_csv(reports) -> str:
    """Plot-ready CSV text with columns ``m,alpha,delta,model``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["m", "alpha", "delta", "model"])
    for rep in reports:
        for d, a in rep.alphas.items():
            w.writerow([rep.num_records, repr(float(a)), repr(float(d)), rep.model])
    return buf.getvalue()
