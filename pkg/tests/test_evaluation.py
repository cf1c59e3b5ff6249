import csv
import io
import math

import numpy as np
import pytest

from conftest import make_dataset
from ssgpac.evaluation import (alpha_metric, coarse_grained_alpha, evaluate, inverse_sqrt_fit,
                               percentile_alpha, plot_csv, sample_size_sweep, split_strategies)
from ssgpac.game import AttackDataset, ValidationError
from ssgpac.parametric import GeneralizedSuqrModel, gsuqr_fit
from ssgpac.simulate import GroundTruth, random_game, simulate_dataset


class Fixed:
    needs_game = False

    def __init__(self, q):
        self.q = np.asarray(q, dtype=float)

    def predict(self, x):
        x = np.asarray(x)
        return np.broadcast_to(self.q, x.shape).copy()


def test_alpha_against_truth_is_zero_for_truth():
    ds, _, truth = make_dataset(4, 1, 10, 5)
    assert alpha_metric(truth, ds, reference=truth) == 0.0


def test_alpha_hand_computed():
    ds = AttackDataset([[0.5, 0.5]] * 4, [0, 0, 0, 1], 2)
    # empirical reference with add-one smoothing: (4/6, 2/6)
    got = alpha_metric(Fixed([0.5, 0.5]), ds)
    want = (3 * math.log((4 / 6) / 0.5) + math.log((2 / 6) / 0.5)) / 4
    assert math.isclose(got, want, rel_tol=1e-13)
    with pytest.raises(ValidationError):
        alpha_metric(Fixed([0.5, 0.5]), ds, reference="smoothed")


def test_alpha_is_infinite_for_zero_probability():
    ds = AttackDataset([[0.5, 0.5]], [1], 2)
    assert alpha_metric(Fixed([1.0, 0.0]), ds) == math.inf


def test_coarse_alpha_hand_computed():
    ds = AttackDataset([[0.5, 0.5]] * 2, [0, 0], 2)
    q = 0.25
    p0 = 1 - (1 - 0.75) ** 2
    p1 = 1 - (1 - q) ** 2
    want = (-math.log(p0) - math.log(1 - p1)) / 2
    assert math.isclose(coarse_grained_alpha(Fixed([0.75, 0.25]), ds), want, rel_tol=1e-13)
    # certain but wrong predictions are capped by the threshold
    v = coarse_grained_alpha(Fixed([0.0, 1.0]), ds, threshold=1e-6)
    assert math.isclose(v, -math.log(1e-6), rel_tol=1e-9)
    with pytest.raises(ValidationError):
        coarse_grained_alpha(Fixed([0.5, 0.5]), ds, threshold=0)


def test_percentile_alpha_order_statistic():
    v = np.arange(1.0, 101.0)
    assert percentile_alpha(v, 0.05) == 95.0
    assert percentile_alpha(v, 0.0) == 100.0
    assert percentile_alpha([3.0, 1.0, 2.0], 0.5) == 2.0
    with pytest.raises(ValidationError):
        percentile_alpha(v, 1.0)


def test_split_partitions_strategies(rng):
    tr, te = split_strategies(10, 0.7, rng)
    assert len(tr) == 7 and len(te) == 3
    assert set(tr) | set(te) == set(range(10)) and not set(tr) & set(te)
    tr, te = split_strategies(2, 0.99, rng)
    assert len(tr) == 1 and len(te) == 1
    with pytest.raises(ValidationError):
        split_strategies(1, 0.5, rng)


def test_evaluate_reports_and_determinism():
    ds, _, truth = make_dataset(4, 1, 20, 10, seed=1)
    fitters = {"gsuqr": gsuqr_fit, "uniform": lambda d: Fixed(np.full(4, 0.25))}
    a = evaluate(fitters, ds, num_splits=6, deltas=(0.1, 0.5), seed=3, reference=truth)
    b = evaluate(fitters, ds, num_splits=6, deltas=(0.1, 0.5), seed=3, reference=truth, jobs=3)
    for name in fitters:
        assert a[name].split_alphas == b[name].split_alphas
        assert a[name].alphas[0.1] >= a[name].alphas[0.5]
    assert a["gsuqr"].alphas[0.5] < a["uniform"].alphas[0.5]
    d = a["gsuqr"].to_dict()
    assert set(d["alphas"]) == {"0.1", "0.5"}


def test_evaluate_no_strategy_leaks(monkeypatch):
    ds, _, _ = make_dataset(3, 1, 12, 4, seed=2)
    seen = []

    def fit(train):
        seen.append({tuple(r) for r in train.unique_strategies})
        return gsuqr_fit(train)

    import ssgpac.evaluation as ev
    orig = ev._score

    def score(model, test, *args):
        assert not seen[-1] & {tuple(r) for r in test.unique_strategies}
        return orig(model, test, *args)

    monkeypatch.setattr(ev, "_score", score)
    evaluate({"g": fit}, ds, num_splits=5)


def test_evaluate_with_simulated_data():
    g = random_game(3, 1, 0)
    tr = GroundTruth.from_game(g)
    make = lambda s: simulate_dataset(tr, 3, 1, 10, 5, seed=s)
    rep = evaluate({"g": gsuqr_fit}, make, num_splits=4, reference=tr, mode="coarse")
    assert rep["g"].mode == "coarse" and len(rep["g"].split_alphas) == 4
    with pytest.raises(ValidationError):
        evaluate({"g": gsuqr_fit}, make, num_splits=1, mode="medium")


def test_inverse_sqrt_fit_exact():
    m = np.array([100, 400, 1600, 6400])
    a, b, r2 = inverse_sqrt_fit(m, 0.01 + 2 / np.sqrt(m))
    assert math.isclose(a, 0.01, abs_tol=1e-12) and math.isclose(b, 2, rel_tol=1e-10)
    assert math.isclose(r2, 1.0)


def test_sample_size_sweep_shapes():
    g = random_game(3, 1, 0)
    tr = GroundTruth.from_game(g)
    make = lambda m, s: simulate_dataset(tr, 3, 1, m, 1, seed=[s, m])
    rep = sample_size_sweep(gsuqr_fit, make, [50, 200], [0, 1, 2], tr)
    assert len(rep.median_alpha) == 2 and len(rep.per_seed[0]) == 3
    assert rep.median_alpha[1] < rep.median_alpha[0]


def test_plot_csv():
    ds, _, truth = make_dataset(3, 1, 10, 4)
    rep = evaluate({"g": gsuqr_fit}, ds, num_splits=3, deltas=(0.25,), reference=truth)
    rows = list(csv.reader(io.StringIO(plot_csv(rep.values()))))
    assert rows[0] == ["m", "alpha", "delta", "model"]
    assert rows[1][0] == str(len(ds)) and rows[1][2] == "0.25" and rows[1][3] == "g"
    assert float(rows[1][1]) == rep["g"].alphas[0.25]
