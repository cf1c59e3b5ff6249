import numpy as np
import pytest

from ssgpac.complexity import feasible_volume
from ssgpac.game import SecurityGame, ValidationError
from ssgpac.simulate import (GroundTruth, PAPER_SUQR_WEIGHTS, random_game, sample_strategies,
                             simulate_attacks, simulate_dataset)


@pytest.mark.parametrize("sampler", ["uniform-rejection", "dirichlet-scaled", "anchored-grid"])
def test_samplers_are_feasible(sampler):
    X = sample_strategies(5, 2, 500, sampler, seed=1)
    assert X.shape == (500, 5)
    assert np.all(X >= 0) and np.all(X <= 1) and np.all(X.sum(1) <= 2 + 1e-12)


def test_uniform_sampler_mean():
    # uniform on {x in [0,1]^2 : x0 + x1 <= 1}: mean (1/3, 1/3)
    X = sample_strategies(2, 1, 200_000, seed=0)
    assert np.allclose(X.mean(0), [1 / 3, 1 / 3], atol=3e-3)


def test_uniform_sampler_slab_frequencies():
    # mass of {sum <= 1} inside {sum <= 2} for T = 3 is F_3(1) / F_3(2) = 1/5
    X = sample_strategies(3, 2, 200_000, seed=3)
    ratio = float(feasible_volume(3, 1) / feasible_volume(3, 2))
    assert abs(np.mean(X.sum(1) <= 1) - ratio) < 5e-3


def test_dirichlet_center():
    c = np.array([0.1, 0.2, 0.3])
    X = sample_strategies(3, 1, 50_000, "dirichlet-scaled", seed=2, center=c, concentration=500)
    assert np.allclose(X.mean(0), c, atol=5e-3)


def test_grid_sampler_repeats():
    X = sample_strategies(3, 1, 300, "anchored-grid", seed=0, grid_steps=2)
    assert len(np.unique(X, axis=0)) < 20
    assert np.allclose(X * 2, np.round(X * 2))


def test_sampler_errors():
    with pytest.raises(ValueError):
        sample_strategies(3, 1, 5, "bogus")
    with pytest.raises(ValueError):
        sample_strategies(3, 1, -1)
    assert sample_strategies(3, 1, 0).shape == (0, 3)


def test_truth_matches_standard_suqr():
    g = random_game(4, 1, 7)
    tr = GroundTruth.from_game(g)
    x = np.array([0.1, 0.2, 0.3, 0.4])
    w1, w2, w3 = PAPER_SUQR_WEIGHTS
    u = np.exp(w1 * x + w2 * g.rewards + w3 * g.penalties)
    assert np.allclose(tr.predict(x), u / u.sum(), rtol=1e-13)
    quad = GroundTruth.from_game(g, "suqr-quadratic")
    u = np.exp(w1 * x ** 2 + w2 * g.rewards + w3 * g.penalties)
    assert np.allclose(quad.predict(x), u / u.sum(), rtol=1e-13)
    with pytest.raises(ValidationError):
        GroundTruth.from_game(g, "linear")
    with pytest.raises(ValidationError):
        GroundTruth.from_game(SecurityGame(2, 1, np.eye(2)))


def test_random_game_ranges():
    g = random_game(6, 2, 0)
    assert np.all((g.rewards >= 1) & (g.rewards <= 10))
    assert np.all((g.penalties >= -10) & (g.penalties <= -1))
    assert np.array_equal(g.payoff, np.diag(g.rewards))
    assert np.array_equal(random_game(6, 2, 0).rewards, g.rewards)


def test_attack_frequencies_match_truth():
    g = random_game(3, 1, 1)
    tr = GroundTruth.from_game(g)
    x = np.array([[0.2, 0.3, 0.1]])
    ds = simulate_attacks(tr, x, 200_000, seed=4)
    freq = np.bincount(ds.targets, minlength=3) / len(ds)
    assert np.allclose(freq, tr.predict(x[0]), atol=4e-3)


def test_simulation_is_deterministic():
    tr = GroundTruth.from_game(random_game(4, 1, 0))
    a = simulate_dataset(tr, 4, 1, 20, 5, seed=9)
    b = simulate_dataset(tr, 4, 1, 20, 5, seed=9)
    assert np.array_equal(a.strategies, b.strategies) and np.array_equal(a.targets, b.targets)
    assert len(a) == 100 and a.num_unique == 20
    assert len(simulate_attacks(tr, np.zeros((0, 4)), 3)) == 0
