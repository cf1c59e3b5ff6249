import numpy as np
import pytest

from ssgpac import random_game, sample_strategies, simulate_attacks, GroundTruth


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_dataset(T=4, K=1, strategies=20, attacks=10, seed=0, kind="suqr-standard"):
    """Small simulated dataset plus its game and ground truth."""
    game = random_game(T, K, seed)
    truth = GroundTruth.from_game(game, kind)
    X = sample_strategies(T, K, strategies, seed=seed + 1)
    return simulate_attacks(truth, X, attacks, seed=seed + 2), game, truth


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
