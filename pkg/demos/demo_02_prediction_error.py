"""
Measuring prediction error over train/test splits
=================================================

The error of a learned model is the mean log-likelihood gap to a reference
predictor on held-out coverage vectors. Splits partition coverage vectors,
never individual attacks, and the error is reported at several percentiles
across splits.
"""

import numpy as np

from ssgpac import (GroundTruth, evaluate, gsuqr_fit, npl_fit, random_game, sample_size_sweep,
                    simulate_dataset)
from ssgpac.evaluation import plot_csv

game = random_game(8, 3, seed=0)
truth = GroundTruth.from_game(game, "suqr-standard")
data = simulate_dataset(truth, 8, 3, num_strategies=40, attacks_per_strategy=25, seed=2)

###############################################################################
# Twenty splits, 70% of coverage vectors for training. With the empirical
# reference the error can be negative on a split: smoothed counts are noisy.
reports = evaluate({"generalized": lambda d: gsuqr_fit(d, 40.0), "lipschitz": npl_fit},
                   data, num_splits=20, deltas=(0.1, 0.5), seed=0)
for name, rep in reports.items():
    print(f"{name:<12} alpha@90% = {rep.alphas[0.1]:.4f}   alpha@50% = {rep.alphas[0.5]:.4f}")
print(plot_csv(reports.values()))

###############################################################################
# Against the true adversary the error is a KL divergence and shrinks with
# more data. One attack per coverage vector, 10 seeds per size.
make = lambda m, s: simulate_dataset(truth, 8, 3, m, 1, seed=[s, m])
sweep = sample_size_sweep(lambda d: gsuqr_fit(d, 40.0), make, [100, 400, 1600], range(10), truth)
for m, a in zip(sweep.sizes, sweep.median_alpha):
    print(f"m = {m:5d}   median alpha = {a:.5f}")
print(f"fit alpha = {sweep.intercept:.4f} + {sweep.slope:.3f}/sqrt(m), r2 = {sweep.r2:.3f}")
