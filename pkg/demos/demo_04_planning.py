"""
Planning against a learned adversary
====================================

Find the coverage that maximizes the defender's expected utility against
a learned response model, and compute the guaranteed utility loss.
"""

import numpy as np

from ssgpac import (GroundTruth, UtilityBoundInputs, defender_utility, gsuqr_fit, npl_fit,
                    plan_strategy, random_game, simulate_dataset, utility_lower_bound)

game = random_game(5, 2, seed=3)
truth = GroundTruth.from_game(game, "suqr-quadratic")
data = simulate_dataset(truth, 5, 2, num_strategies=60, attacks_per_strategy=30, seed=4)

###############################################################################
# Multi-start projected ascent over the coverage polytope. The utility is
# evaluated against the model used for planning and then against the truth.
x_true, u_true, _ = plan_strategy(game, truth)
print("optimum against the truth:", np.round(x_true, 3), round(u_true, 4))
for name, model in (("generalized", gsuqr_fit(data)), ("lipschitz", npl_fit(data))):
    x, u, diag = plan_strategy(game, model, num_starts=16, seed=0)
    real = defender_utility(game, x, truth.predict(x))
    print(f"{name:<12} x = {np.round(x, 3)}  planned {u:.4f}  realized {real:.4f}")

###############################################################################
# Guaranteed utility given the learning error, Lipschitz constants and the
# radius of the low-density balls around the optima.
inp = UtilityBoundInputs(opt_utility=1.0, eps=0.01, K_p=1.0, khat=1.0, alpha=0.001)
print("utility lower bound:", round(utility_lower_bound(inp), 4))
