"""
Learning how an adversary responds to coverage
==============================================

Simulate attacks from a known quantal-response adversary, then fit the
three response models and compare their predictions with the truth.
"""

import numpy as np

from ssgpac import (GroundTruth, gsuqr_fit, npl_fit, random_game, simulate_dataset,
                    ssuqr_fit)

# A random 6-target game with 2 defender resources. Rewards and penalties
# drive the standard model; the payoff matrix drives planning later on.
game = random_game(6, 2, seed=0)
truth = GroundTruth.from_game(game, "suqr-standard")

# 80 coverage vectors drawn uniformly from the feasible polytope, 25 attacks
# against each.
data = simulate_dataset(truth, 6, 2, num_strategies=80, attacks_per_strategy=25, seed=1)
print(f"{len(data)} attacks against {data.num_unique} distinct coverage vectors")

###############################################################################
# Fit the models. The generalized model has one slope and one intercept
# per target; the standard one reuses rewards and penalties as features;
# the non-parametric one only assumes Lipschitz exponents.
models = {
    "standard": (ssuqr_fit(data, game), True),
    "generalized": (gsuqr_fit(data, M=40.0), False),
    "lipschitz": (npl_fit(data, khat=5.0), False),
}
print("standard weights:", np.round(models["standard"][0].weights, 3))

###############################################################################
# Compare predicted attack distributions at a fresh coverage vector.
x = np.array([0.5, 0.1, 0.4, 0.2, 0.6, 0.2])
print("truth      ", np.round(truth.predict(x), 3))
for name, (m, needs_game) in models.items():
    q = m.predict(x, game) if needs_game else m.predict(x)
    print(f"{name:<11}", np.round(q, 3), " l1 error", round(float(np.abs(q - truth.predict(x)).sum()), 4))

###############################################################################
# The Lipschitz model reproduces its fitted anchor values exactly and
# extends them with the smallest slope that agrees with them.
npl = models["lipschitz"][0]
print("per-target slopes:", np.round(npl.lipschitz, 3), "(cap", npl.khat, ")")
