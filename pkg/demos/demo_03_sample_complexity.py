"""
How many attacks are enough?
============================

Worst-case sample counts that guarantee a learned model is within alpha
of the best in its class with probability 1 - delta. Counts for the
Lipschitz class overflow quickly, so every result carries its natural log.
"""

import math

from ssgpac import ComplexityQuery, eulerian_numbers, irwin_hall_cdf
from ssgpac.complexity import SAMPLE_BOUNDS

###############################################################################
# The covering argument needs the volume of the feasible coverage set
# {x in [0,1]^T : sum(x) <= K}. It is an Irwin-Hall CDF, and the slabs
# between consecutive integers have Eulerian-number volumes.
print("F_3(1) =", irwin_hall_cdf(3, 1))
print("Eulerian row T=5:", eulerian_numbers(5), "sum =", sum(eulerian_numbers(5)), "= 5!")
print("volume with T=8, K=3:", float(irwin_hall_cdf(8, 3)))

###############################################################################
# Sample bounds for each class at alpha = 0.1, delta = 0.05.
for T in (3, 5, 8):
    q = ComplexityQuery(alpha=0.1, delta=0.05, T=T, K=1)
    row = []
    for name, fn in SAMPLE_BOUNDS.items():
        r = fn(q)
        row.append(f"{name}: {r.samples:.3g}" if math.isfinite(r.samples)
                   else f"{name}: e^{r.ln_samples:.3g}")
    print(f"T={T}  " + "   ".join(row))

###############################################################################
# Halving alpha roughly quadruples the parametric counts.
for a in (0.2, 0.1, 0.05):
    print(a, f"{SAMPLE_BOUNDS['gsuqr'](ComplexityQuery(a, 0.05, 8)).samples:.4g}")
