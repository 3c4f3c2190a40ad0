"""Sum of squared sample correlations as an independence test.

For p independent rows of length n, W = c_np (sum_{i<j} r_ij^2 - p(p-1)/(2(n-1)))
is approximately standard normal. Replacing a random row by a fresh one gives
an exact linear pair, so the residual term vanishes identically.
"""

from steinpairs import IndepModel, analyze_data, estimate_bound_terms
from steinpairs.mcengine import batch_rng

rng = batch_rng(3)
independent = rng.standard_normal((10, 60))
print("independent rows:", {k: round(v, 4) for k, v in analyze_data(independent).items()})

mixed = independent.copy()
mixed[1] = 0.6 * mixed[0] + 0.8 * mixed[1]  # one correlated pair
print("one correlated pair:", {k: round(v, 4) for k, v in analyze_data(mixed).items()})

for p in (10, 20, 40):
    b = estimate_bound_terms(IndepModel(p, p, inner=100), 1600, seed=5, keys=(p,))
    print(f"p=n={p:3d}  t1={b.t1:.4f}  t2={b.t2:.4f}  t3={b.t3}")
