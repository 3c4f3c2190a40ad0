"""The Stein solution f_z and its bounds.

f_z solves f' - g f = 1{x <= z} - F(z). Its size, slope and the product
g f are what control every error term downstream.
"""

import numpy as np

from steinpairs import SteinSolution, standard_normal, stein_bound_fz
from steinpairs.limitdist import GFunction, normalize

grid = np.linspace(-8, 8, 3201)
for label, dist in (("normal", standard_normal()), ("x^3/3", normalize(GFunction.power(3, 1 / 3)))):
    print(f"\n{label}")
    for z in (-2.0, 0.0, 1.5, 3.0):
        sol = SteinSolution(dist, z)
        margins = sol.property_margins(grid)
        fmax = float(np.max(sol.f(grid)))
        print(f"  z={z:+.1f}  max f = {fmax:.4f} <= {float(stein_bound_fz(dist, z)):.4f}  "
              + " ".join(f"{k}={v:+.2e}" for k, v in margins.items()))

# the derivative jumps by exactly one at x = z
dist = standard_normal()
sol = SteinSolution(dist, 0.7)
print("\njump in f' at z:", float(sol.fprime(0.7) - sol.fprime(0.7 + 1e-9)))
