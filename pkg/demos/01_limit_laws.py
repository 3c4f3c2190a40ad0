"""Limit laws with density c1 exp(-G).

The normal law has g(x) = x. At the critical temperature the Curie-Weiss
magnetisation of Rademacher spins instead converges to a law with
g(x) = x^3 / 3, whose density exp(-x^4/12) is flatter and has lighter tails.
"""

from steinpairs import BaseLaw, build_cw_limit, check_conditions, classify_type, standard_normal

normal = standard_normal()
rad = BaseLaw.rademacher()
print(f"Rademacher spins are of type k = {classify_type(rad).k}")
quartic = build_cw_limit(rad)
print(f"critical limit: g(x) = {quartic.g.scale:.4f} x^{quartic.g.alpha:g}, c1 = {quartic.c1:.6f}")

print("\n     z     normal sf     quartic sf")
for z in (0.5, 1.0, 2.0, 3.0, 4.0):
    print(f"{z:6.1f}  {float(normal.sf(z)):.6e}  {float(quartic.sf(z)):.6e}")

print(f"\nsecond moments: {normal.second_moment():.6f} vs {quartic.second_moment():.6f}")

# the regularity conditions the bounds rely on, checked on a grid
for name, d in (("normal", normal), ("quartic", quartic)):
    rep = check_conditions(d.g, d)
    flags = " ".join(f"{k}:{'ok' if v['passed'] else 'FAIL'}" for k, v in rep.to_dict().items())
    print(f"{name:8s} {flags}")

# far tails stay finite because everything goes through the ratio (1 - F) / p
print("log sf at z = 25:", float(normal.logsf(25.0)), float(quartic.logsf(25.0)))
