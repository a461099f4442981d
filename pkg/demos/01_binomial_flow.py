"""Binomial interpolation on a path segment, computed exactly.

The bridge of the geodesic-restricted walk between the ends of a unit path
carries the binomial law at every intermediate time: position z at time t
has probability C(delta, z) t^z (1-t)^(delta-z).  The bridge fields are
polynomials with rational coefficients, so with rational times the whole
flow comes out in exact arithmetic.
"""

from fractions import Fraction

import graphbridge as gb

n = 6
graph = gb.Graph([str(i) for i in range(n)], [(str(i), str(i + 1)) for i in range(n - 1)])
metric = gb.intrinsic_distance(graph)
kernel, m = gb.build_simple_walk(graph)

x, y = 0, 3
fields = gb.bridge_fields(x, y, graph, metric, kernel)
print(f"geodesic mass from {x} to {y}: {fields.norm}   (rate product / jumps!)")

print("\nexact bridge law (rows t = 0, 1/4, 1/2, 3/4, 1):")
for t in (Fraction(0), Fraction(1, 4), Fraction(1, 2), Fraction(3, 4), Fraction(1)):
    row = gb.bridge_marginal_exact(fields, t)
    print(f"  t={str(t):>4}: " + "  ".join(f"{str(v):>7}" for v in row[: y + 1]))

print("\nbridge jump rates (remaining distance over remaining time):")
for t in (Fraction(1, 4), Fraction(1, 2), Fraction(3, 4)):
    rates = {z: gb.bridge_jump_kernel(fields, t, z) for z in (0, 1, 2)}
    desc = "  ".join(f"{z}->{z+1}: {str(r[z+1]):>5}" for z, r in rates.items())
    print(f"  t={str(t):>4}: {desc}")

print("\nexpected jump intensity is conserved along the bridge:")
for t in (Fraction(0), Fraction(1, 3), Fraction(2, 3)):
    print(f"  t={str(t):>4}: {gb.bridge_mass_rate(fields, t)}")
