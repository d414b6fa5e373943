"""The two linear estimate engines: the interval maximal operator and the
end-point space-time estimate for the free wave equation.

The discrete maximal operator is the exact brute force over grid-aligned
intervals; the space-time check uses the closed-form linear solution for
a family of rescaled bumps, whose ratios must stay comparable if the
estimate really carries one uniform constant.
"""

import numpy as np

from qwave import MaximalInput, linear_strichartz_check, maximal_function
from qwave.model import RadialProfile

h = 1 / 256
lam = np.arange(0, int(4 / h) + 1) * h
vals = np.where(lam <= 1.0, 1.0, 0.0)
out = maximal_function(MaximalInput(lam, vals))
print("maximal function of the unit-interval indicator:")
for x in (0.5, 1.0, 2.0, 3.0):
    i = int(round(x / h))
    print(f"  (Mf)({x}) = {out.values[i]:.4f}   (exact envelope ~ min(1, 1/x))")

rng = np.random.default_rng(1)
ratios = []
for _ in range(200):
    v = rng.normal(size=256)
    m = maximal_function(MaximalInput(np.arange(256) * 0.1, v)).values
    ratios.append(np.sqrt(np.sum(m**2) / np.sum(v**2)))
print(f"\nstrong (2,2) behaviour over 200 random inputs: "
      f"|Mf|_2 / |f|_2 in [{min(ratios):.3f}, {max(ratios):.3f}]")

print("\nend-point space-time ratios for rescaled bumps (uniform constant):")
n = 3072
r = np.arange(n + 1) * (1 / 256)
family = [RadialProfile(1 / 256, np.where(r <= s, (1 - (r / s) ** 2) ** 4, 0.0))
          for s in (0.2, 0.4, 0.6, 0.8, 1.0)]
for row in linear_strichartz_check(family, T=10.0, delta=0.75):
    print(f"  support {row.scale:.1f}: ratio = {row.ratio:.4f}, "
          f"weighted in-cone = {row.weighted_ratio:.4f}")
