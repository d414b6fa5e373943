"""Lipschitz stability of the flow via the homotopy family.

Two nearby data pairs are joined by an affine family; running the
endpoints (and the midpoint) measures how the solution gap grows relative
to the data distance kappa. For small data the gap ratio settles near
sqrt(2): after the waves separate from the origin the difference field is
purely outgoing and its two norm components equipartition.
"""

import numpy as np

from qwave import coefficient_model, make_bump, stability_check

model = coefficient_model("one_plus_u")
h, n = 16 / 1024, 1024
base = make_bump(0.01, "displacement", h, n)
pert = make_bump(0.0105, "displacement", h, n)

result = stability_check(base, pert, model, T=10.0, sample_dt=0.25, r_max=16.0)
print(f"data distance kappa = {result.kappa:.3e}")
print(f"sup_t gap(t)/kappa  = {result.sup_ratio:.4f}")

print("\ngap history (every 2 time units):")
for t, gap in zip(result.gap_times[::8], result.gaps[::8]):
    print(f"  t = {t:5.2f}: gap = {gap:.4e}  ratio = {gap / result.kappa:.4f}")

print("\nper-member diagnostics of the homotopy sweep:")
for row in result.lambda_table:
    print(f"  lambda = {row['lambda']:.1f}: sup|u| = {row['sup_u']:.4e}, "
          f"E1(T)/E1(0) = {row['E1_final_over_initial']:.6f}")

half = make_bump(0.01025, "displacement", h, n)
res_half = stability_check(base, half, model, T=10.0, sample_dt=0.25, r_max=16.0)
print(f"\nhalving the perturbation: ratio {res_half.sup_ratio:.4f} "
      f"(Lipschitz behaviour: the ratio barely moves)")
