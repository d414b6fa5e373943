"""Evolve a small bump under the linear wave equation and compare the
numerical field against the closed-form reference solution.

The data is a smooth displacement bump supported in the unit ball. With
unit wave speed the 3-D radial solution is explicit, so this is the
sharpest end-to-end accuracy check the solver has: second-order agreement
at every node, strong Huygens behaviour (the field vanishes off the light
shell |t - r| <= 1), and energy conservation.
"""

import numpy as np

from qwave import (
    FieldDerivatives,
    coefficient_model,
    dalembert_reference,
    energy,
    make_bump,
    run,
)
from qwave.evolve import u_from_v

model = coefficient_model("constant")
f, g = make_bump(0.1, "displacement", 16 / 2048, 2048)
history = run(f, g, model, T=10.0, cfl=0.9, sample_dt=0.5, r_max=16.0)
print(f"grid: h = {history.h:.5f}, dt = {history.dt:.5f}, "
      f"{history.n_steps} steps, {len(history.snapshots)} snapshots")

print("\n t     sup|u|      sup node error vs reference")
for t_probe in (2.0, 5.0, 10.0):
    snap = history.snapshot_near(t_probe)
    u = u_from_v(snap.v, history.h)
    phi, _ = dalembert_reference(f, snap.t, np.arange(u.size) * history.h)
    print(f"{snap.t:5.1f}  {np.abs(u).max():.3e}   {np.abs(u - phi).max():.3e}")

snap = history.snapshot_near(5.0)
u = u_from_v(snap.v, history.h)
r = np.arange(u.size) * history.h
off_shell = np.abs(snap.t - r) > 1.1
print(f"\nHuygens check at t = 5: sup off the light shell = "
      f"{np.abs(u[off_shell]).max():.2e}")

e1 = [energy(FieldDerivatives.from_snapshot(s, history.h, history.dt), 1, model)
      for s in history.snapshots]
e1 = np.array(e1)
print(f"energy drift over T = 10: {np.abs(e1 - e1[0]).max() / e1[0]:.2e} relative")
