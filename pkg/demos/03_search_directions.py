"""
How good are the estimated search directions?
=============================================

On the offset-free rcigar in 20 dimensions the global minimizer is the origin,
so the ideal direction from x0 is -x0. The angle to it is recorded for the
Newton direction, for -b, for the mean sampled gradient and for a random
direction. Random directions sit near pi/2 in 20 dimensions.
"""

import numpy as np

from nlqn.experiments import ESTIMATORS, angles_by, exp1_angles

cells = [(1e-2, 1.0), (1.0, 1.0), (1e2, 1e2), (1e3, 1e3)]
recs = exp1_angles(seed=0, trials=50, sigmas=sorted({s for s, _ in cells}), scales=sorted({u for _, u in cells}))

print(f"{'sigma0':>8} {'U':>6} " + " ".join(f"{e:>10}" for e in ESTIMATORS))
for s, u in cells:
    meds = [np.median(angles_by(recs, s, u, e)) for e in ESTIMATORS]
    print(f"{s:8g} {u:6g} " + " ".join(f"{m:10.3f}" for m in meds))

# At large scales the Newton direction is nearly exact. At U = 1 the
# disturbance dominates the gradients and the mean gradient edges out -b.
