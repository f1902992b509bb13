"""
Residual bound and Hessian recovery
===================================

For f = r + sum_j a_j cos(<s_j, x> + psi_j) and Gaussian samples, the mean
squared gradient mismatch of the quadratic part has a closed form. It is
compared with Monte-Carlo and with the upper bound. Then the fitted Hessian is
shown to approach the quadratic part as the sampling width grows.
"""

import numpy as np

from nlqn.experiments import bound_check, consistency_check, random_rastrigin_model

model = random_rastrigin_model(np.random.default_rng(1), n=3, m=5)
print(f"n={model.dim} m={model.m} separation={model.separation:.3f}")
print(f"{'sigma':>6} {'exact':>10} {'mc':>10} {'stderr':>9} {'bound':>10}")
for r in bound_check(model, (0.1, 0.5, 1, 2, 5, 10), samples=200_000):
    print(f"{r.sigma:6g} {r.exact:10.4f} {r.mc:10.4f} {r.mc_stderr:9.4f} {r.bound:10.4f}")

rep = consistency_check(seed=0, seeds=10)
for s, m in rep.medians.items():
    print(f"sigma={s:g}: median relative Hessian error {m:.3g}")
