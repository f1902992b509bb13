"""
Fitting a quadratic model to sampled gradients
==============================================

Gradients are sampled around a point and a quadratic is fitted to them by
least squares. On a quadratic objective the fit is exact, so one Newton step
from the fitted model lands on the minimizer.
"""

import numpy as np

from nlqn import assemble, direction, fit
from nlqn.objectives import Objective

rng = np.random.default_rng(0)

# A random convex quadratic f(x) = x^T H x / 2 + c^T x in five dimensions.
n = 5
m = rng.standard_normal((n, n))
H = m @ m.T + np.eye(n)
c = rng.standard_normal(n)
f = Objective("quad", n, lambda x: 0.5 * x @ H @ x + c @ x, lambda x: H @ x + c)
xstar = np.linalg.solve(H, -c)

# Ten gradients at x_t + sigma * z_j with standard normal z_j.
x_t = rng.uniform(-5, 5, n)
batch = assemble(x_t, sigma=2.0, z=rng.standard_normal((n, 10)), grad_eval=f.gradient)
model = fit(batch)

print("Hessian relative error:", np.linalg.norm(model.hessian - H) / np.linalg.norm(H))
print("fit residual of the normal equations:", model.fit_residual)

# The model's Newton direction points exactly at the minimizer.
dx = direction(model).newton
print("|x_t + dx - x*| =", np.linalg.norm(x_t + dx - xstar))

# With a wide sampling kernel on a rugged function the same fit averages the
# ruggedness away and keeps the global curvature.
from nlqn.objectives import rcigar

g = rcigar(n, with_offset=False)
for sigma in (1e-2, 1.0, 1e3):
    b = assemble(x_t, sigma, rng.standard_normal((n, 200)), g.gradient)
    est = np.diag(fit(b).hessian)
    print(f"sigma={sigma:g}: diagonal of fitted Hessian {np.round(est, 1)}")
print("quadratic part:", 2 * g.meta["diag"])
