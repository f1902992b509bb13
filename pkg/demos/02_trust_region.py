"""
Indefinite models and the trust region
======================================

When the fitted curvature is not positive definite the model has no minimizer
and the search direction comes from minimizing it over the unit ball.
"""

import numpy as np

from nlqn import trust_region_min

a = np.array([[1.0, 0.0], [0.0, -2.0]])  # saddle
b = np.array([0.5, 0.3])

x = trust_region_min(a, b, radius=1.0)
print("minimizer on the ball:", x, "norm", np.linalg.norm(x))
print("model value:", x @ a @ x + b @ x)

# A brute-force check on a polar grid.
r = np.linspace(0, 1, 401)[:, None]
th = np.linspace(0, 2 * np.pi, 4001)[None, :]
X, Y = r * np.cos(th), r * np.sin(th)
vals = a[0, 0] * X**2 + a[1, 1] * Y**2 + b[0] * X + b[1] * Y
print("grid minimum:", vals.min())

# Hard case: b has no component along the lowest eigenvector. Of the two
# antipodal solutions the lexicographically smaller one is returned.
print("hard case:", trust_region_min(np.diag([-1.0, 1.0]), np.zeros(2)))
