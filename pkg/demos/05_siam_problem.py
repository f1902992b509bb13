"""
SIAM hundred-digit challenge, problem 4
=======================================

A two-dimensional function with a great many local minima. Starting points are
drawn from [-100, 100]^2, far outside the region containing the global minimum.
"""

import numpy as np

from nlqn.experiments import exp3_siam
from nlqn.objectives import SIAM_MIN_VALUE, siam

obj = siam()
print("known minimum", SIAM_MIN_VALUE, "at", obj.known_minimum.location)

res = exp3_siam(seed=0, runs=6, budget=30_000)
for run in range(6):
    last = [r for r in res.rows if r[0] == run][-1]
    print(f"run {run}: best f {last[2]:.12f} after {last[1]} evaluations, solved: {last[3]}")
print("success fraction", res.success_fraction)
