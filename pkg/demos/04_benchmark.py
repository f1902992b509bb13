"""
NLQN against restarted BFGS
===========================

Both methods get the same evaluation budget, with function and gradient calls
charged one unit each, and start from the same uniform draw on [-10, 10]^n.
Scaled down here to n = 10 so it runs in seconds.
"""

import numpy as np

from nlqn.experiments import exp2_benchmark

res = exp2_benchmark(seed=0, runs=5, budget=20_000, funcs=("levy", "salomon", "rcigar"), n=10)
for (algo, func), med in res.medians().items():
    print(f"{algo:>6} {func:>8}: median best f {med:.3g}")

# A single trace: best-so-far against evaluations.
trace = [(ev, bf) for a, f, r, ev, bf in res.rows if (a, f, r) == ("nlqn", "levy", 0)]
for ev, bf in trace[:: max(1, len(trace) // 8)]:
    print(f"{ev:>7d} {bf:.4g}")
