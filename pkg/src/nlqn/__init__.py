"""Global optimization with non-local quadratic models fitted to sampled gradients."""

from .baselines import RbfgsConfig, rbfgs_run
from .linalg import lyapunov_lsq_solve, trust_region_min
from .objectives import Objective, RastriginModel, make_objective
from .optimizer import NlqnConfig, nlqn_run, preset
from .quadfit import assemble, direction, fit

__all__ = [
    "NlqnConfig",
    "Objective",
    "RastriginModel",
    "RbfgsConfig",
    "assemble",
    "direction",
    "fit",
    "lyapunov_lsq_solve",
    "make_objective",
    "nlqn_run",
    "preset",
    "rbfgs_run",
    "trust_region_min",
]
