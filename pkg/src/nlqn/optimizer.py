"""The non-local quasi-Newton driver.

One iteration draws ``k`` standard-normal directions, evaluates gradients at
``x_t + sigma_t z_j``, fits a quadratic model, and moves to the best point of
a geometric grid along the model's Newton direction and along ``-b``. The
sampling width ``sigma_t`` is then adapted from the length of the step.
"""

import csv
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .linalg import NumericalError
from .quadfit import NonFiniteGradientError, assemble, direction, fit

__all__ = [
    "NlqnConfig",
    "EvalCounter",
    "BudgetExhausted",
    "CountedObjective",
    "IterationTrace",
    "LinesearchResult",
    "NlqnResult",
    "gaussian_sampler",
    "linesearch",
    "scaling",
    "nlqn_run",
    "preset",
    "write_trace_csv",
]


@dataclass(frozen=True)
class NlqnConfig:
    """Parameters of a run. At least one of ``max_iter`` and ``budget`` is required."""

    dim: int
    k: int
    sigma0: float
    max_iter: Optional[int] = None
    budget: Optional[int] = None
    base: float = 6.0 / 5.0
    exp_lo: int = -10
    exp_hi: int = 10
    shrink: float = 0.5
    sigma_floor: float = 1e-4
    step_floor: float = 1e-4
    expand_trigger: float = 2.0
    trust_radius: float = 1.0
    keep_incumbent: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.k < 2:
            raise ValueError("sample size k must be >= 2")
        if not self.sigma0 > 0:
            raise ValueError("sigma0 must be positive")
        if not self.exp_lo <= 0 <= self.exp_hi:
            raise ValueError("exponent range must contain 0")
        if not 0 < self.shrink < 1:
            raise ValueError("shrink factor must lie in (0, 1)")
        if self.max_iter is None and self.budget is None:
            raise ValueError("set max_iter or budget")
        if not self.trust_radius > 0:
            raise ValueError("trust_radius must be positive")

    @property
    def grid_size(self):
        return 2 * (self.exp_hi - self.exp_lo + 1)

    @property
    def evals_per_iteration(self):
        return self.k + self.grid_size


def preset(name, dim=None, **overrides):
    """Configurations used in the benchmarks.

    ``"benchmark"``: ``sigma0 = 10``, ``k = 3 n``, shrink ``1/2``.
    ``"siam"``: ``n = 2``, ``sigma0 = 1``, ``k = 3``, shrink ``10/11``.
    """
    if name == "benchmark":
        if dim is None:
            raise ValueError("benchmark preset needs dim")
        cfg = dict(dim=dim, k=3 * dim, sigma0=10.0, shrink=0.5, budget=100_000)
    elif name == "siam":
        cfg = dict(dim=2, k=3, sigma0=1.0, shrink=10.0 / 11.0, budget=30_000)
    else:
        raise ValueError(f"unknown preset {name!r}")
    cfg.update(overrides)
    return NlqnConfig(**cfg)


class BudgetExhausted(Exception):
    pass


@dataclass
class EvalCounter:
    """Function and gradient evaluations, one unit each."""

    function: int = 0
    gradient: int = 0
    limit: Optional[int] = None

    @property
    def total(self):
        return self.function + self.gradient

    @property
    def exhausted(self):
        return self.limit is not None and self.total >= self.limit


class CountedObjective:
    """Charges every value and gradient call to a counter and tracks the best value seen.

    With ``strict=True`` a call that would exceed ``counter.limit`` raises
    :class:`BudgetExhausted` instead of evaluating.
    """

    def __init__(self, objective, counter, strict=False):
        self.objective = objective
        self.counter = counter
        self.strict = strict
        self.best_f = np.inf
        self.best_x = None

    def _charge(self):
        if self.strict and self.counter.exhausted:
            raise BudgetExhausted

    def value(self, x):
        self._charge()
        self.counter.function += 1
        fx = float(self.objective.value(x))
        if fx < self.best_f:
            self.best_f, self.best_x = fx, np.array(x, dtype=float)
        return fx

    def gradient(self, x):
        self._charge()
        self.counter.gradient += 1
        return np.asarray(self.objective.gradient(x), dtype=float)


@dataclass(frozen=True)
class IterationTrace:
    t: int
    x: np.ndarray
    f: float
    sigma: float
    step_norm: float
    direction: str
    exponent: int
    evals: int
    best_f: float
    used_trust_region: bool = False


@dataclass(frozen=True)
class LinesearchResult:
    x: np.ndarray
    f: float
    direction: str
    exponent: int
    stalled: bool = False


@dataclass
class NlqnResult:
    x: np.ndarray
    f: float
    best_x: np.ndarray
    best_f: float
    f0: float
    sigma0: float
    trace: list = field(default_factory=list)
    evals: int = 0
    # evaluations charged before the first iteration
    evals0: int = 0


def gaussian_sampler(n, k, rng):
    """``k`` independent standard-normal vectors in ``R^n`` as the columns of an ``(n, k)`` array."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return rng.standard_normal((n, k))


def linesearch(f, newton, neg_b, x, cfg, incumbent=None):
    """Best point of ``{x + base^i d : d in (newton, neg_b), exp_lo <= i <= exp_hi}``.

    ``f`` is called once per candidate. Ties go to the smaller value, then the
    Newton direction, then the smaller exponent. If every candidate is
    non-finite, ``x`` is returned with ``stalled=True``.

    ``incumbent`` is the known value ``f(x)``. When given, ``x`` itself is
    returned (tag ``"keep"``) unless some candidate is strictly better.
    """
    best = None
    for tag, d in (("newton", newton), ("neg_b", neg_b)):
        for i in range(cfg.exp_lo, cfg.exp_hi + 1):
            cand = x + cfg.base**i * d
            fc = f(cand)
            if not np.isfinite(fc):
                continue
            if best is None or fc < best.f:
                best = LinesearchResult(cand, fc, tag, i)
    if best is None:
        f_x = np.nan if incumbent is None else incumbent
        return LinesearchResult(np.array(x, dtype=float), f_x, "none", 0, stalled=True)
    if incumbent is not None and not best.f < incumbent:
        return LinesearchResult(np.array(x, dtype=float), incumbent, "keep", 0)
    return best


def scaling(sigma0, sigma, step, cfg):
    """Adapt the sampling width from the last step.

    Reset to ``sigma0`` below ``sigma_floor``; shrink by ``cfg.shrink`` after a
    step shorter than ``step_floor``; follow a step longer than
    ``expand_trigger * sigma`` with ``shrink * ||step||``; otherwise keep.
    """
    if sigma < cfg.sigma_floor:
        return scaling(sigma0, sigma0, step, cfg)
    norm = float(np.linalg.norm(step))
    if norm < cfg.step_floor:
        return cfg.shrink * sigma
    if norm > cfg.expand_trigger * sigma:
        return cfg.shrink * norm
    return sigma


def nlqn_run(objective, x0, cfg, rng=None):
    """Run the non-local quasi-Newton method.

    The iteration stops after ``cfg.max_iter`` iterations or once the
    evaluation counter reaches ``cfg.budget``; an iteration that crosses the
    budget is completed. Each iteration costs exactly ``k + grid_size``
    evaluations. With ``cfg.keep_incumbent`` the value ``f(x0)`` takes part in
    the first acceptance test and is charged once; otherwise it is only a
    reference value for the trace and is free.

    Returns an :class:`NlqnResult` holding the last iterate and the best point
    among all evaluated points.
    """
    x = np.array(x0, dtype=float)
    if x.shape != (cfg.dim,) or not np.all(np.isfinite(x)):
        raise ValueError("x0 must be a finite vector of length cfg.dim")
    rng = np.random.default_rng(cfg.seed) if rng is None else rng
    counter = EvalCounter()
    fc = CountedObjective(objective, counter)
    if cfg.budget is not None and cfg.budget <= 0:
        f0 = float(objective.value(x))
    elif cfg.keep_incumbent:
        f0 = fc.value(x)
    else:
        f0 = float(objective.value(x))
    if not np.isfinite(f0):
        raise FloatingPointError(f"objective is not finite at x0: {f0}")
    fc.best_f, fc.best_x = f0, x.copy()

    result = NlqnResult(x, f0, x.copy(), f0, f0, cfg.sigma0, evals=counter.total, evals0=counter.total)
    sigma = cfg.sigma0
    f_x = f0
    t = 0
    while True:
        if cfg.max_iter is not None and t >= cfg.max_iter:
            break
        if cfg.budget is not None and counter.total >= cfg.budget:
            break
        z = gaussian_sampler(cfg.dim, cfg.k, rng)
        try:
            batch = assemble(x, sigma, z, fc.gradient, rng=rng)
            dirs = direction(fit(batch), cfg.trust_radius)
        except (NonFiniteGradientError, NumericalError):
            # No usable model this iteration: keep x_t, which shrinks sigma.
            dirs = None
        if dirs is None:
            ls = LinesearchResult(x, f_x, "none", 0, stalled=True)
        else:
            ls = linesearch(fc.value, dirs.newton, dirs.neg_b, x, cfg, f_x if cfg.keep_incumbent else None)
            if ls.stalled:
                ls = LinesearchResult(x, f_x, "none", 0, stalled=True)
        step = ls.x - x
        x, f_x = ls.x, ls.f
        sigma = scaling(cfg.sigma0, sigma, step, cfg)
        t += 1
        result.trace.append(
            IterationTrace(
                t=t,
                x=x,
                f=f_x,
                sigma=sigma,
                step_norm=float(np.linalg.norm(step)),
                direction=ls.direction,
                exponent=ls.exponent,
                evals=counter.total,
                best_f=fc.best_f,
                used_trust_region=bool(dirs and dirs.used_trust_region),
            )
        )
    result.x, result.f = x, f_x
    result.best_x, result.best_f = fc.best_x, fc.best_f
    result.evals = counter.total
    return result


TRACE_COLUMNS = ("t", "f_xt", "sigma_t", "step_norm", "dir_tag", "exponent_i", "evals", "best_f")


def _g(v):
    return f"{float(v):.17g}"


def write_trace_csv(result, path):
    """Write one row per iteration; row ``t = 0`` holds the starting point."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRACE_COLUMNS)
        w.writerow([0, _g(result.f0), _g(result.sigma0), _g(0.0), "init", 0, result.evals0, _g(result.f0)])
        for r in result.trace:
            w.writerow([r.t, _g(r.f), _g(r.sigma), _g(r.step_norm), r.direction, r.exponent, r.evals, _g(r.best_f)])
