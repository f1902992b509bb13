"""Randomly reinitialized BFGS.

A dense BFGS method with a strong-Wolfe line search is restarted from a fresh
uniform draw on ``[center - halfwidth, center + halfwidth]^n`` whenever the
gradient norm drops below a tolerance, the line search fails, or a value turns
non-finite. Every function and gradient evaluation is charged to the shared
evaluation counter.
"""

import csv
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .optimizer import BudgetExhausted, CountedObjective, EvalCounter

__all__ = [
    "RbfgsConfig",
    "LocalResult",
    "RbfgsResult",
    "LinesearchFailure",
    "wolfe_linesearch",
    "bfgs_local",
    "draw_restart",
    "rbfgs_run",
    "write_rbfgs_csv",
]


@dataclass(frozen=True)
class RbfgsConfig:
    dim: int
    budget: int
    center: Optional[np.ndarray] = None
    halfwidth: float = 10.0
    grad_tol: float = 1e-4
    c1: float = 1e-4
    c2: float = 0.9
    max_bisections: int = 50
    seed: int = 0

    def __post_init__(self):
        if self.budget < 1:
            raise ValueError("budget must be >= 1")
        if not (self.grad_tol > 0 and 0 < self.c1 < self.c2 < 1 and self.halfwidth > 0):
            raise ValueError("invalid tolerances")
        c = np.zeros(self.dim) if self.center is None else np.asarray(self.center, dtype=float)
        object.__setattr__(self, "center", c)


class LinesearchFailure(RuntimeError):
    pass


def wolfe_linesearch(f, grad, x, fx, gx, p, c1=1e-4, c2=0.9, max_bisections=50, alpha0=1.0):
    """Step length satisfying the strong Wolfe conditions.

    Bracketing by doubling followed by bisection zoom. ``f`` and ``grad`` are
    called separately, the gradient only when sufficient decrease holds.
    Returns ``(alpha, x_new, f_new, g_new)``; raises :class:`LinesearchFailure`
    when no Wolfe point is found within ``max_bisections`` zoom steps.
    """
    dphi0 = float(gx @ p)
    if not dphi0 < 0:
        raise LinesearchFailure("not a descent direction")

    def probe(alpha):
        xa = x + alpha * p
        fa = f(xa)
        return xa, fa

    def zoom(lo, f_lo, hi):
        for _ in range(max_bisections):
            alpha = 0.5 * (lo + hi)
            xa, fa = probe(alpha)
            if not np.isfinite(fa) or fa > fx + c1 * alpha * dphi0 or fa >= f_lo:
                hi = alpha
                continue
            ga = grad(xa)
            dphi = float(ga @ p)
            if abs(dphi) <= -c2 * dphi0:
                return alpha, xa, fa, ga
            if dphi * (hi - lo) >= 0:
                hi = lo
            lo, f_lo = alpha, fa
        raise LinesearchFailure("zoom did not find a Wolfe point")

    prev, f_prev = 0.0, fx
    alpha = alpha0
    for i in range(max_bisections):
        xa, fa = probe(alpha)
        if not np.isfinite(fa) or fa > fx + c1 * alpha * dphi0 or (i > 0 and fa >= f_prev):
            return zoom(prev, f_prev, alpha)
        ga = grad(xa)
        dphi = float(ga @ p)
        if abs(dphi) <= -c2 * dphi0:
            return alpha, xa, fa, ga
        if dphi >= 0:
            return zoom(alpha, fa, prev)
        prev, f_prev = alpha, fa
        alpha *= 2.0
    raise LinesearchFailure("bracketing did not terminate")


@dataclass
class LocalResult:
    x: np.ndarray
    f: float
    converged: bool
    iterations: int = 0
    inverse_hessian: Optional[np.ndarray] = None


def bfgs_local(f, start, grad_tol=1e-4, c1=1e-4, c2=0.9, max_bisections=50):
    """Dense BFGS from ``start`` until ``||grad|| < grad_tol``.

    ``f`` is a :class:`CountedObjective`; budget exhaustion surfaces as
    :class:`BudgetExhausted` from its calls and is caught here, returning the
    current point with ``converged=False``. The inverse Hessian starts at the
    identity and is rescaled by ``s^T y / y^T y`` before the first update.
    Updates with ``s^T y <= 1e-12 ||s|| ||y||`` are skipped.
    """
    x = np.array(start, dtype=float)
    n = x.size
    H = np.eye(n)
    fx, gx = np.inf, None
    it = 0
    try:
        fx = f.value(x)
        if not np.isfinite(fx):
            return LocalResult(x, fx, False)
        gx = f.gradient(x)
        first = True
        while np.linalg.norm(gx) >= grad_tol:
            with np.errstate(invalid="ignore", over="ignore"):
                p = -H @ gx
            if not (np.all(np.isfinite(gx)) and np.all(np.isfinite(p))):
                return LocalResult(x, fx, False, it, H)
            try:
                _, xn, fn, gn = wolfe_linesearch(f.value, f.gradient, x, fx, gx, p, c1, c2, max_bisections)
            except LinesearchFailure:
                return LocalResult(x, fx, False, it, H)
            s, y = xn - x, gn - gx
            sy = float(s @ y)
            if not np.all(np.isfinite(y)):
                return LocalResult(xn, fn, False, it, H)
            if sy > 1e-12 * np.linalg.norm(s) * np.linalg.norm(y):
                if first:
                    H *= sy / float(y @ y)
                    first = False
                rho = 1.0 / sy
                Hy = H @ y
                H += (rho * rho * (y @ Hy) + rho) * np.outer(s, s) - rho * (np.outer(Hy, s) + np.outer(s, Hy))
                H = 0.5 * (H + H.T)
            x, fx, gx = xn, fn, gn
            it += 1
    except BudgetExhausted:
        return LocalResult(x, fx, False, it, H)
    return LocalResult(x, fx, True, it, H)


def draw_restart(rng, cfg):
    """Uniform point on ``[center - halfwidth, center + halfwidth]^n``."""
    return cfg.center + rng.uniform(-cfg.halfwidth, cfg.halfwidth, cfg.dim)


@dataclass
class RbfgsResult:
    best_x: np.ndarray
    best_f: float
    evals: int
    restarts: int
    # (eval_count, best_f, restart_index) each time the best value improves
    trace: list = field(default_factory=list)


class _TracedObjective(CountedObjective):
    def __init__(self, objective, counter, result):
        super().__init__(objective, counter, strict=True)
        self.result = result

    def value(self, x):
        before = self.best_f
        fx = super().value(x)
        if self.best_f < before:
            self.result.trace.append((self.counter.total, self.best_f, self.result.restarts))
        return fx


def rbfgs_run(objective, cfg, x0=None, rng=None):
    """Restart :func:`bfgs_local` until ``cfg.budget`` evaluations are spent.

    The first start is ``x0`` if given, otherwise a uniform draw.
    """
    rng = np.random.default_rng(cfg.seed) if rng is None else rng
    counter = EvalCounter(limit=cfg.budget)
    result = RbfgsResult(None, np.inf, 0, 0)
    f = _TracedObjective(objective, counter, result)
    start = draw_restart(rng, cfg) if x0 is None else np.asarray(x0, dtype=float)
    while not counter.exhausted:
        bfgs_local(f, start, cfg.grad_tol, cfg.c1, cfg.c2, cfg.max_bisections)
        if counter.exhausted:
            break
        result.restarts += 1
        start = draw_restart(rng, cfg)
    result.best_x, result.best_f = f.best_x, f.best_f
    result.evals = counter.total
    return result


def write_rbfgs_csv(result, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("eval_count", "best_f", "restart_index"))
        for ev, bf, ri in result.trace:
            w.writerow([ev, f"{bf:.17g}", ri])
