"""Benchmark objectives with analytic gradients.

Every objective is an :class:`Objective`: a name, a dimension, a value map,
a gradient map and optionally a known global minimum. The registry
:data:`REGISTRY` addresses the shipped benchmarks by name.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import minimize

from .linalg import is_positive_definite

__all__ = [
    "Objective",
    "KnownMinimum",
    "RastriginModel",
    "InvalidModelError",
    "GradientReport",
    "levy",
    "salomon",
    "rcigar",
    "siam",
    "rastrigin_model_objective",
    "rcigar_model",
    "check_gradient",
    "REGISTRY",
    "make_objective",
]


@dataclass(frozen=True)
class KnownMinimum:
    value: float
    location: Optional[np.ndarray] = None


@dataclass(frozen=True)
class Objective:
    """A differentiable function ``R^n -> R`` with its gradient.

    ``domain`` is the half-width of the box ``[-domain, domain]^n`` on which
    the function is usually probed; :func:`check_gradient` samples there.
    """

    name: str
    dim: int
    value: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]
    known_minimum: Optional[KnownMinimum] = None
    domain: float = 10.0
    meta: dict = field(default_factory=dict, compare=False)

    def __call__(self, x):
        return self.value(x)


def levy(n):
    if n < 1:
        raise ValueError("levy needs n >= 1")

    def value(x):
        w = 1.0 + (np.asarray(x, dtype=float) - 1.0) / 4.0
        head = np.sin(np.pi * w[0]) ** 2
        tail = (w[-1] - 1.0) ** 2 * (1.0 + np.sin(2.0 * np.pi * w[-1]) ** 2)
        wi = w[:-1]
        body = np.sum((wi - 1.0) ** 2 * (1.0 + 10.0 * np.sin(np.pi * wi + 1.0) ** 2))
        return float(head + body + tail)

    def gradient(x):
        w = 1.0 + (np.asarray(x, dtype=float) - 1.0) / 4.0
        dw = np.zeros_like(w)
        dw[0] += 2.0 * np.pi * np.sin(np.pi * w[0]) * np.cos(np.pi * w[0])
        wi = w[:-1]
        si = np.sin(np.pi * wi + 1.0)
        dw[:-1] += 2.0 * (wi - 1.0) * (1.0 + 10.0 * si**2)
        dw[:-1] += (wi - 1.0) ** 2 * 20.0 * np.pi * si * np.cos(np.pi * wi + 1.0)
        wn = w[-1]
        sn = np.sin(2.0 * np.pi * wn)
        dw[-1] += 2.0 * (wn - 1.0) * (1.0 + sn**2)
        dw[-1] += (wn - 1.0) ** 2 * 4.0 * np.pi * sn * np.cos(2.0 * np.pi * wn)
        return dw / 4.0

    return Objective("levy", n, value, gradient, KnownMinimum(0.0, np.ones(n)))


def salomon(n):
    """``1 - cos(12 pi ||x||) + 0.6 ||x||``; the gradient at the origin is taken as zero."""
    if n < 1:
        raise ValueError("salomon needs n >= 1")

    def value(x):
        r = np.linalg.norm(x)
        return float(1.0 - np.cos(12.0 * np.pi * r) + 0.6 * r)

    def gradient(x):
        x = np.asarray(x, dtype=float)
        r = np.linalg.norm(x)
        if r == 0.0:
            return np.zeros_like(x)
        return (12.0 * np.pi * np.sin(12.0 * np.pi * r) + 0.6) * x / r

    return Objective("salomon", n, value, gradient, KnownMinimum(0.0, np.zeros(n)))


def rcigar(n, with_offset=True, amplitude=10.0, frequency=20.0 * np.pi):
    """Ill-conditioned quadratic minus a sum of cosines.

    The diagonal of the quadratic is linearly spaced from 1 to 100. With
    ``with_offset`` the constant ``amplitude * n`` is added so that the global
    minimum value is 0 at the origin.
    """
    if n < 2:
        raise ValueError("rcigar needs n >= 2")
    d = np.linspace(1.0, 100.0, n)
    offset = amplitude * n if with_offset else 0.0

    def value(x):
        x = np.asarray(x, dtype=float)
        return float(offset + x @ (d * x) - amplitude * np.sum(np.cos(frequency * x)))

    def gradient(x):
        x = np.asarray(x, dtype=float)
        return 2.0 * d * x + amplitude * frequency * np.sin(frequency * x)

    name = "rcigar" if with_offset else "rcigar-noff"
    known = KnownMinimum(offset - amplitude * n, np.zeros(n))
    return Objective(name, n, value, gradient, known, meta={"diag": d, "amplitude": amplitude, "frequency": frequency})


SIAM_MIN_VALUE = -3.306868647475
_SIAM_START = np.array([-0.0244, 0.2106])


def _siam_value(x):
    x1, x2 = x
    # exp(x2) overflows far from the origin; the value is then nan.
    with np.errstate(over="ignore", invalid="ignore"):
        return float(
            np.exp(np.sin(50.0 * x1))
            + np.sin(60.0 * np.exp(x2))
            + np.sin(70.0 * np.sin(x1))
            + np.sin(np.sin(80.0 * x2))
            - np.sin(10.0 * (x1 + x2))
            + (x1**2 + x2**2) / 4.0
        )


def _siam_gradient(x):
    x1, x2 = x
    with np.errstate(over="ignore", invalid="ignore"):
        e2 = np.exp(x2)
        g2_exp = 60.0 * e2 * np.cos(60.0 * e2)
    c = 10.0 * np.cos(10.0 * (x1 + x2))
    g1 = (
        50.0 * np.cos(50.0 * x1) * np.exp(np.sin(50.0 * x1))
        + 70.0 * np.cos(x1) * np.cos(70.0 * np.sin(x1))
        - c
        + x1 / 2.0
    )
    g2 = (
        g2_exp
        + 80.0 * np.cos(80.0 * x2) * np.cos(np.sin(80.0 * x2))
        - c
        + x2 / 2.0
    )
    return np.array([g1, g2])


def _polish_siam():
    res = minimize(_siam_value, _SIAM_START, jac=_siam_gradient, method="BFGS", options={"gtol": 1e-13})
    x = res.x
    # Newton polish with a finite-difference Hessian of the analytic gradient.
    for _ in range(5):
        g = _siam_gradient(x)
        if np.linalg.norm(g) < 1e-12:
            break
        h = np.empty((2, 2))
        for i in range(2):
            e = np.zeros(2)
            e[i] = 1e-6
            h[:, i] = (_siam_gradient(x + e) - _siam_gradient(x - e)) / 2e-6
        x = x - np.linalg.solve(0.5 * (h + h.T), g)
    return x


_SIAM_LOCATION = None


def siam():
    """Problem 4 of the SIAM hundred-digit challenge (n = 2)."""
    global _SIAM_LOCATION
    if _SIAM_LOCATION is None:
        _SIAM_LOCATION = _polish_siam()
    return Objective(
        "siam", 2, _siam_value, _siam_gradient, KnownMinimum(SIAM_MIN_VALUE, _SIAM_LOCATION.copy()), domain=1.0
    )


class InvalidModelError(ValueError):
    pass


@dataclass(frozen=True)
class RastriginModel:
    """Quadratic ``<x, R x>`` plus ``sum_j a_j cos(<s_j, x> + psi_j)``.

    ``frequencies`` holds the ``s_j`` as columns (shape ``(n, m)``) and
    ``kernel`` is the positive definite matrix defining ``||v||_kernel``.
    """

    r_hessian_half: np.ndarray
    amplitudes: np.ndarray
    frequencies: np.ndarray
    phases: np.ndarray
    kernel: np.ndarray

    def __post_init__(self):
        for name in ("r_hessian_half", "amplitudes", "frequencies", "phases", "kernel"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        n, m = self.frequencies.shape
        if self.r_hessian_half.shape != (n, n) or self.kernel.shape != (n, n):
            raise InvalidModelError("quadratic and kernel must be n x n")
        if self.amplitudes.shape != (m,) or self.phases.shape != (m,):
            raise InvalidModelError("amplitudes and phases must have length m")
        if not np.array_equal(self.kernel, self.kernel.T) or not is_positive_definite(self.kernel):
            raise InvalidModelError("kernel must be symmetric positive definite")
        if not self.separation > 0:
            raise InvalidModelError("frequency separation epsilon must be positive")

    @property
    def dim(self):
        return self.frequencies.shape[0]

    @property
    def m(self):
        return self.frequencies.shape[1]

    @property
    def separation(self):
        """``min_{j != l} min(||s_j + s_l||, ||s_j - s_l||)`` in the kernel norm.

        ``inf`` for a single frequency.
        """
        s = self.frequencies
        m = s.shape[1]
        best = np.inf
        for j in range(m):
            for l in range(j + 1, m):
                for v in (s[:, j] + s[:, l], s[:, j] - s[:, l]):
                    best = min(best, float(np.sqrt(v @ self.kernel @ v)))
        return best

    def quadratic(self, x):
        x = np.asarray(x, dtype=float)
        return float(x @ self.r_hessian_half @ x)

    def quadratic_hessian(self):
        r = self.r_hessian_half
        return r + r.T

    def disturbance(self, x):
        x = np.asarray(x, dtype=float)
        return float(self.amplitudes @ np.cos(self.frequencies.T @ x + self.phases))

    def disturbance_gradient(self, x):
        """Gradient of the cosine sum; accepts a point ``(n,)`` or a batch ``(N, n)``."""
        x = np.asarray(x, dtype=float)
        sines = np.sin(x @ self.frequencies + self.phases)
        return -(sines * self.amplitudes) @ self.frequencies.T


def rastrigin_model_objective(model, name="rastrigin-model"):
    def value(x):
        return model.quadratic(x) + model.disturbance(x)

    def gradient(x):
        x = np.asarray(x, dtype=float)
        return model.quadratic_hessian() @ x + model.disturbance_gradient(x)

    return Objective(name, model.dim, value, gradient, domain=1.0, meta={"model": model})


def rcigar_model(n, amplitude=10.0, frequency=20.0 * np.pi, kernel=None):
    """The offset-free rcigar objective written as a :class:`RastriginModel`.

    ``-a cos(s x_i) = a cos(s x_i + pi)``, so the phases are all ``pi``.
    """
    d = np.linspace(1.0, 100.0, n)
    return RastriginModel(
        r_hessian_half=np.diag(d),
        amplitudes=np.full(n, amplitude),
        frequencies=frequency * np.eye(n),
        phases=np.full(n, np.pi),
        kernel=np.eye(n) if kernel is None else kernel,
    )


@dataclass
class GradientReport:
    max_rel_error: float
    worst_point: Optional[np.ndarray]
    failure_point: Optional[np.ndarray] = None

    @property
    def ok(self):
        return self.failure_point is None

    def passes(self, threshold=1e-5):
        return self.ok and self.max_rel_error <= threshold


def _fd_gradient(f, x):
    h = 1e-6 * max(1.0, float(np.linalg.norm(x)))
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2.0 * h)
    return g


def check_gradient(obj, trials=100, seed=0, exclude_radius=1e-6, domain=None):
    """Compare the analytic gradient with central differences at random points.

    Points are drawn uniformly from ``[-domain, domain]^n`` (``obj.domain`` by
    default), rejecting those within ``exclude_radius`` of the origin. The
    relative error at a point is ``||fd - grad|| / max(1, ||grad||)``.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    half = obj.domain if domain is None else domain
    worst, worst_x = 0.0, None
    for _ in range(trials):
        x = rng.uniform(-half, half, obj.dim)
        while np.linalg.norm(x) < exclude_radius:
            x = rng.uniform(-half, half, obj.dim)
        g = np.asarray(obj.gradient(x), dtype=float)
        fx = obj.value(x)
        if not (np.isfinite(fx) and np.all(np.isfinite(g))):
            return GradientReport(np.inf, x, failure_point=x)
        fd = _fd_gradient(obj.value, x)
        if not np.all(np.isfinite(fd)):
            return GradientReport(np.inf, x, failure_point=x)
        err = float(np.linalg.norm(fd - g) / max(1.0, np.linalg.norm(g)))
        if err > worst:
            worst, worst_x = err, x
    return GradientReport(worst, worst_x)


REGISTRY = {
    "levy": lambda n: levy(n),
    "salomon": lambda n: salomon(n),
    "rcigar": lambda n: rcigar(n, with_offset=True),
    "rcigar-noff": lambda n: rcigar(n, with_offset=False),
    "siam": lambda n=2: siam(),
}


def make_objective(name, dim=None):
    """Look up a registered objective. ``dim`` is ignored for ``siam``."""
    if name not in REGISTRY:
        raise KeyError(f"unknown objective {name!r}; available: {', '.join(sorted(REGISTRY))}")
    if name == "siam":
        return siam()
    if dim is None:
        raise ValueError(f"objective {name!r} needs a dimension")
    return REGISTRY[name](dim)
