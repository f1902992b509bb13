"""Non-local quadratic models fitted to sampled gradients.

The model is ``q(x) = <x, (A + A^T) x> + b^T x`` in displacement coordinates
around a center ``x_t``, so ``grad q(x) = 2 (A + A^T) x + b``. Gradients are
sampled at ``x_t + sigma * z_j`` and matched in the least-squares sense
against ``grad q(sigma * z_j) = (A + A^T) Z_j + b`` with ``Z_j = 2 sigma z_j``.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .linalg import is_positive_definite, lyapunov_lsq_solve, sym_eig, trust_region_min

__all__ = [
    "SampleBatch",
    "QuadraticModel",
    "SearchDirections",
    "NonFiniteGradientError",
    "DegenerateBatchWarning",
    "assemble",
    "fit",
    "direction",
    "model_value",
    "model_gradient",
]


class NonFiniteGradientError(FloatingPointError):
    def __init__(self, point):
        self.point = np.asarray(point)
        super().__init__(f"non-finite gradient at {self.point!r}")


class DegenerateBatchWarning(UserWarning):
    pass


@dataclass(frozen=True)
class SampleBatch:
    """Gradients of the objective at ``center + sigma * z[:, j]``."""

    center: np.ndarray
    sigma: float
    z: np.ndarray
    gradients: np.ndarray

    @property
    def k(self):
        return self.z.shape[1]

    @property
    def points(self):
        return self.center[:, None] + self.sigma * self.z

    @property
    def scaled(self):
        """The matrix ``Z = 2 sigma z``."""
        return 2.0 * self.sigma * self.z


@dataclass(frozen=True)
class QuadraticModel:
    a: np.ndarray
    b: np.ndarray
    fit_residual: float
    definite: bool
    degenerate: bool = False

    @property
    def curvature(self):
        """``A + A^T``."""
        return self.a + self.a.T

    @property
    def hessian(self):
        """Hessian of the model, ``2 (A + A^T)``."""
        return 2.0 * self.curvature


@dataclass(frozen=True)
class SearchDirections:
    newton: np.ndarray
    neg_b: np.ndarray
    used_trust_region: bool


def model_value(model, x):
    x = np.asarray(x, dtype=float)
    return float(x @ model.curvature @ x + model.b @ x)


def model_gradient(model, x):
    """Gradient of the model at a displacement ``x`` (or a batch of columns)."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        return 2.0 * model.curvature @ x + model.b
    return 2.0 * model.curvature @ x + model.b[:, None]


def assemble(center, sigma, z, grad_eval, rng=None):
    """Evaluate gradients at ``center + sigma * z[:, j]``.

    A sample with a non-finite gradient is redrawn once from ``rng`` (standard
    normal); a second failure, or a failure without ``rng``, raises
    :class:`NonFiniteGradientError`.
    """
    center = np.asarray(center, dtype=float)
    z = np.array(z, dtype=float)
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    if z.ndim != 2 or z.shape[0] != center.size or z.shape[1] < 2:
        raise ValueError(f"z must have shape ({center.size}, k >= 2), got {z.shape}")
    grads = np.empty_like(z)
    for j in range(z.shape[1]):
        point = center + sigma * z[:, j]
        g = np.asarray(grad_eval(point), dtype=float)
        if not np.all(np.isfinite(g)):
            if rng is None:
                raise NonFiniteGradientError(point)
            z[:, j] = rng.standard_normal(center.size)
            point = center + sigma * z[:, j]
            g = np.asarray(grad_eval(point), dtype=float)
            if not np.all(np.isfinite(g)):
                raise NonFiniteGradientError(point)
        grads[:, j] = g
    return SampleBatch(center, float(sigma), z, grads)


def fit(batch, rcond=None):
    """Least-squares quadratic model of the sampled gradient field.

    The curvature ``A~ = A + A^T`` solves the Lyapunov-type normal equations
    ``A~ P + P^T A~ = V + V^T`` with ``P = (Z - Zbar) Z^T`` and
    ``V = (G - Gbar) Z^T``; then ``A = A~ / 2`` and ``b = gbar - A~ zbar``.
    """
    Z = batch.scaled
    G = batch.gradients
    n, k = Z.shape
    zbar = Z.mean(axis=1)
    gbar = G.mean(axis=1)
    Zc = Z - zbar[:, None]
    Gc = G - gbar[:, None]
    # (Z - Zbar) Z^T equals Zc Zc^T because the columns of Zc sum to zero;
    # the symmetric form selects the eigenbasis solver.
    with np.errstate(over="ignore", invalid="ignore"):
        P = Zc @ Zc.T
        V = Gc @ Z.T
        Q = V + V.T
    # Overflow shows up as non-finite P or V and is reported by the solver.
    kwargs = {} if rcond is None else {"rcond": rcond}
    at, residual = lyapunov_lsq_solve(P, Q, **kwargs)
    a = 0.5 * (at + at.T) / 2.0
    curvature = a + a.T
    b = gbar - curvature @ zbar

    spread = np.linalg.svd(Zc, compute_uv=False)
    rank = int(np.sum(spread > 1e-10 * spread[0])) if spread[0] > 0 else 0
    degenerate = rank < min(n, k - 1)
    if degenerate:
        warnings.warn(
            f"sample spread has rank {rank} < {min(n, k - 1)}; returning the minimal-norm fit",
            DegenerateBatchWarning,
            stacklevel=2,
        )
    definite = is_positive_definite(curvature, sym_eig(curvature)[0])
    return QuadraticModel(a, b, residual, definite, degenerate)


def direction(model, trust_radius=1.0):
    """Non-local Newton direction and the negative linear term.

    For positive definite curvature the model minimizer solves
    ``2 (A + A^T) dx = -b``; otherwise the model is minimized over the ball of
    radius ``trust_radius``.
    """
    neg_b = -model.b
    if model.definite:
        try:
            newton = np.linalg.solve(2.0 * model.curvature, neg_b)
        except np.linalg.LinAlgError:
            newton = None
        if newton is not None and np.all(np.isfinite(newton)):
            return SearchDirections(newton, neg_b, False)
    newton = trust_region_min(model.curvature, model.b, trust_radius)
    return SearchDirections(newton, neg_b, True)
