"""Dense linear-algebra kernels.

Three routines are provided:

* :func:`sym_eig` -- symmetric eigendecomposition with ascending eigenvalues.
* :func:`lyapunov_lsq_solve` -- minimal-norm least-squares solution of
  ``X P + P^T X = Q`` over symmetric ``X``.
* :func:`trust_region_min` -- global minimizer of ``<x, a x> + b^T x`` over a
  Euclidean ball, including the hard case.
"""

import numpy as np
from scipy.optimize import brentq

__all__ = [
    "NumericalError",
    "sym_eig",
    "is_positive_definite",
    "lyapunov_lsq_solve",
    "lyapunov_operator",
    "symmetric_basis",
    "trust_region_min",
]

DEFAULT_RCOND = 1e-12


class NumericalError(ArithmeticError):
    """Raised when a dense kernel fails to converge or receives non-finite data."""


def _as_square(m, name):
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NumericalError(f"{name} has non-finite entries")
    return m


def sym_eig(m):
    """Eigendecomposition of a symmetric matrix.

    Parameters
    ----------
    m : array_like, shape (n, n)
        Symmetric matrix. Only the symmetric part ``(m + m.T) / 2`` is used.

    Returns
    -------
    eigenvalues : ndarray, shape (n,)
        In ascending order.
    eigenvectors : ndarray, shape (n, n)
        Orthonormal columns, ``m = Q diag(eigenvalues) Q^T``.
    """
    m = _as_square(m, "m")
    try:
        w, q = np.linalg.eigh(0.5 * (m + m.T))
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigendecomposition did not converge: {exc}") from exc
    return w, q


def is_positive_definite(m, eigenvalues=None):
    """Scale-relative definiteness test: ``min eig > 1e-10 * max(1, |max eig|)``."""
    w = sym_eig(m)[0] if eigenvalues is None else np.asarray(eigenvalues)
    return bool(w[0] > 1e-10 * max(1.0, abs(w[-1])))


def symmetric_basis(n):
    """Frobenius-orthonormal basis of the symmetric ``n x n`` matrices.

    Returns an array of shape ``(n(n+1)/2, n, n)``; off-diagonal elements carry
    the ``1/sqrt(2)`` weight so that coefficient norms equal Frobenius norms.
    """
    basis = []
    for i in range(n):
        for j in range(i, n):
            e = np.zeros((n, n))
            if i == j:
                e[i, i] = 1.0
            else:
                e[i, j] = e[j, i] = 1.0 / np.sqrt(2.0)
            basis.append(e)
    return np.array(basis).reshape(-1, n, n)


def lyapunov_operator(p):
    """Matrix of ``X -> X P + P^T X`` from symmetric coefficients to ``vec``.

    Shape ``(n*n, n(n+1)/2)`` with respect to :func:`symmetric_basis`.
    """
    p = np.asarray(p, dtype=float)
    n = p.shape[0]
    basis = symmetric_basis(n)
    images = basis @ p + p.T @ basis
    return images.reshape(len(basis), n * n).T


def _residual(x, p, q):
    return float(np.linalg.norm(x @ p + p.T @ x - q, "fro"))


def _solve_dense(p, q, rcond):
    n = p.shape[0]
    op = lyapunov_operator(p)
    coef = np.linalg.lstsq(op, q.reshape(-1), rcond=rcond)[0]
    return np.tensordot(coef, symmetric_basis(n), axes=1)


def _solve_symmetric(p, q, rcond):
    # For symmetric p the operator is self-adjoint on symmetric matrices and
    # diagonal in the eigenbasis of p, with eigenvalues lam_i + lam_j.
    lam, u = sym_eig(p)
    qt = u.T @ q @ u
    denom = lam[:, None] + lam[None, :]
    scale = np.max(np.abs(denom)) if denom.size else 0.0
    keep = np.abs(denom) > rcond * scale
    xt = np.zeros_like(qt)
    xt[keep] = qt[keep] / denom[keep]
    return u @ xt @ u.T


def lyapunov_lsq_solve(p, q, rcond=DEFAULT_RCOND, method="auto"):
    """Solve ``X P + P^T X = Q`` for symmetric ``X`` in the least-squares sense.

    Among all least-squares minimizers the one of minimal Frobenius norm is
    returned, so rank-deficient ``P`` is not an error.

    Parameters
    ----------
    p : array_like, shape (n, n)
    q : array_like, shape (n, n)
        Symmetric right-hand side.
    rcond : float
        Relative cutoff below which singular values of the operator are
        treated as zero.
    method : {"auto", "dense", "eig"}
        ``"dense"`` vectorizes the operator and uses an SVD-based solve;
        ``"eig"`` requires exactly symmetric ``p`` and diagonalizes the
        operator in the eigenbasis of ``p``. ``"auto"`` picks ``"eig"`` when
        ``p`` is exactly symmetric.

    Returns
    -------
    x : ndarray, shape (n, n)
        Exactly symmetric solution.
    residual : float
        ``||X P + P^T X - Q||_F``.
    """
    p = _as_square(p, "p")
    q = _as_square(q, "q")
    if p.shape != q.shape:
        raise ValueError(f"shape mismatch: p {p.shape}, q {q.shape}")
    symmetric = np.array_equal(p, p.T)
    if method == "auto":
        method = "eig" if symmetric else "dense"
    if method == "eig":
        if not symmetric:
            raise ValueError("method='eig' requires an exactly symmetric p")
        x = _solve_symmetric(p, q, rcond)
    elif method == "dense":
        try:
            x = _solve_dense(p, q, rcond)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"least-squares solve failed: {exc}") from exc
    else:
        raise ValueError(f"unknown method {method!r}")
    x = 0.5 * (x + x.T)
    return x, _residual(x, p, q)


def trust_region_min(a, b, radius=1.0):
    """Minimize ``<x, a x> + b^T x`` subject to ``||x|| <= radius``.

    ``a`` may be indefinite. The solution satisfies ``(2a + 2 lam I) x = -b``
    with ``lam >= 0``, ``lam (||x|| - radius) = 0`` and ``2a + 2 lam I``
    positive semidefinite. The multiplier is found by a bracketed root search
    on the secular equation ``1/||x(lam)|| - 1/radius = 0``. In the hard case
    the component along the lowest eigenvector is added to reach the sphere;
    of the two sign choices the lexicographically smaller point is returned.
    """
    a = _as_square(a, "a")
    b = np.asarray(b, dtype=float)
    if b.shape != (a.shape[0],):
        raise ValueError(f"b must have shape ({a.shape[0]},), got {b.shape}")
    if not np.all(np.isfinite(b)):
        raise NumericalError("b has non-finite entries")
    if not radius > 0:
        raise ValueError("radius must be positive")

    n = a.shape[0]
    if not np.any(a) and not np.any(b):
        return np.zeros(n)
    # Positive rescaling leaves the minimizer unchanged and keeps the
    # secular equation well scaled.
    scale = max(np.max(np.abs(a)), np.max(np.abs(b)))
    a = a / scale
    b = b / scale

    mu, v = sym_eig(a)
    h = 2.0 * mu
    c = v.T @ b
    hscale = max(1.0, float(np.max(np.abs(h))))
    cnorm = float(np.linalg.norm(c))

    def step(lam):
        out = np.zeros(n)
        nz = c != 0
        with np.errstate(divide="ignore"):
            out[nz] = -c[nz] / (h[nz] + lam)
        return out

    # Interior Newton point for a positive definite model.
    if is_positive_definite(a, mu):
        x0 = step(0.0)
        if np.linalg.norm(x0) <= radius:
            return v @ x0

    lam_lo = max(0.0, -h[0])
    low = h - h[0] <= 1e-12 * hscale
    c_low = float(np.linalg.norm(c[low]))

    if c_low <= 1e-12 * max(cnorm, 1.0):
        # Possible hard case: gradient orthogonal to the lowest eigenspace.
        xp = np.zeros(n)
        rest = ~low
        xp[rest] = -c[rest] / (h[rest] + lam_lo)
        xp_norm = float(np.linalg.norm(xp))
        if xp_norm <= radius:
            if lam_lo == 0.0:
                # Singular but semidefinite: the min-norm stationary point is optimal.
                return v @ xp
            tau = np.sqrt(max(radius**2 - xp_norm**2, 0.0))
            e = np.zeros(n)
            e[np.flatnonzero(low)[0]] = 1.0
            cands = [v @ (xp + tau * e), v @ (xp - tau * e)]
            cands.sort(key=lambda x: tuple(x))
            return cands[0]
        c = c.copy()
        c[low] = 0.0

    def secular(lam):
        norm = np.linalg.norm(step(lam))
        if not np.isfinite(norm):
            return -1.0 / radius
        if norm == 0.0:
            return np.inf
        return 1.0 / norm - 1.0 / radius

    hi = lam_lo + float(np.linalg.norm(c)) / radius + 1.0
    while secular(hi) < 0:
        hi = lam_lo + 2.0 * (hi - lam_lo)
    lo = lam_lo
    if secular(lo) >= 0:
        lam = lo
    else:
        lam = brentq(secular, lo, hi, xtol=1e-15 * max(1.0, hi), rtol=4 * np.finfo(float).eps, maxiter=500)
    x = step(lam)
    norm = np.linalg.norm(x)
    if norm > radius:
        x *= radius / norm
    return v @ x
