"""Reproducible experiments and numerical checks of the theory.

Every unit of work (one trial, one run, one seed) owns a random stream
``default_rng([seed, *unit_index])``, so results do not depend on the order or
the process in which units are executed. CSV writers print floats with 17
significant digits, which makes reruns byte-identical.
"""

import csv
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .baselines import RbfgsConfig, rbfgs_run
from .objectives import SIAM_MIN_VALUE, RastriginModel, make_objective, rcigar, rcigar_model, siam
from .optimizer import nlqn_run, preset
from .quadfit import assemble, direction, fit

__all__ = [
    "SCALE_GRID",
    "ESTIMATORS",
    "AngleRecord",
    "BoundCheckRecord",
    "ConsistencyReport",
    "angle",
    "exp1_angles",
    "exp2_benchmark",
    "exp3_siam",
    "siam_success",
    "residual_exact",
    "residual_monte_carlo",
    "residual_bound",
    "random_rastrigin_model",
    "bound_check",
    "consistency_check",
    "write_csv",
]

SCALE_GRID = (1e-2, 1e-1, 1.0, 10.0, 1e2, 1e3)
ESTIMATORS = ("newton", "neg_b", "mean_grad", "random")
SIAM_TOLERANCE = 1e-8


def _map(fn, units, jobs=1):
    if jobs is None or jobs <= 1:
        return [fn(u) for u in units]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, units, chunksize=max(1, len(units) // (4 * jobs))))


def _g(v):
    return f"{float(v):.17g}"


def write_csv(path, header, rows):
    """Write ``rows`` under ``header``; floats use 17 significant digits."""
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_g(v) if isinstance(v, (float, np.floating)) else v for v in row])


# Search-direction angles.


@dataclass(frozen=True)
class AngleRecord:
    sigma0: float
    U: float
    trial: int
    estimator: str
    angle_rad: float


def angle(d, target):
    """``arccos(<d, target> / (||d|| ||target||))``; ``pi / 2`` for a zero ``d``.

    Evaluated as ``2 atan2(||u - v||, ||u + v||)`` on the unit vectors, which
    stays accurate near 0 and pi.
    """
    nd = np.linalg.norm(d)
    if nd == 0:
        return np.pi / 2
    u = np.asarray(d, dtype=float) / nd
    v = np.asarray(target, dtype=float) / np.linalg.norm(target)
    return float(2.0 * np.arctan2(np.linalg.norm(u - v), np.linalg.norm(u + v)))


def _exp1_unit(unit):
    seed, cell, trial, sigma0, U, n, k = unit
    rng = np.random.default_rng([seed, cell, trial])
    obj = rcigar(n, with_offset=False)
    x0 = rng.uniform(-U, U, n)
    while not np.any(x0):
        x0 = rng.uniform(-U, U, n)
    z = rng.standard_normal((n, k))
    batch = assemble(x0, sigma0, z, obj.gradient, rng=rng)
    model = fit(batch)
    dirs = direction(model)
    target = -x0
    dirs = {
        "newton": dirs.newton,
        "neg_b": dirs.neg_b,
        "mean_grad": -batch.gradients.mean(axis=1),
        "random": rng.standard_normal(n),
    }
    return [AngleRecord(sigma0, U, trial, e, angle(dirs[e], target)) for e in ESTIMATORS]


def exp1_angles(seed=0, trials=100, sigmas=SCALE_GRID, scales=SCALE_GRID, n=20, k=30, jobs=1):
    """Angles between estimated search directions and ``-x0`` on the offset-free rcigar.

    For each ``(sigma0, U)`` cell, ``trials`` independent draws of
    ``x0 ~ Unif([-U, U]^n)`` and ``k`` samples give one fitted model each.
    Records are sorted by cell, trial and estimator.
    """
    units = []
    for si, s in enumerate(sigmas):
        for ui, u in enumerate(scales):
            cell = si * len(scales) + ui
            units.extend((seed, cell, t, float(s), float(u), n, k) for t in range(trials))
    records = [r for batch in _map(_exp1_unit, units, jobs) for r in batch]
    order = {e: i for i, e in enumerate(ESTIMATORS)}
    records.sort(key=lambda r: (r.sigma0, r.U, r.trial, order[r.estimator]))
    return records


def write_exp1(records, path):
    write_csv(
        path,
        ("sigma0", "U", "trial", "estimator", "angle_rad"),
        [(r.sigma0, r.U, r.trial, r.estimator, r.angle_rad) for r in records],
    )


def angles_by(records, sigma0, U, estimator):
    return np.array([r.angle_rad for r in records if r.sigma0 == sigma0 and r.U == U and r.estimator == estimator])


# Benchmarks: NLQN against restarted BFGS.

EXP2_FUNCTIONS = ("levy", "salomon", "rcigar")
EXP2_ALGORITHMS = ("nlqn", "rbfgs")


def _nlqn_trace(res):
    rows = [(res.evals0, res.f0)]
    rows.extend((r.evals, r.best_f) for r in res.trace)
    return rows


def _rbfgs_trace(res, f0):
    # f(x0) is the first charged evaluation of the first local solve.
    rows = [(1, f0)]
    rows.extend((ev, bf) for ev, bf, _ in res.trace if ev > 1)
    if rows[-1][0] < res.evals:
        rows.append((res.evals, res.best_f))
    return rows


def _exp2_unit(unit):
    seed, algo, func, run, n, budget = unit
    fi = EXP2_FUNCTIONS.index(func) if func in EXP2_FUNCTIONS else len(EXP2_FUNCTIONS)
    obj = make_objective(func, n)
    # The start point depends on (function, run) only, so both algorithms share it.
    x0 = np.random.default_rng([seed, fi, run]).uniform(-10.0, 10.0, n)
    rng = np.random.default_rng([seed, fi, run, EXP2_ALGORITHMS.index(algo)])
    if algo == "nlqn":
        res = nlqn_run(obj, x0, preset("benchmark", n, budget=budget), rng=rng)
        rows = _nlqn_trace(res)
    else:
        f0 = obj.value(x0)
        res = rbfgs_run(obj, RbfgsConfig(dim=n, budget=max(budget, 1), halfwidth=10.0), x0=x0, rng=rng)
        rows = _rbfgs_trace(res, f0)
    return [(algo, func, run, ev, bf) for ev, bf in rows]


@dataclass
class BenchmarkResult:
    rows: list
    final: dict = field(default_factory=dict)

    def medians(self):
        """``{(algo, func): median final best f}``."""
        return {key: float(np.median(v)) for key, v in sorted(self.final.items())}


def exp2_benchmark(seed=0, runs=20, budget=100_000, funcs=EXP2_FUNCTIONS, algos=EXP2_ALGORITHMS, n=50, jobs=1):
    """Best-so-far traces of NLQN and restarted BFGS under equal evaluation budgets."""
    if runs < 1:
        raise ValueError("runs must be >= 1")
    units = [(seed, a, f, r, n, budget) for a in algos for f in funcs for r in range(runs)]
    out = _map(_exp2_unit, units, jobs)
    result = BenchmarkResult([row for rows in out for row in rows])
    for rows in out:
        algo, func = rows[-1][0], rows[-1][1]
        result.final.setdefault((algo, func), []).append(rows[-1][4])
    result.rows.sort(key=lambda r: (r[0], r[1], r[2], r[3]))
    return result


def write_exp2(result, path):
    write_csv(path, ("algo", "func", "run", "eval_count", "best_f"), result.rows)


# SIAM problem 4.


def siam_success(best_f):
    return bool(best_f <= SIAM_MIN_VALUE + SIAM_TOLERANCE)


def _exp3_unit(unit):
    seed, run, budget = unit
    rng = np.random.default_rng([seed, run])
    x0 = rng.uniform(-100.0, 100.0, 2)
    res = nlqn_run(siam(), x0, preset("siam", budget=budget), rng=rng)
    rows = [(run, ev, bf, siam_success(bf) and ev > 0) for ev, bf in _nlqn_trace(res)]
    return rows


@dataclass
class SiamResult:
    rows: list
    success: list

    @property
    def success_fraction(self):
        return float(np.mean(self.success)) if self.success else 0.0


def exp3_siam(seed=0, runs=20, budget=30_000, jobs=1):
    """NLQN on SIAM problem 4 from ``Unif([-100, 100]^2)``.

    The ``success`` column is true once the best value is within ``1e-8`` of
    the known minimum.
    """
    if runs < 1:
        raise ValueError("runs must be >= 1")
    out = _map(_exp3_unit, [(seed, r, budget) for r in range(runs)], jobs)
    rows = [row for rs in out for row in rs]
    return SiamResult(rows, [rs[-1][3] for rs in out])


def write_exp3(result, path, summary_path=None):
    write_csv(path, ("run", "eval_count", "best_f", "success"), [(r, e, b, str(s).lower()) for r, e, b, s in result.rows])
    if summary_path is not None:
        write_csv(
            summary_path,
            ("runs", "successes", "success_fraction"),
            [(len(result.success), int(sum(result.success)), result.success_fraction)],
        )


# Residual of the quadratic part on a Rastrigin model.


def residual_exact(model, sigma):
    """``E ||grad g(x)||^2`` for ``x ~ N(0, sigma^2 kernel)``, in closed form.

    With ``u_j = <s_j, x> + psi_j`` one has
    ``sin u_j sin u_l = (cos(u_j - u_l) - cos(u_j + u_l)) / 2`` and
    ``E cos(<w, x> + c) = cos(c) exp(-sigma^2 w^T kernel w / 2)``.
    """
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    s, a, psi, K = model.frequencies, model.amplitudes, model.phases, model.kernel
    gram = s.T @ s
    kss = s.T @ K @ s
    dk = np.diag(kss)
    minus = dk[:, None] + dk[None, :] - 2.0 * kss
    plus = dk[:, None] + dk[None, :] + 2.0 * kss
    terms = np.cos(psi[:, None] - psi[None, :]) * np.exp(-0.5 * sigma**2 * minus) - np.cos(
        psi[:, None] + psi[None, :]
    ) * np.exp(-0.5 * sigma**2 * plus)
    return float(0.5 * np.sum(np.outer(a, a) * gram * terms))


def residual_monte_carlo(model, sigma, samples=1_000_000, rng=None, chunk=100_000):
    """Monte-Carlo estimate and its standard error of :func:`residual_exact`."""
    rng = np.random.default_rng(0) if rng is None else rng
    L = np.linalg.cholesky(model.kernel)
    total = total_sq = 0.0
    done = 0
    while done < samples:
        m = min(chunk, samples - done)
        x = sigma * rng.standard_normal((m, model.dim)) @ L.T
        v = np.sum(model.disturbance_gradient(x) ** 2, axis=1)
        total += float(v.sum())
        total_sq += float(v @ v)
        done += m
    mean = total / samples
    var = max(total_sq / samples - mean**2, 0.0) * samples / max(samples - 1, 1)
    return mean, float(np.sqrt(var / samples))


def residual_bound(model, sigma):
    """``2 ||a||^2 ||S||_F^2 (1 + (m - 1) exp(-sigma^2 eps^2 / 2))``."""
    a2 = float(model.amplitudes @ model.amplitudes)
    s2 = float(np.sum(model.frequencies**2))
    tail = 0.0 if model.m == 1 else (model.m - 1) * np.exp(-0.5 * sigma**2 * model.separation**2)
    return 2.0 * a2 * s2 * (1.0 + tail)


def random_rastrigin_model(rng, n, m):
    """A random model with convex quadratic part and a random SPD kernel."""
    M = rng.standard_normal((n, n))
    B = rng.standard_normal((n, n))
    return RastriginModel(
        r_hessian_half=M.T @ M + np.eye(n),
        amplitudes=rng.normal(0.0, 2.0, m),
        frequencies=rng.uniform(-3.0, 3.0, (n, m)),
        phases=rng.uniform(0.0, 2.0 * np.pi, m),
        kernel=B.T @ B / n + 0.5 * np.eye(n),
    )


@dataclass(frozen=True)
class BoundCheckRecord:
    sigma: float
    mc: float
    mc_stderr: float
    exact: float
    bound: float

    @property
    def holds(self):
        return self.exact <= self.bound

    @property
    def mc_agrees(self):
        return abs(self.mc - self.exact) <= 5.0 * self.mc_stderr


BOUND_SIGMAS = (0.1, 0.5, 1.0, 2.0, 5.0, 10.0)


def bound_check(model, sigmas=BOUND_SIGMAS, samples=1_000_000, rng=None):
    """Exact residual, its Monte-Carlo estimate and the bound on a grid of ``sigma``."""
    rng = np.random.default_rng(0) if rng is None else rng
    out = []
    for s in sigmas:
        mc, se = residual_monte_carlo(model, s, samples, rng)
        out.append(BoundCheckRecord(float(s), mc, se, residual_exact(model, s), residual_bound(model, s)))
    return out


def bound_suite(seed=0, models=20, max_dim=5, max_terms=8, sigmas=BOUND_SIGMAS, samples=1_000_000):
    """:func:`bound_check` on ``models`` random models; returns ``[(index, model, records)]``."""
    out = []
    for i in range(models):
        rng = np.random.default_rng([seed, i])
        n = int(rng.integers(1, max_dim + 1))
        m = int(rng.integers(1, max_terms + 1))
        model = random_rastrigin_model(rng, n, m)
        out.append((i, model, bound_check(model, sigmas, samples, rng)))
    return out


def write_bound(suite, path):
    rows = [(i, r.sigma, r.mc, r.mc_stderr, r.exact, r.bound) for i, _, recs in suite for r in recs]
    write_csv(path, ("model", "sigma", "mc", "mc_stderr", "exact", "bound"), rows)


# Recovery of the quadratic part at large sigma.


@dataclass
class ConsistencyReport:
    sigmas: tuple
    errors: dict

    @property
    def medians(self):
        return {s: float(np.median(self.errors[s])) for s in self.sigmas}

    @property
    def ordered(self):
        """Median error at the largest sigma is strictly below that at the smallest."""
        med = self.medians
        return med[max(self.sigmas)] < med[min(self.sigmas)]


def _consistency_unit(unit):
    seed, si, sigma, rep, n, k, amplitude, frequency = unit
    rng = np.random.default_rng([seed, si, rep])
    model = rcigar_model(n, amplitude=amplitude, frequency=frequency)
    h_true = model.quadratic_hessian()

    def grad(x):
        return h_true @ x + model.disturbance_gradient(x)

    center = rng.uniform(-10.0, 10.0, n)
    z = rng.standard_normal((n, k))
    fitted = fit(assemble(center, sigma, z, grad, rng=rng))
    return float(np.linalg.norm(fitted.hessian - h_true) / np.linalg.norm(h_true))


def consistency_check(seed=0, sigmas=(1e-2, 1.0, 1e3), seeds=20, n=10, k=500, amplitude=10.0, frequency=20.0 * np.pi, jobs=1):
    """Relative Frobenius error of the fitted model Hessian against the quadratic part.

    The objective is the offset-free rcigar written as ``r + g``; each fit uses
    ``k`` samples around a center drawn from ``Unif([-10, 10]^n)``.
    """
    units = [(seed, si, float(s), rep, n, k, amplitude, frequency) for si, s in enumerate(sigmas) for rep in range(seeds)]
    errs = _map(_consistency_unit, units, jobs)
    errors = {float(s): [] for s in sigmas}
    for u, e in zip(units, errs):
        errors[u[2]].append(e)
    return ConsistencyReport(tuple(float(s) for s in sigmas), errors)


def write_consistency(report, path):
    rows = [(s, i, e) for s in report.sigmas for i, e in enumerate(report.errors[s])]
    write_csv(path, ("sigma", "seed", "rel_error"), rows)
