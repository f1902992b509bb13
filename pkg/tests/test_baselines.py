import numpy as np
import pytest
from scipy.stats import chisquare

from nlqn.baselines import (
    LinesearchFailure,
    RbfgsConfig,
    bfgs_local,
    draw_restart,
    rbfgs_run,
    wolfe_linesearch,
    write_rbfgs_csv,
)
from nlqn.objectives import Objective, make_objective
from nlqn.optimizer import CountedObjective, EvalCounter


def quadratic(n, seed=0):
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    h = q @ np.diag(np.linspace(1, 10, n)) @ q.T
    h = 0.5 * (h + h.T)
    return Objective("q", n, lambda x: float(0.5 * x @ h @ x), lambda x: h @ x), h


def test_config_validation():
    with pytest.raises(ValueError):
        RbfgsConfig(dim=2, budget=0)
    with pytest.raises(ValueError):
        RbfgsConfig(dim=2, budget=10, c1=0.95)
    np.testing.assert_array_equal(RbfgsConfig(dim=3, budget=10).center, np.zeros(3))


def test_wolfe_conditions_hold():
    obj, _ = quadratic(4)
    x = np.ones(4)
    fx, gx = obj(x), obj.gradient(x)
    p = -gx
    alpha, xn, fn, gn = wolfe_linesearch(obj.value, obj.gradient, x, fx, gx, p)
    assert fn <= fx + 1e-4 * alpha * gx @ p
    assert abs(gn @ p) <= 0.9 * abs(gx @ p)


def test_wolfe_rejects_ascent():
    obj, _ = quadratic(2)
    x = np.ones(2)
    with pytest.raises(LinesearchFailure):
        wolfe_linesearch(obj.value, obj.gradient, x, obj(x), obj.gradient(x), obj.gradient(x))


def test_bfgs_quadratic_within_60n():
    n = 10
    obj, _ = quadratic(n)
    counter = EvalCounter()
    res = bfgs_local(CountedObjective(obj, counter), np.random.default_rng(1).uniform(-10, 10, n))
    assert res.converged
    assert np.linalg.norm(obj.gradient(res.x)) < 1e-4
    assert counter.total <= 60 * n


def test_bfgs_inverse_hessian_spd():
    obj = make_objective("levy", 6)
    res = bfgs_local(CountedObjective(obj, EvalCounter()), np.full(6, 3.3))
    h = res.inverse_hessian
    np.testing.assert_allclose(h, h.T, atol=1e-12)
    assert np.linalg.eigvalsh(h).min() > 0


def test_bfgs_stationary_start():
    obj, _ = quadratic(3)
    counter = EvalCounter()
    res = bfgs_local(CountedObjective(obj, counter), np.zeros(3))
    assert res.converged and res.iterations == 0
    assert counter.gradient == 1


def test_bfgs_budget_truncation():
    obj, _ = quadratic(5)
    counter = EvalCounter(limit=4)
    res = bfgs_local(CountedObjective(obj, counter, strict=True), np.ones(5))
    assert not res.converged and counter.total == 4


def test_rcigar_local_minima_are_bad():
    obj = make_objective("rcigar", 50)
    finals = []
    for seed in range(20):
        x0 = np.random.default_rng(seed).uniform(-10, 10, 50)
        finals.append(bfgs_local(CountedObjective(obj, EvalCounter()), x0).f)
    assert np.mean(np.array(finals) > 0) > 0.5


def test_restart_draws_uniform():
    cfg = RbfgsConfig(dim=3, budget=1, center=np.array([1.0, -2.0, 0.0]), halfwidth=5.0)
    rng = np.random.default_rng(0)
    pts = np.array([draw_restart(rng, cfg) for _ in range(10_000)])
    assert np.all(np.abs(pts - cfg.center) <= 5.0)
    for j in range(3):
        counts, _ = np.histogram(pts[:, j], bins=20, range=(cfg.center[j] - 5, cfg.center[j] + 5))
        assert chisquare(counts).pvalue > 0.01


def test_rbfgs_spends_budget_and_is_deterministic(tmp_path):
    obj = make_objective("rcigar", 5)
    cfg = RbfgsConfig(dim=5, budget=3000, seed=2)
    a, b = rbfgs_run(obj, cfg), rbfgs_run(obj, cfg)
    assert a.evals == 3000 and a.restarts >= 1
    assert a.best_f == b.best_f and a.trace == b.trace
    assert obj(a.best_x) == a.best_f
    evs = [t[0] for t in a.trace]
    bests = [t[1] for t in a.trace]
    assert evs == sorted(evs) and np.all(np.diff(bests) < 0)
    write_rbfgs_csv(a, tmp_path / "a.csv")
    write_rbfgs_csv(b, tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert (tmp_path / "a.csv").read_text().splitlines()[0] == "eval_count,best_f,restart_index"


def test_rbfgs_small_budget_returns_truncated_best():
    obj, _ = quadratic(4)
    res = rbfgs_run(obj, RbfgsConfig(dim=4, budget=5), x0=np.ones(4))
    assert res.evals == 5 and res.best_f <= obj(np.ones(4))


def test_rbfgs_salomon_reaches_low_values():
    obj = make_objective("salomon", 10)
    res = rbfgs_run(obj, RbfgsConfig(dim=10, budget=5000, seed=1))
    assert res.best_f < 1.0
