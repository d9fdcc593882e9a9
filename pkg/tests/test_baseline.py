"""Quasi-Newton minimizer and the multi-restart angle search."""

import numpy as np
import pytest

from qaoarl.baseline import (BaselineResult, minimize_bfgs, optimize_qaoa,
                             qaoa_objective, relative_error, wrap_angles)
from qaoarl.environment import EnvConfig, episode_return
from qaoarl.errors import BudgetError
from qaoarl.problems import cycle, triangle


def rosenbrock(x):
    return (1.0 - x[0]) ** 2 + 100.0 * (x[1] - x[0] ** 2) ** 2


def quadratic(x):
    return float((x - np.array([1.0, -2.0, 3.0])) @ (x - np.array([1.0, -2.0, 3.0])))


class TestMinimizeBfgs:
    def test_quadratic_bowl(self):
        res = minimize_bfgs(quadratic, np.zeros(3), gtol=1e-8)
        assert res.converged
        np.testing.assert_allclose(res.x, [1.0, -2.0, 3.0], atol=1e-6)
        assert res.grad_norm < 1e-8
        assert res.iterations < 50

    @pytest.mark.parametrize("x0", [(-1.2, 1.0), (0.0, 0.0), (2.0, 2.0)])
    def test_rosenbrock_from_classic_starts(self, x0):
        res = minimize_bfgs(rosenbrock, np.array(x0), gtol=1e-6,
                            max_iterations=200)
        assert res.converged
        assert res.grad_norm < 1e-6
        np.testing.assert_allclose(res.x, [1.0, 1.0], atol=1e-5)

    def test_already_converged_start(self):
        res = minimize_bfgs(quadratic, np.array([1.0, -2.0, 3.0]), gtol=1e-6)
        assert res.converged
        assert res.iterations == 0

    def test_eval_budget_respected(self):
        budget = 15
        res = minimize_bfgs(rosenbrock, np.array([-1.2, 1.0]), max_evals=budget)
        assert res.n_evals <= budget
        assert not res.converged
        assert np.isfinite(res.fun)

    def test_budget_smaller_than_one_gradient(self):
        res = minimize_bfgs(rosenbrock, np.array([-1.2, 1.0]), max_evals=2)
        assert res.n_evals == 2
        assert not res.converged
        assert np.isnan(res.grad_norm)

    def test_iteration_cap(self):
        res = minimize_bfgs(rosenbrock, np.array([-1.2, 1.0]), gtol=1e-14,
                            max_iterations=3)
        assert res.iterations <= 3
        assert not res.converged


class TestQaoaObjective:
    def test_matches_episode_return(self):
        prob = cycle(6)
        rng = np.random.default_rng(0)
        x = np.empty(4)
        x[0::2] = rng.uniform(0, np.pi, 2)
        x[1::2] = rng.uniform(0, 2 * np.pi, 2)
        cfg = EnvConfig(problem=prob, p=2)
        assert -qaoa_objective(prob, 2)(x) == pytest.approx(
            episode_return(cfg, x.reshape(2, 2)), abs=1e-12)

    def test_periodicity_under_wrapping(self):
        prob = triangle()
        obj = qaoa_objective(prob, 2)
        x = np.array([0.3, 1.1, 2.0, 0.7])
        shifted = x + 2.0 * np.pi * np.array([1, -2, 3, 1])
        assert obj(x) == pytest.approx(obj(shifted), abs=1e-12)
        np.testing.assert_allclose(wrap_angles(shifted.reshape(2, 2)),
                                   x.reshape(2, 2), atol=1e-12)


class TestOptimizeQaoa:
    def test_triangle_single_round(self):
        res = optimize_qaoa(triangle(), p=1, restarts=8, seed=0)
        assert isinstance(res, BaselineResult)
        # the single-round optimum on the triangle sits just below 2
        assert res.value == pytest.approx(1.9998, abs=2e-3)
        assert res.schedule.shape == (1, 2)
        assert (res.schedule >= 0.0).all() and (res.schedule < 2 * np.pi).all()
        assert res.restarts_run == 8
        assert not res.budget_exhausted

    def test_depth_zero_is_analytic(self):
        res = optimize_qaoa(triangle(), p=0)
        assert res.value == 1.5
        assert res.schedule.shape == (0, 2)
        assert res.n_evals == 0

    def test_deterministic_in_seed(self):
        a = optimize_qaoa(cycle(4), p=1, restarts=3, seed=5)
        b = optimize_qaoa(cycle(4), p=1, restarts=3, seed=5)
        assert a.value == b.value
        np.testing.assert_array_equal(a.schedule, b.schedule)

    def test_budget_partial_restarts(self):
        full = optimize_qaoa(cycle(4), p=1, restarts=3, seed=0)
        capped = optimize_qaoa(cycle(4), p=1, restarts=3, seed=0,
                               max_evals=full.n_evals // 2)
        assert capped.budget_exhausted
        assert capped.n_evals <= full.n_evals // 2
        assert capped.restarts_run <= full.restarts_run

    def test_budget_too_small_for_anything(self):
        with pytest.raises(BudgetError):
            optimize_qaoa(cycle(4), p=1, restarts=2, max_evals=0)

    def test_bad_arguments(self):
        with pytest.raises(ValueError):
            optimize_qaoa(triangle(), p=-1)
        with pytest.raises(ValueError):
            optimize_qaoa(triangle(), p=1, restarts=0)


class TestRelativeError:
    def test_basic(self):
        assert relative_error(9.5, 10.0) == pytest.approx(0.05)
        assert relative_error(10.0, 10.0) == 0.0

    def test_reference_must_be_positive(self):
        with pytest.raises(ValueError):
            relative_error(1.0, 0.0)
