"""Quasi-Newton baseline for the circuit angles.

Minimizes the negative expected cut over the flat angle vector with a dense
BFGS inverse-Hessian update, Armijo backtracking, and central-difference
gradients. Multi-restart search draws starting points from the canonical
angle box and shares one global evaluation budget.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BudgetError
from .problems import MaxCutProblem
from .simulator import expect_cost, run_schedule

ARMIJO_C1 = 1e-4
MIN_STEP = 1e-12


class _BudgetExceeded(Exception):
    pass


@dataclass
class BfgsResult:
    x: np.ndarray
    fun: float
    grad_norm: float
    iterations: int
    n_evals: int
    converged: bool


@dataclass
class BaselineResult:
    schedule: np.ndarray
    value: float
    n_evals: int
    restarts_run: int
    converged: bool
    budget_exhausted: bool


def _fd_gradient(fun, x: np.ndarray, h: float) -> np.ndarray:
    g = np.zeros_like(x)
    for i in range(x.size):
        step = np.zeros_like(x)
        step[i] = h
        g[i] = (fun(x + step) - fun(x - step)) / (2.0 * h)
    return g


def minimize_bfgs(fun, x0, gtol=1e-6, max_iterations=200, fd_step=1e-5,
                  max_evals=None) -> BfgsResult:
    """Minimize fun from x0; derivatives come from central differences.

    Every objective call counts against max_evals, finite-difference probes
    included. On budget exhaustion the best point seen so far is returned
    with converged=False.
    """
    count = [0]

    def counted(x):
        if max_evals is not None and count[0] >= max_evals:
            raise _BudgetExceeded
        count[0] += 1
        return float(fun(x))

    x = np.asarray(x0, dtype=np.float64).copy()
    dim = x.size
    eye = np.eye(dim)
    converged = False
    iterations = 0
    f = np.inf
    g = np.full(dim, np.nan)
    try:
        f = counted(x)
        g = _fd_gradient(counted, x, fd_step)
        h_inv = eye.copy()
        first_update = True
        for iterations in range(1, max_iterations + 1):
            if float(np.linalg.norm(g)) < gtol:
                converged = True
                iterations -= 1
                break
            d = -h_inv @ g
            slope = float(d @ g)
            if slope >= 0.0:
                # fall back to steepest descent if the model lost descent
                h_inv = eye.copy()
                first_update = True
                d = -g
                slope = -float(g @ g)

            alpha = 1.0
            f_new = None
            while alpha >= MIN_STEP:
                trial = counted(x + alpha * d)
                if trial <= f + ARMIJO_C1 * alpha * slope:
                    f_new = trial
                    break
                alpha *= 0.5
            if f_new is None:
                break  # no acceptable step along d; give up here

            x_new = x + alpha * d
            g_new = _fd_gradient(counted, x_new, fd_step)
            s = x_new - x
            y = g_new - g
            sy = float(s @ y)
            if sy > 1e-10 * np.linalg.norm(s) * np.linalg.norm(y):
                if first_update:
                    # scale the initial inverse Hessian to the problem
                    h_inv = (sy / float(y @ y)) * eye
                    first_update = False
                rho = 1.0 / sy
                left = eye - rho * np.outer(s, y)
                h_inv = left @ h_inv @ left.T + rho * np.outer(s, s)
            x, f, g = x_new, f_new, g_new
        if not converged and float(np.linalg.norm(g)) < gtol:
            converged = True
    except _BudgetExceeded:
        pass
    # norm of the nan placeholder is nan, which is the honest answer when
    # the budget ran out before the first gradient was complete
    return BfgsResult(x=x, fun=f, grad_norm=float(np.linalg.norm(g)),
                      iterations=iterations, n_evals=count[0], converged=converged)


def qaoa_objective(problem: MaxCutProblem, p: int):
    """Negative expected cut as a function of the flat angle vector (2p,)."""

    def objective(x: np.ndarray) -> float:
        schedule = np.asarray(x, dtype=np.float64).reshape(p, 2)
        state = run_schedule(problem, schedule)
        return -expect_cost(state, problem)

    return objective


def wrap_angles(schedule: np.ndarray) -> np.ndarray:
    """Map angles into [0, 2*pi); the circuit is exactly periodic there."""
    return np.mod(schedule, 2.0 * np.pi)


def optimize_qaoa(problem: MaxCutProblem, p: int, restarts: int = 10, seed: int = 0,
                  gtol: float = 1e-5, max_iterations: int = 100,
                  fd_step: float = 1e-5, max_evals: int | None = None) -> BaselineResult:
    """Best expected cut over multiple BFGS restarts.

    Starting points are drawn uniformly from gamma in [0, pi), beta in
    [0, 2*pi). max_evals bounds objective evaluations across all restarts
    together; remaining restarts are skipped once it runs out.
    """
    if p < 0:
        raise ValueError("depth must be non-negative")
    if p == 0:
        # the bare superposition cuts half the edges in expectation
        return BaselineResult(schedule=np.zeros((0, 2)), value=problem.m / 2.0,
                              n_evals=0, restarts_run=0, converged=True,
                              budget_exhausted=False)
    if restarts < 1:
        raise ValueError("need at least one restart")

    rng = np.random.default_rng(seed)
    objective = qaoa_objective(problem, p)
    best: BfgsResult | None = None
    total_evals = 0
    restarts_run = 0
    budget_exhausted = False
    for _ in range(restarts):
        remaining = None if max_evals is None else max_evals - total_evals
        if remaining is not None and remaining <= 0:
            budget_exhausted = True
            break
        x0 = np.empty(2 * p)
        x0[0::2] = rng.uniform(0.0, np.pi, size=p)
        x0[1::2] = rng.uniform(0.0, 2.0 * np.pi, size=p)
        result = minimize_bfgs(objective, x0, gtol=gtol,
                               max_iterations=max_iterations,
                               fd_step=fd_step, max_evals=remaining)
        total_evals += result.n_evals
        restarts_run += 1
        if best is None or result.fun < best.fun:
            best = result
    if best is None:
        raise BudgetError("evaluation budget too small for a single restart")
    if max_evals is not None and total_evals >= max_evals:
        budget_exhausted = True
    return BaselineResult(
        schedule=wrap_angles(best.x.reshape(p, 2)),
        value=-best.fun,
        n_evals=total_evals,
        restarts_run=restarts_run,
        converged=best.converged,
        budget_exhausted=budget_exhausted,
    )


def relative_error(value: float, reference: float) -> float:
    """Shortfall of value against a positive reference, as a fraction."""
    if reference <= 0.0:
        raise ValueError("reference must be positive")
    return (reference - value) / reference
