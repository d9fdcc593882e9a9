"""Episodic environment over the statevector simulator.

An episode starts from the uniform superposition and runs a fixed number of
steps p. Each step takes a raw action in [-1, 1]^2, maps it to a (gamma, beta)
angle pair, applies one cost layer and one mixer layer, and returns the
observation vector. The reward is zero on every non-final step; the final step
pays reward_scale times the cut expectation of the prepared state.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import simulator
from .problems import MaxCutProblem

GAMMA_SPAN = np.pi
BETA_SPAN = 2.0 * np.pi


@dataclass(frozen=True)
class EnvConfig:
    problem: MaxCutProblem
    p: int
    include_edge_terms: bool = True
    include_step_index: bool = True
    reward_scale: float = 1.0
    discount: float = 1.0

    def __post_init__(self):
        if self.p < 1:
            raise ValueError(f"episode length must be >= 1, got {self.p}")
        if self.reward_scale <= 0:
            raise ValueError(f"reward_scale must be positive, got {self.reward_scale}")
        if not 0.0 <= self.discount <= 1.0:
            raise ValueError(f"discount must lie in [0, 1], got {self.discount}")

    @property
    def observation_dim(self) -> int:
        n = self.problem.n_vertices
        dim = 2 * n
        if self.include_edge_terms:
            dim += self.problem.m
        if self.include_step_index:
            dim += 1
        return dim


class StepResult(NamedTuple):
    observation: np.ndarray
    reward: float
    done: bool


def action_to_angles(raw) -> tuple[float, float]:
    """Clip a raw action to [-1, 1]^2 and map affinely onto the angle box."""
    a = np.clip(np.asarray(raw, dtype=np.float64).reshape(2), -1.0, 1.0)
    gamma = GAMMA_SPAN * (a[0] + 1.0) / 2.0
    beta = BETA_SPAN * (a[1] + 1.0) / 2.0
    return float(gamma), float(beta)


class QaoaEnv:
    """Stateful single-episode environment; not safe for concurrent use."""

    def __init__(self, config: EnvConfig):
        self.config = config
        self._psi = None
        self._t = 0

    @property
    def observation_dim(self) -> int:
        return self.config.observation_dim

    @property
    def p(self) -> int:
        return self.config.p

    def _observe(self) -> np.ndarray:
        cfg = self.config
        xs, zs, edge_vals = simulator.all_observables(
            self._psi, cfg.problem, include_edges=cfg.include_edge_terms
        )
        parts = [xs, zs]
        if cfg.include_edge_terms:
            parts.append(edge_vals)
        if cfg.include_step_index:
            parts.append(np.array([self._t / cfg.p]))
        return np.concatenate(parts)

    def reset(self) -> np.ndarray:
        self._psi = simulator.uniform_state(self.config.problem.n_vertices)
        self._t = 0
        return self._observe()

    def step(self, action_raw) -> StepResult:
        if self._psi is None:
            raise RuntimeError("step() before reset()")
        if self._t >= self.config.p:
            raise RuntimeError(f"episode is finished after {self.config.p} steps")
        gamma, beta = action_to_angles(action_raw)
        simulator.apply_cost_layer(self._psi, self.config.problem, gamma, inplace=True)
        simulator.apply_mixer_layer(self._psi, beta, inplace=True)
        self._t += 1
        done = self._t == self.config.p
        reward = 0.0
        if done:
            reward = self.config.reward_scale * simulator.expect_cost(
                self._psi, self.config.problem
            )
        return StepResult(self._observe(), reward, done)

    def state(self) -> np.ndarray:
        """Copy of the current statevector (diagnostics only)."""
        if self._psi is None:
            raise RuntimeError("no state before reset()")
        return self._psi.copy()


def episode_return(config: EnvConfig, schedule) -> float:
    """Discounted return of a full episode driven by explicit angle pairs.

    With terminal-only rewards the return from the first step is
    discount^(p-1) times the terminal reward.
    """
    angles = np.asarray(schedule, dtype=np.float64).reshape(-1, 2)
    if angles.shape[0] != config.p:
        raise ValueError(f"schedule has {angles.shape[0]} steps, episode needs {config.p}")
    psi = simulator.run_schedule(config.problem, angles)
    terminal = config.reward_scale * simulator.expect_cost(psi, config.problem)
    return config.discount ** (config.p - 1) * terminal
