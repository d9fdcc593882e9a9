"""Continuous-action Q-learning on the circuit environment.

One agent step picks the two angles of the next circuit layer. Exploration
adds Ornstein-Uhlenbeck noise to the greedy action; learning fits the
quadratic-advantage Q head by one-step bootstrapping against a Polyak-averaged
target copy. Training across increasing circuit depths reuses the same
network, so an agent tuned at shallow depth warm-starts the deeper run.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .environment import EnvConfig, QaoaEnv, action_to_angles
from .errors import CheckpointError, ConfigError
from .neural import NafHead, make_optimizer, save_checkpoint, load_checkpoint, soft_update
from .problems import MaxCutProblem


class OuNoise:
    """Ornstein-Uhlenbeck process with unit time step.

    x <- x + theta * (mu - x) + sigma * N(0, I), reset to mu per episode.
    """

    def __init__(self, dim: int, rng: np.random.Generator,
                 theta: float = 0.01, mu: float = 0.0, sigma: float = 0.01):
        self.dim = int(dim)
        self.theta = float(theta)
        self.mu = float(mu)
        self.sigma = float(sigma)
        self.rng = rng
        self.x = np.full(self.dim, self.mu)

    def reset(self) -> None:
        self.x = np.full(self.dim, self.mu)

    def sample(self) -> np.ndarray:
        self.x = (
            self.x
            + self.theta * (self.mu - self.x)
            + self.sigma * self.rng.standard_normal(self.dim)
        )
        return self.x.copy()


class Batch(NamedTuple):
    obs: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_obs: np.ndarray
    dones: np.ndarray


class ReplayBuffer:
    """Fixed-capacity ring buffer; oldest transitions are overwritten first."""

    def __init__(self, capacity: int, obs_dim: int, action_dim: int = 2):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = int(capacity)
        self.obs = np.zeros((capacity, obs_dim))
        self.actions = np.zeros((capacity, action_dim))
        self.rewards = np.zeros(capacity)
        self.next_obs = np.zeros((capacity, obs_dim))
        self.dones = np.zeros(capacity)
        self.idx = 0
        self.size = 0

    def __len__(self) -> int:
        return self.size

    def push(self, obs, action, reward, next_obs, done) -> None:
        i = self.idx
        self.obs[i] = obs
        self.actions[i] = action
        self.rewards[i] = reward
        self.next_obs[i] = next_obs
        self.dones[i] = float(done)
        self.idx = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, batch_size: int, rng: np.random.Generator) -> Batch:
        if self.size == 0:
            raise ValueError("cannot sample from an empty buffer")
        idx = rng.integers(0, self.size, size=batch_size)
        return Batch(
            self.obs[idx].copy(),
            self.actions[idx].copy(),
            self.rewards[idx].copy(),
            self.next_obs[idx].copy(),
            self.dones[idx].copy(),
        )


@dataclass(frozen=True)
class NetConfig:
    hidden: tuple = (64, 64, 64)
    activation: str = "relu"


@dataclass(frozen=True)
class TrainConfig:
    episodes: int
    batch_size: int = 64
    buffer_capacity: int = 20000
    warmup_episodes: int = 50
    tau: float = 0.01
    lr: float = 1e-4
    optimizer: str = "adam"
    updates_per_step: int = 1
    eval_every: int = 10
    seed: int = 0
    noise_theta: float = 0.01
    noise_sigma: float = 0.01
    keep_best: bool = True
    stop_at_reward: float | None = None
    revert_margin: float | None = None
    revert_patience: int = 2
    checkpoint_every: int = 0
    checkpoint_dir: str | None = None

    def __post_init__(self):
        if self.episodes < 0:
            raise ConfigError("episodes must be non-negative")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be positive")
        if self.buffer_capacity < self.batch_size:
            raise ConfigError("buffer_capacity must be at least batch_size")
        if self.warmup_episodes < 0:
            raise ConfigError("warmup_episodes must be non-negative")
        if not 0.0 < self.tau <= 1.0:
            raise ConfigError("tau must lie in (0, 1]")
        if self.lr <= 0.0:
            raise ConfigError("lr must be positive")
        if self.optimizer not in ("adam", "sgd"):
            raise ConfigError(f"unknown optimizer {self.optimizer!r}")
        if self.updates_per_step < 0:
            raise ConfigError("updates_per_step must be non-negative")
        if self.eval_every < 1:
            raise ConfigError("eval_every must be positive")
        if self.noise_sigma < 0.0 or not 0.0 <= self.noise_theta <= 1.0:
            raise ConfigError("noise parameters out of range")
        if self.revert_margin is not None and self.revert_margin <= 0.0:
            raise ConfigError("revert_margin must be positive when set")
        if self.revert_patience < 1:
            raise ConfigError("revert_patience must be positive")
        if self.revert_margin is not None and not self.keep_best:
            raise ConfigError("reverting to the best policy requires keep_best")
        if self.checkpoint_every < 0:
            raise ConfigError("checkpoint_every must be non-negative")
        if self.checkpoint_every > 0 and not self.checkpoint_dir:
            raise ConfigError("checkpoint_every needs a checkpoint_dir")


class NafAgent:
    """Online/target Q heads plus optimizer state, tied to one graph."""

    ACTION_DIM = 2

    def __init__(self, env_config: EnvConfig, net_config: NetConfig,
                 lr: float, optimizer: str, rng: np.random.Generator):
        prob = env_config.problem
        self.n_vertices = prob.n_vertices
        self.edges = prob.edges
        self.include_edge_terms = env_config.include_edge_terms
        self.include_step_index = env_config.include_step_index
        self.obs_dim = env_config.observation_dim
        self.net_config = net_config
        self.lr = float(lr)
        self.optimizer_kind = optimizer
        self.online = NafHead(self.obs_dim, net_config.hidden, net_config.activation, rng)
        self.target = self.online.clone()
        self.opt = make_optimizer(optimizer, self.online.parameters(), lr)
        self.trained_p = 0
        self.episodes_trained = 0

    def act(self, obs: np.ndarray) -> np.ndarray:
        """Greedy raw action; already inside (-1, 1) by construction."""
        return self.online.greedy_action(obs)

    def select_action(self, obs: np.ndarray, noise: OuNoise | None = None) -> np.ndarray:
        raw = self.act(obs)
        if noise is not None:
            raw = raw + noise.sample()
        return np.clip(raw, -1.0, 1.0)

    def update(self, batch: Batch, discount: float, tau: float) -> float:
        """One fitted-Q step: bootstrap targets, gradient step, Polyak update."""
        v_next = self.target.value(batch.next_obs)
        targets = batch.rewards + discount * (1.0 - batch.dones) * v_next
        loss, grads = self.online.loss_and_grads(batch.obs, batch.actions, targets)
        self.opt.step(self.online.parameters(), grads)
        soft_update(self.target.parameters(), self.online.parameters(), tau)
        return loss

    def snapshot(self) -> dict:
        """Copies of everything a later restore needs (nets and optimizer)."""
        state = {
            "online": [p.copy() for p in self.online.parameters()],
            "target": [p.copy() for p in self.target.parameters()],
            "opt_t": self.opt.t,
        }
        if hasattr(self.opt, "m"):
            state["opt_m"] = [m.copy() for m in self.opt.m]
            state["opt_v"] = [v.copy() for v in self.opt.v]
        return state

    def restore(self, state: dict) -> None:
        for p, saved in zip(self.online.parameters(), state["online"]):
            p[...] = saved
        for p, saved in zip(self.target.parameters(), state["target"]):
            p[...] = saved
        self.opt.t = state["opt_t"]
        if "opt_m" in state and hasattr(self.opt, "m"):
            for m, saved in zip(self.opt.m, state["opt_m"]):
                m[...] = saved
            for v, saved in zip(self.opt.v, state["opt_v"]):
                v[...] = saved


@dataclass
class TrainingTrace:
    """Per-episode log of one training run at a fixed depth."""

    p: np.ndarray
    episode: np.ndarray
    reward: np.ndarray
    loss: np.ndarray
    greedy: np.ndarray
    best_greedy: np.ndarray
    wall_ms: np.ndarray
    best_reward: float = float("-inf")
    best_schedule: np.ndarray | None = None

    COLUMNS = ("p", "episode", "reward", "loss", "greedy", "best_greedy")

    def column(self, name: str) -> np.ndarray:
        return getattr(self, name)

    @staticmethod
    def concatenate(traces: "list[TrainingTrace]") -> "TrainingTrace":
        best = max(traces, key=lambda t: t.best_reward)
        return TrainingTrace(
            p=np.concatenate([t.p for t in traces]),
            episode=np.concatenate([t.episode for t in traces]),
            reward=np.concatenate([t.reward for t in traces]),
            loss=np.concatenate([t.loss for t in traces]),
            greedy=np.concatenate([t.greedy for t in traces]),
            best_greedy=np.concatenate([t.best_greedy for t in traces]),
            wall_ms=np.concatenate([t.wall_ms for t in traces]),
            best_reward=best.best_reward,
            best_schedule=None if best.best_schedule is None else best.best_schedule.copy(),
        )


def greedy_episode(agent: NafAgent, env: QaoaEnv):
    """Roll one noise-free episode; returns (terminal reward, angle schedule)."""
    obs = env.reset()
    schedule = np.zeros((env.config.p, 2))
    reward = 0.0
    for step in range(env.config.p):
        raw = agent.select_action(obs)
        schedule[step] = action_to_angles(raw)
        res = env.step(raw)
        obs = res.observation
        reward = res.reward
    return reward, schedule


def _check_compatible(agent: NafAgent, env_config: EnvConfig) -> None:
    prob = env_config.problem
    if agent.n_vertices != prob.n_vertices or agent.edges != prob.edges:
        raise ConfigError("agent was trained on a different graph")
    if (agent.include_edge_terms != env_config.include_edge_terms
            or agent.include_step_index != env_config.include_step_index):
        raise ConfigError("agent and environment disagree on observation layout")
    if agent.obs_dim != env_config.observation_dim:
        raise ConfigError("observation size mismatch")


def run_training(env_config: EnvConfig, train_config: TrainConfig,
                 net_config: NetConfig | None = None,
                 agent: NafAgent | None = None):
    """Train on one problem at fixed depth; returns (trace, agent).

    A fresh agent is built unless one is passed in, in which case training
    continues on its weights and optimizer moments (the replay buffer always
    starts empty for the run).  With ``keep_best`` set (the default) the
    returned agent carries the parameters from the best greedy evaluation
    of the run, not the final episode's.
    """
    init_ss, run_ss = np.random.SeedSequence(train_config.seed).spawn(2)
    if agent is None:
        agent = NafAgent(env_config, net_config or NetConfig(),
                         train_config.lr, train_config.optimizer,
                         np.random.default_rng(init_ss))
    else:
        _check_compatible(agent, env_config)
    rng = np.random.default_rng(run_ss)

    env = QaoaEnv(env_config)
    p = env_config.p
    buffer = ReplayBuffer(train_config.buffer_capacity, agent.obs_dim, agent.ACTION_DIM)
    noise = OuNoise(agent.ACTION_DIM, rng,
                    theta=train_config.noise_theta, sigma=train_config.noise_sigma)

    n = train_config.episodes
    trace = TrainingTrace(
        p=np.full(n, p, dtype=np.int64),
        episode=np.arange(1, n + 1, dtype=np.int64),
        reward=np.zeros(n),
        loss=np.full(n, np.nan),
        greedy=np.full(n, np.nan),
        best_greedy=np.full(n, np.nan),
        wall_ms=np.zeros(n),
    )

    best = float("-inf")
    best_schedule = None
    best_state = None
    if n > 0:
        # bank what the starting policy is worth before any update touches
        # it; for a transferred agent this records the deeper rollout of
        # the inherited schedule, for a fresh one the untrained baseline
        best, best_schedule = greedy_episode(agent, env)
        if train_config.keep_best:
            best_state = agent.snapshot()
    evals_below_margin = 0
    n_ran = n
    for ep in range(n):
        t0 = time.perf_counter()
        obs = env.reset()
        noise.reset()
        warm = ep < train_config.warmup_episodes
        losses = 0.0
        n_losses = 0
        reward = 0.0
        for _ in range(p):
            if warm:
                action = rng.uniform(-1.0, 1.0, size=agent.ACTION_DIM)
            else:
                action = agent.select_action(obs, noise)
            res = env.step(action)
            buffer.push(obs, action, res.reward, res.observation, res.done)
            obs = res.observation
            reward = res.reward
            # warmup gates the action policy only; learning starts as soon
            # as one batch is available
            if len(buffer) >= train_config.batch_size:
                for _ in range(train_config.updates_per_step):
                    losses += agent.update(buffer.sample(train_config.batch_size, rng),
                                           env_config.discount, train_config.tau)
                    n_losses += 1
        trace.reward[ep] = reward
        if n_losses:
            trace.loss[ep] = losses / n_losses

        if (ep + 1) % train_config.eval_every == 0 or ep == n - 1:
            g_reward, schedule = greedy_episode(agent, env)
            trace.greedy[ep] = g_reward
            if g_reward > best:
                best = g_reward
                best_schedule = schedule
                evals_below_margin = 0
                if train_config.keep_best:
                    best_state = agent.snapshot()
            elif (train_config.revert_margin is not None
                  and best_state is not None
                  and g_reward < best - train_config.revert_margin):
                # the greedy policy sometimes collapses and stays collapsed;
                # pull it back to the best one seen and keep exploring there
                evals_below_margin += 1
                if evals_below_margin >= train_config.revert_patience:
                    agent.restore(best_state)
                    evals_below_margin = 0
            else:
                evals_below_margin = 0
        if best > float("-inf"):
            trace.best_greedy[ep] = best
        trace.wall_ms[ep] = (time.perf_counter() - t0) * 1e3

        if (train_config.checkpoint_every
                and (ep + 1) % train_config.checkpoint_every == 0):
            save_agent(agent, Path(train_config.checkpoint_dir)
                       / f"agent_p{p}_ep{ep + 1:06d}.ckpt")

        if (train_config.stop_at_reward is not None
                and best >= train_config.stop_at_reward):
            n_ran = ep + 1
            break

    if n_ran < n:
        trace = TrainingTrace(
            p=trace.p[:n_ran], episode=trace.episode[:n_ran],
            reward=trace.reward[:n_ran], loss=trace.loss[:n_ran],
            greedy=trace.greedy[:n_ran], best_greedy=trace.best_greedy[:n_ran],
            wall_ms=trace.wall_ms[:n_ran],
        )
    trace.best_reward = best
    trace.best_schedule = best_schedule
    if best_state is not None:
        # a greedy policy can peak early and then wander off; hand back the
        # best one seen rather than whatever the last episode left behind
        agent.restore(best_state)
    agent.trained_p = max(agent.trained_p, p)
    agent.episodes_trained += n_ran
    return trace, agent


def transfer_training(agent: NafAgent, env_config: EnvConfig, train_config: TrainConfig):
    """Continue training an existing agent at a depth at least as large.

    Network weights and optimizer moments carry over; replay starts empty
    because transitions from a shallower circuit bootstrap differently.
    """
    _check_compatible(agent, env_config)
    if env_config.p < agent.trained_p:
        raise ConfigError(
            f"transfer goes to larger depth: agent at p={agent.trained_p}, "
            f"requested p={env_config.p}")
    return run_training(env_config, train_config, agent=agent)


# -- persistence ---------------------------------------------------------------


def save_agent(agent: NafAgent, path) -> None:
    config = {
        "kind": "naf-agent",
        "n_vertices": agent.n_vertices,
        "edges": [list(e) for e in agent.edges],
        "include_edge_terms": agent.include_edge_terms,
        "include_step_index": agent.include_step_index,
        "obs_dim": agent.obs_dim,
        "action_dim": agent.ACTION_DIM,
        "hidden": list(agent.net_config.hidden),
        "activation": agent.net_config.activation,
        "lr": agent.lr,
        "optimizer": agent.optimizer_kind,
    }
    names = agent.online.parameter_names()
    tensors = {}
    for name, arr in zip(names, agent.online.parameters()):
        tensors[f"online/{name}"] = arr
    for name, arr in zip(names, agent.target.parameters()):
        tensors[f"target/{name}"] = arr
    scalars = {
        "trained_p": agent.trained_p,
        "episodes_trained": agent.episodes_trained,
        "opt_t": agent.opt.t,
    }
    if agent.optimizer_kind == "adam":
        for name, arr in zip(names, agent.opt.m):
            tensors[f"adam_m/{name}"] = arr
        for name, arr in zip(names, agent.opt.v):
            tensors[f"adam_v/{name}"] = arr
    save_checkpoint(path, config, tensors, scalars)


def load_agent(path) -> NafAgent:
    config, tensors, scalars = load_checkpoint(path)
    if config.get("kind") != "naf-agent":
        raise CheckpointError(f"{path}: not an agent checkpoint")
    problem = MaxCutProblem(config["n_vertices"],
                            tuple(tuple(e) for e in config["edges"]))
    env_config = EnvConfig(
        problem=problem,
        p=max(int(scalars.get("trained_p", 1)), 1),
        include_edge_terms=config["include_edge_terms"],
        include_step_index=config["include_step_index"],
    )
    net_config = NetConfig(tuple(config["hidden"]), config["activation"])
    agent = NafAgent(env_config, net_config, config["lr"], config["optimizer"],
                     np.random.default_rng(0))
    if config["obs_dim"] != agent.obs_dim:
        raise CheckpointError(f"{path}: observation size does not match graph")

    names = agent.online.parameter_names()
    try:
        for name, arr in zip(names, agent.online.parameters()):
            arr[...] = tensors[f"online/{name}"]
        for name, arr in zip(names, agent.target.parameters()):
            arr[...] = tensors[f"target/{name}"]
        if config["optimizer"] == "adam":
            for name, arr in zip(names, agent.opt.m):
                arr[...] = tensors[f"adam_m/{name}"]
            for name, arr in zip(names, agent.opt.v):
                arr[...] = tensors[f"adam_v/{name}"]
    except KeyError as exc:
        raise CheckpointError(f"{path}: missing tensor {exc}") from None
    except ValueError as exc:
        raise CheckpointError(f"{path}: tensor shape mismatch ({exc})") from None
    agent.opt.t = int(scalars.get("opt_t", 0))
    agent.trained_p = int(scalars.get("trained_p", 0))
    agent.episodes_trained = int(scalars.get("episodes_trained", 0))
    return agent
