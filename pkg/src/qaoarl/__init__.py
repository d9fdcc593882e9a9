"""Reinforcement-learned angle schedules for simulated cut-maximization circuits.

A continuous-action Q-learning agent picks the two angles of each circuit
layer from measured observables, one layer at a time; a multi-restart
quasi-Newton search over the full angle vector serves as the classical
baseline. Everything runs on an exact statevector simulator.
"""

__version__ = "0.1.0"

from .agent import (Batch, NafAgent, NetConfig, OuNoise, ReplayBuffer,
                    TrainConfig, TrainingTrace, greedy_episode, load_agent,
                    run_training, save_agent, transfer_training)
from .baseline import (BaselineResult, BfgsResult, minimize_bfgs,
                       optimize_qaoa, qaoa_objective, relative_error,
                       wrap_angles)
from .environment import (EnvConfig, QaoaEnv, StepResult, action_to_angles,
                          episode_return)
from .errors import (BudgetError, CheckpointError, ConfigError,
                     GraphGenerationError, ProblemFileError)
from .neural import (AdamState, DenseNet, NafHead, SgdState, load_checkpoint,
                     make_optimizer, save_checkpoint, soft_update)
from .problems import (MaxCutProblem, best_cut_assignment, cut_spectrum,
                       cut_value, cycle, exact_maxcut, load_problem,
                       random_average_degree_graph, random_regular_graph,
                       save_problem, triangle)
from .simulator import (all_observables, apply_cost_layer, apply_mixer_layer,
                        expect_cost, expect_edge, expect_x, expect_z,
                        norm_error, run_schedule, state_fidelity,
                        uniform_state)

__all__ = [
    "__version__",
    # problems
    "MaxCutProblem", "cut_value", "cut_spectrum", "exact_maxcut",
    "best_cut_assignment", "random_regular_graph", "random_average_degree_graph",
    "load_problem", "save_problem", "triangle", "cycle",
    # simulator
    "uniform_state", "apply_cost_layer", "apply_mixer_layer", "run_schedule",
    "expect_cost", "expect_z", "expect_x", "expect_edge", "all_observables",
    "state_fidelity", "norm_error",
    # environment
    "EnvConfig", "QaoaEnv", "StepResult", "action_to_angles", "episode_return",
    # neural
    "DenseNet", "NafHead", "AdamState", "SgdState", "make_optimizer",
    "soft_update", "save_checkpoint", "load_checkpoint",
    # agent
    "NafAgent", "NetConfig", "TrainConfig", "TrainingTrace", "OuNoise",
    "ReplayBuffer", "Batch", "greedy_episode", "run_training",
    "transfer_training", "save_agent", "load_agent",
    # baseline
    "minimize_bfgs", "qaoa_objective", "optimize_qaoa", "wrap_angles",
    "relative_error", "BfgsResult", "BaselineResult",
    # errors
    "BudgetError", "ConfigError", "GraphGenerationError", "ProblemFileError",
    "CheckpointError",
]
