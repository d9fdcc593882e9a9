"""Command-line driver for training, transfer, baseline, and reporting runs.

Experiments are described by an INI file with sections [problem],
[environment], [network], [training], [transfer], [baseline]; unknown
sections or keys are rejected. Results land in the output directory as CSV
traces, checkpoints, and SVG charts.

Exit codes: 0 success, 2 configuration or problem-file error, 3 evaluation
budget exceeded, 4 other package error.
"""

from __future__ import annotations

import argparse
import configparser
import datetime
import hashlib
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from . import __version__
from .agent import (NetConfig, TrainConfig, TrainingTrace, run_training,
                    save_agent, transfer_training)
from .baseline import optimize_qaoa, relative_error
from .environment import EnvConfig
from .errors import (BudgetError, CheckpointError, ConfigError,
                     GraphGenerationError, ProblemFileError)
from .problems import (MaxCutProblem, best_cut_assignment, cut_value,
                       exact_maxcut, load_problem,
                       random_average_degree_graph, random_regular_graph)
from .reporting import (nanmean_stack, read_csv, render_line_chart,
                        rolling_mean, write_csv)

DEFAULT_OUT = "qaoarl_out"


# -- experiment configuration ---------------------------------------------------


@dataclass(frozen=True)
class ExperimentConfig:
    # problem source: exactly one of file / generator
    problem_file: str | None = None
    generator: str | None = None
    n: int = 0
    degree: int = 3
    avg_degree: float = 3.0
    graph_seed: int = 0
    # environment
    p: int = 1
    include_edge_terms: bool = True
    include_step_index: bool = True
    reward_scale: float = 1.0
    discount: float = 1.0
    # network
    hidden: tuple = (64, 64, 64)
    activation: str = "relu"
    # training
    episodes: int = 1000
    batch_size: int = 64
    buffer_capacity: int = 20000
    warmup_episodes: int = 50
    tau: float = 0.01
    lr: float = 1e-4
    optimizer: str = "adam"
    updates_per_step: int = 1
    eval_every: int = 10
    noise_theta: float = 0.01
    noise_sigma: float = 0.01
    revert_margin: float = 0.0  # 0 disables collapse recovery
    revert_patience: int = 2
    checkpoint_every: int = 0
    # transfer
    transfer_schedule: tuple = ()
    episodes_per_stage: tuple = ()
    # baseline
    baseline_depths: tuple = ()
    restarts: int = 10
    gtol: float = 1e-5
    max_iterations: int = 100
    fd_step: float = 1e-5
    max_evals: int = 0  # 0 means unlimited


def _parse_bool(raw: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def _parse_int_tuple(raw: str) -> tuple:
    return tuple(int(tok) for tok in raw.replace(" ", "").split(",") if tok)


_SCHEMA = {
    "problem": {
        "file": ("problem_file", str),
        "generator": ("generator", str),
        "n": ("n", int),
        "degree": ("degree", int),
        "avg_degree": ("avg_degree", float),
        "graph_seed": ("graph_seed", int),
    },
    "environment": {
        "p": ("p", int),
        "include_edge_terms": ("include_edge_terms", _parse_bool),
        "include_step_index": ("include_step_index", _parse_bool),
        "reward_scale": ("reward_scale", float),
        "discount": ("discount", float),
    },
    "network": {
        "hidden": ("hidden", _parse_int_tuple),
        "activation": ("activation", str),
    },
    "training": {
        "episodes": ("episodes", int),
        "batch_size": ("batch_size", int),
        "buffer_capacity": ("buffer_capacity", int),
        "warmup_episodes": ("warmup_episodes", int),
        "tau": ("tau", float),
        "lr": ("lr", float),
        "optimizer": ("optimizer", str),
        "updates_per_step": ("updates_per_step", int),
        "eval_every": ("eval_every", int),
        "noise_theta": ("noise_theta", float),
        "noise_sigma": ("noise_sigma", float),
        "revert_margin": ("revert_margin", float),
        "revert_patience": ("revert_patience", int),
        "checkpoint_every": ("checkpoint_every", int),
    },
    "transfer": {
        "schedule": ("transfer_schedule", _parse_int_tuple),
        "episodes_per_stage": ("episodes_per_stage", _parse_int_tuple),
    },
    "baseline": {
        "depths": ("baseline_depths", _parse_int_tuple),
        "restarts": ("restarts", int),
        "gtol": ("gtol", float),
        "max_iterations": ("max_iterations", int),
        "fd_step": ("fd_step", float),
        "max_evals": ("max_evals", int),
    },
}


def load_experiment(path) -> ExperimentConfig:
    """Parse and validate an INI experiment file; unknown keys are errors."""
    parser = configparser.ConfigParser(interpolation=None,
                                       inline_comment_prefixes=("#", ";"))
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from None

    kwargs = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"{path}: unknown section [{section}]")
        for key, raw in parser[section].items():
            if key not in _SCHEMA[section]:
                raise ConfigError(f"{path}: unknown key {key!r} in [{section}]")
            field, convert = _SCHEMA[section][key]
            try:
                kwargs[field] = convert(raw)
            except ValueError as exc:
                raise ConfigError(f"{path}: bad value for [{section}] {key}: {exc}") from None
    cfg = ExperimentConfig(**kwargs)
    _validate_experiment(cfg, path)
    return cfg


def _validate_experiment(cfg: ExperimentConfig, path) -> None:
    if (cfg.problem_file is None) == (cfg.generator is None):
        raise ConfigError(f"{path}: [problem] needs exactly one of file= or generator=")
    if cfg.generator is not None:
        if cfg.generator not in ("regular", "average"):
            raise ConfigError(f"{path}: unknown generator {cfg.generator!r}")
        if cfg.n < 2:
            raise ConfigError(f"{path}: generator needs n >= 2")
    if cfg.p < 1:
        raise ConfigError(f"{path}: depth p must be positive")
    if cfg.transfer_schedule:
        sched = cfg.transfer_schedule
        if any(b <= a for a, b in zip(sched, sched[1:])) or sched[0] < 1:
            raise ConfigError(f"{path}: transfer schedule must be strictly increasing")
        if cfg.episodes_per_stage and len(cfg.episodes_per_stage) not in (1, len(sched)):
            raise ConfigError(f"{path}: episodes_per_stage must have one entry or one per stage")
    if any(d < 0 for d in cfg.baseline_depths):
        raise ConfigError(f"{path}: baseline depths must be non-negative")
    if cfg.max_evals < 0:
        raise ConfigError(f"{path}: max_evals must be non-negative (0 disables the cap)")


def build_problem(cfg: ExperimentConfig) -> MaxCutProblem:
    if cfg.problem_file is not None:
        return load_problem(cfg.problem_file)
    if cfg.generator == "regular":
        return random_regular_graph(cfg.n, cfg.degree, seed=cfg.graph_seed)
    return random_average_degree_graph(cfg.n, cfg.avg_degree, seed=cfg.graph_seed)


def config_hash(cfg: ExperimentConfig) -> str:
    canon = json.dumps(asdict(cfg), sort_keys=True)
    return hashlib.sha256(canon.encode()).hexdigest()[:12]


def _env_config(cfg: ExperimentConfig, problem: MaxCutProblem, p: int) -> EnvConfig:
    return EnvConfig(problem=problem, p=p,
                     include_edge_terms=cfg.include_edge_terms,
                     include_step_index=cfg.include_step_index,
                     reward_scale=cfg.reward_scale,
                     discount=cfg.discount)


def _train_config(cfg: ExperimentConfig, episodes: int, seed: int,
                  out_dir: str | None) -> TrainConfig:
    return TrainConfig(
        episodes=episodes, batch_size=cfg.batch_size,
        buffer_capacity=cfg.buffer_capacity, warmup_episodes=cfg.warmup_episodes,
        tau=cfg.tau, lr=cfg.lr, optimizer=cfg.optimizer,
        updates_per_step=cfg.updates_per_step, eval_every=cfg.eval_every,
        seed=seed, noise_theta=cfg.noise_theta, noise_sigma=cfg.noise_sigma,
        revert_margin=cfg.revert_margin or None,
        revert_patience=cfg.revert_patience,
        checkpoint_every=cfg.checkpoint_every,
        checkpoint_dir=out_dir if cfg.checkpoint_every else None)


def _stage_seed(seed: int, stage: int) -> int:
    # distinct, reproducible stream per transfer stage
    return seed * 10007 + stage


def _base_metadata(command: str, cfg: ExperimentConfig, problem: MaxCutProblem) -> dict:
    return {
        "command": command,
        "version": __version__,
        "config_hash": config_hash(cfg),
        "n_vertices": problem.n_vertices,
        "n_edges": problem.m,
        "created_utc": datetime.datetime.now(datetime.timezone.utc)
        .strftime("%Y-%m-%dT%H:%M:%SZ"),
    }


def _trace_columns(trace: TrainingTrace) -> list:
    return [(name, trace.column(name)) for name in TrainingTrace.COLUMNS]


# -- per-seed workers (module level so they pickle for the process pool) --------


def _train_worker(payload):
    cfg, problem, seed, out_dir, exact_value, metadata = payload
    env_cfg = _env_config(cfg, problem, cfg.p)
    train_cfg = _train_config(cfg, cfg.episodes, seed, out_dir)
    trace, agent = run_training(env_cfg, train_cfg,
                                NetConfig(cfg.hidden, cfg.activation))
    meta = dict(metadata)
    meta.update(seed=seed, p=cfg.p, episodes=cfg.episodes,
                exact_maxcut=format(exact_value, ".17g"),
                best_greedy=format(trace.best_reward, ".17g"),
                total_wall_ms=format(float(trace.wall_ms.sum()), ".1f"))
    out = Path(out_dir)
    write_csv(out / f"train_seed{seed}.csv", _trace_columns(trace), meta)
    save_agent(agent, out / f"agent_seed{seed}.ckpt")
    final_greedy = trace.greedy[np.isfinite(trace.greedy)]
    summary = {
        "seed": seed,
        "episodes": cfg.episodes,
        "best_greedy": trace.best_reward,
        "final_greedy": float(final_greedy[-1]) if final_greedy.size else float("nan"),
    }
    columns = {name: trace.column(name) for name in TrainingTrace.COLUMNS}
    return seed, summary, columns


def _transfer_worker(payload):
    cfg, problem, seed, out_dir, exact_value, metadata = payload
    schedule = cfg.transfer_schedule
    if cfg.episodes_per_stage:
        eps = list(cfg.episodes_per_stage)
        if len(eps) == 1:
            eps = eps * len(schedule)
    else:
        eps = [cfg.episodes] * len(schedule)

    out = Path(out_dir)
    agent = None
    traces = []
    best_rows = []
    for stage, p in enumerate(schedule):
        env_cfg = _env_config(cfg, problem, p)
        train_cfg = _train_config(cfg, eps[stage], _stage_seed(seed, stage), out_dir)
        if agent is None:
            trace, agent = run_training(env_cfg, train_cfg,
                                        NetConfig(cfg.hidden, cfg.activation))
        else:
            # random warmup only makes sense before there is a policy to reuse
            trace, agent = transfer_training(
                agent, env_cfg, replace(train_cfg, warmup_episodes=0))
        traces.append(trace)
        best_rows.append((seed, p, eps[stage], trace.best_reward))
        save_agent(agent, out / f"agent_seed{seed}_p{p}.ckpt")

    combined = TrainingTrace.concatenate(traces)
    meta = dict(metadata)
    meta.update(seed=seed, schedule=",".join(map(str, schedule)),
                episodes_per_stage=",".join(map(str, eps)),
                exact_maxcut=format(exact_value, ".17g"),
                best_greedy=format(combined.best_reward, ".17g"),
                total_wall_ms=format(float(combined.wall_ms.sum()), ".1f"))
    write_csv(out / f"transfer_seed{seed}.csv", _trace_columns(combined), meta)
    save_agent(agent, out / f"agent_seed{seed}.ckpt")
    summary = {"seed": seed, "best_greedy": combined.best_reward}
    return seed, summary, best_rows


def _run_seeds(worker, payloads, jobs: int):
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(worker, payloads))
    return [worker(p) for p in payloads]


# -- commands -------------------------------------------------------------------


def _resolve_out(args) -> Path:
    out = Path(args.out or os.environ.get("QAOARL_OUT") or DEFAULT_OUT)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _seeds(args) -> list:
    return args.seed if args.seed else [0]


def cmd_train(args) -> int:
    cfg = load_experiment(args.config)
    if args.episodes is not None:
        cfg = replace(cfg, episodes=args.episodes)
    if args.p:
        cfg = replace(cfg, p=args.p)
        _validate_experiment(cfg, args.config)
    out = _resolve_out(args)
    problem = build_problem(cfg)
    exact_value = exact_maxcut(problem)
    metadata = _base_metadata("train", cfg, problem)

    payloads = [(cfg, problem, seed, str(out), exact_value, metadata)
                for seed in _seeds(args)]
    results = _run_seeds(_train_worker, payloads, args.jobs)

    # a zero-episode run produces header-only CSVs, summary included
    summaries = [s for _, s, _ in results] if cfg.episodes else []
    for s in summaries:
        print(f"seed {s['seed']}: best greedy {s['best_greedy']:.6f} "
              f"(exact maxcut {exact_value})")

    col_stacks = [c for _, _, c in results]
    mean_cols = [("episode", col_stacks[0]["episode"])]
    for name in ("reward", "loss", "greedy", "best_greedy"):
        mean_cols.append((name, nanmean_stack([c[name] for c in col_stacks])))
    meta = dict(metadata)
    meta.update(seeds=",".join(str(s) for s in _seeds(args)), p=cfg.p)
    write_csv(out / "train_mean.csv", mean_cols, meta)

    write_csv(out / "summary.csv",
              [("seed", np.array([s["seed"] for s in summaries])),
               ("episodes", np.array([s["episodes"] for s in summaries])),
               ("best_greedy", np.array([s["best_greedy"] for s in summaries])),
               ("final_greedy", np.array([s["final_greedy"] for s in summaries]))],
              meta)
    print(f"wrote {out}/train_seed*.csv, train_mean.csv, summary.csv")
    return 0


def cmd_transfer(args) -> int:
    cfg = load_experiment(args.config)
    if not cfg.transfer_schedule:
        raise ConfigError(f"{args.config}: transfer needs a [transfer] schedule")
    out = _resolve_out(args)
    problem = build_problem(cfg)
    exact_value = exact_maxcut(problem)
    metadata = _base_metadata("transfer", cfg, problem)

    payloads = [(cfg, problem, seed, str(out), exact_value, metadata)
                for seed in _seeds(args)]
    results = _run_seeds(_transfer_worker, payloads, args.jobs)

    rows = [row for _, _, best_rows in results for row in best_rows]
    write_csv(out / "transfer_best.csv",
              [("seed", np.array([r[0] for r in rows])),
               ("p", np.array([r[1] for r in rows])),
               ("episodes", np.array([r[2] for r in rows])),
               ("best_greedy", np.array([r[3] for r in rows]))],
              metadata)
    for seed, summary, best_rows in results:
        stages = ", ".join(f"p={p}: {best:.6f}" for _, p, _, best in best_rows)
        print(f"seed {seed}: {stages} (exact maxcut {exact_value})")
    print(f"wrote {out}/transfer_seed*.csv, transfer_best.csv")
    return 0


def cmd_baseline(args) -> int:
    cfg = load_experiment(args.config)
    depths = tuple(args.p) if args.p else (cfg.baseline_depths or (cfg.p,))
    depths = tuple(sorted(set(depths)))  # output rows are keyed by ascending p
    out = _resolve_out(args)
    problem = build_problem(cfg)
    exact_value = exact_maxcut(problem)
    metadata = _base_metadata("baseline", cfg, problem)
    max_evals = cfg.max_evals or None

    rows = []
    for depth in depths:
        for seed in _seeds(args):
            result = optimize_qaoa(problem, depth, restarts=cfg.restarts, seed=seed,
                                   gtol=cfg.gtol, max_iterations=cfg.max_iterations,
                                   fd_step=cfg.fd_step, max_evals=max_evals)
            rows.append((depth, seed, result))
            if depth > 0:
                sched_meta = dict(metadata)
                sched_meta.update(p=depth, seed=seed,
                                  value=format(result.value, ".17g"))
                write_csv(out / f"baseline_schedule_p{depth}_seed{seed}.csv",
                          [("layer", np.arange(1, depth + 1)),
                           ("gamma", result.schedule[:, 0]),
                           ("beta", result.schedule[:, 1])],
                          sched_meta)
            print(f"p={depth} seed={seed}: value {result.value:.6f} "
                  f"(exact {exact_value}, {result.n_evals} evals, "
                  f"{result.restarts_run} restarts)")

    write_csv(out / "baseline.csv",
              [("p", np.array([d for d, _, _ in rows])),
               ("seed", np.array([s for _, s, _ in rows])),
               ("value", np.array([r.value for _, _, r in rows])),
               ("exact", np.array([float(exact_value)] * len(rows))),
               ("approx_ratio", np.array([r.value / exact_value for _, _, r in rows])),
               ("relative_error", np.array([relative_error(r.value, exact_value)
                                            for _, _, r in rows])),
               ("n_evals", np.array([r.n_evals for _, _, r in rows])),
               ("restarts_run", np.array([r.restarts_run for _, _, r in rows])),
               ("converged", np.array([r.converged for _, _, r in rows])),
               ("budget_exhausted", np.array([r.budget_exhausted for _, _, r in rows]))],
              metadata)
    print(f"wrote {out}/baseline.csv")
    return 0


def cmd_exact(args) -> int:
    if args.problem_file:
        problem = load_problem(args.problem_file)
    elif args.config:
        problem = build_problem(load_experiment(args.config))
    else:
        raise ConfigError("exact needs a problem file or --config")
    value, witness = best_cut_assignment(problem)
    check = cut_value(problem, witness)
    if check != value:
        # the enumerator and the per-assignment evaluator disagree
        raise RuntimeError(f"witness check failed: {check} != {value}")
    out = _resolve_out(args)
    write_csv(out / "exact.csv",
              [("n_vertices", np.array([problem.n_vertices])),
               ("n_edges", np.array([problem.m])),
               ("maxcut", np.array([value])),
               ("witness", np.array([witness], dtype=object))],
              {"command": "exact", "version": __version__})
    print(f"n={problem.n_vertices} m={problem.m} maxcut={value} witness={witness}")
    return 0


def cmd_plot(args) -> int:
    metadata, columns = read_csv(args.csv)
    if args.column not in columns:
        raise ConfigError(f"{args.csv}: no column {args.column!r}")
    x = columns.get("episode")
    if x is None:
        x = np.arange(1, len(columns[args.column]) + 1, dtype=np.float64)
    y = columns[args.column]

    series = [{"x": x, "y": y, "label": args.column,
               "stroke_width": 1.0, "opacity": 0.35}]
    finite = np.isfinite(y)
    if finite.all() and y.size >= 2:
        series.append({"x": x, "y": rolling_mean(y, args.window),
                       "label": f"rolling mean ({args.window})",
                       "stroke_width": 2.2})
    if "best_greedy" in columns and args.column != "best_greedy":
        series.append({"x": x, "y": columns["best_greedy"],
                       "label": "best greedy", "stroke_width": 1.8})

    hlines = []
    hline = args.hline
    if hline is None and "exact_maxcut" in metadata:
        hline = float(metadata["exact_maxcut"])
    if hline is not None:
        hlines.append((hline, f"optimum {format(hline, '.6g')}"))

    svg = render_line_chart(series, hlines=hlines,
                            title=Path(args.csv).stem,
                            xlabel="episode", ylabel=args.column)
    out_path = Path(args.svg_out) if args.svg_out else Path(args.csv).with_suffix(".svg")
    out_path.write_text(svg)
    print(f"wrote {out_path}")
    return 0


# -- argument parsing -----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qaoarl",
        description="Train an angle-picking agent on simulated cut-maximization "
                    "circuits, or run the quasi-Newton baseline.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, seeds=True):
        p.add_argument("--out", default=None,
                       help=f"output directory (default $QAOARL_OUT or ./{DEFAULT_OUT})")
        if seeds:
            p.add_argument("--seed", type=int, action="append", default=None,
                           help="seed; repeat the flag for several runs (default 0)")
            p.add_argument("--jobs", type=int, default=1,
                           help="worker processes across seeds (default 1)")

    p_train = sub.add_parser("train", help="train at a fixed depth")
    p_train.add_argument("--config", required=True)
    p_train.add_argument("--episodes", type=int, default=None,
                         help="override [training] episodes")
    p_train.add_argument("--p", type=int, default=None,
                         help="override [environment] p")
    add_common(p_train)
    p_train.set_defaults(func=cmd_train)

    p_tr = sub.add_parser("transfer", help="train through increasing depths")
    p_tr.add_argument("--config", required=True)
    add_common(p_tr)
    p_tr.set_defaults(func=cmd_transfer)

    p_base = sub.add_parser("baseline", help="quasi-Newton angle search")
    p_base.add_argument("--config", required=True)
    p_base.add_argument("--p", type=int, action="append", default=None,
                        help="depth; repeat for several (default [baseline] depths)")
    add_common(p_base)
    p_base.set_defaults(func=cmd_baseline)

    p_exact = sub.add_parser("exact", help="exact optimum by enumeration")
    p_exact.add_argument("problem_file", nargs="?", default=None)
    p_exact.add_argument("--config", default=None)
    add_common(p_exact, seeds=False)
    p_exact.set_defaults(func=cmd_exact)

    p_plot = sub.add_parser("plot", help="render a trace CSV as an SVG chart")
    p_plot.add_argument("csv")
    p_plot.add_argument("--column", default="reward")
    p_plot.add_argument("--window", type=int, default=100,
                        help="rolling mean window (default 100)")
    p_plot.add_argument("--hline", type=float, default=None,
                        help="horizontal rule, e.g. the exact optimum")
    p_plot.add_argument("--svg-out", default=None,
                        help="output path (default: CSV path with .svg)")
    p_plot.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ProblemFileError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except BudgetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (GraphGenerationError, CheckpointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
