"""Training loop, deterministic evaluation, and checkpoint handling."""

from __future__ import annotations

import os
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from ..config import RaceConfig
from ..env import AgentAction, RaceEnv, ScenarioSpec, T_LAP_CONST
from ..race_model import EpisodeLog, Strategy, strategy_of
from .agent import SacAgent, TrainConfig
from .buffer import ReplayBuffer
from .nets import N_PIT

OBS_DIM = 10


@dataclass
class EvalMetrics:
    t_race: float
    undiscounted_return: float
    stops: list[tuple[int, int]]
    forced_compound_count: int
    overwrite_counts: dict[str, int]
    legal: bool
    wall_time_per_lap: float
    # per-lap overwrite flags, appended to CSV/JSONL exports of the episode
    flag_columns: dict[str, list] = field(default_factory=dict)

    @property
    def strategy(self) -> str:
        return "(" + ", ".join(
            ["?_0"] + [f"{c}_{k}" for k, c in self.stops]
        ) + ")"


def evaluate(agent: SacAgent, spec: ScenarioSpec) -> tuple[EpisodeLog, EvalMetrics]:
    """Deterministic rollout of the policy through the environment."""
    env = RaceEnv(spec)
    obs = env.reset()
    log = EpisodeLog(cfg=spec.cfg)
    ret = 0.0
    forced = 0
    overwrites = {"battery": 0, "fuel": 0}
    flags = {"battery_case": [], "fuel_case": [], "forced_compound": [], "out_of_box": []}
    t0 = time.perf_counter()
    done = False
    while not done:
        action = agent.act(obs, deterministic=True)
        res = env.step(action)
        obs = res.obs
        done = res.done
        ret += res.reward
        forced += int(res.info["forced_compound"])
        overwrites["battery"] += int(res.info["battery_case"] != 0)
        overwrites["fuel"] += int(res.info["fuel_case"] != 0)
        for name in flags:
            flags[name].append(int(res.info[name]))
        log.laps.append(res.info["record"])
    wall = time.perf_counter() - t0
    log.final_state = env.state
    metrics = EvalMetrics(
        t_race=log.total_time,
        undiscounted_return=ret,
        stops=[(k, int(c)) for k, c in log.stops],
        forced_compound_count=forced,
        overwrite_counts=overwrites,
        legal=log.legal,
        wall_time_per_lap=wall / spec.cfg.n_laps,
        flag_columns=flags,
    )
    return log, metrics


def _training_spec(base: ScenarioSpec, rng: np.random.Generator, cfg: TrainConfig) -> ScenarioSpec:
    """Sample a disturbance-augmented episode spec (curriculum)."""
    if rng.random() >= cfg.disturb_prob:
        return base
    n = base.cfg.n_laps
    lo, hi = cfg.disturb_lap_frac
    lap = int(rng.integers(max(1, int(lo * n)), max(2, int(hi * n))))
    mag = float(rng.uniform(*cfg.disturb_magnitude))
    return ScenarioSpec(cfg=base.cfg, disturbances=((lap, mag),), seed=base.seed)


@dataclass
class LearningCurve:
    steps: list[int] = field(default_factory=list)
    eval_t_race: list[float] = field(default_factory=list)
    losses: list[dict] = field(default_factory=list)


def train(
    spec: ScenarioSpec,
    cfg: TrainConfig | None = None,
    checkpoint_path: str | Path | None = None,
    log_fn=None,
) -> tuple[SacAgent, LearningCurve]:
    """Train an agent on the scenario; keeps the best-evaluation checkpoint.

    Training episodes may add random wear disturbances (see TrainConfig);
    evaluation always runs the unmodified spec.
    """
    cfg = cfg or TrainConfig()
    torch.manual_seed(cfg.seed)
    torch.set_num_threads(max(1, os.cpu_count() // 2))
    rng = np.random.default_rng(cfg.seed)
    agent = SacAgent(OBS_DIM, cfg)
    buffer = ReplayBuffer(OBS_DIM, cfg.buffer_capacity, seed=cfg.seed)
    curve = LearningCurve()

    env = RaceEnv(_training_spec(spec, rng, cfg))
    obs = env.reset()
    best_eval = np.inf
    best_state = None
    pending: list[tuple] = []   # last n_step (obs, a_cont, a_disc, reward) tuples

    def flush_pending(next_obs, done: bool, full_only: bool) -> None:
        # emit (s_t, a_t, sum of the next n rewards, s_{t+n}); on episode end
        # every suffix flushes with done=1 so no reward is lost (gamma = 1)
        while pending and (len(pending) == cfg.n_step or not full_only):
            o, ac, ad, _ = pending[0]
            total = sum(r for (_, _, _, r) in pending)
            buffer.push(o, ac, ad, total, next_obs, float(done))
            pending.pop(0)
            if full_only:
                break

    for step_i in range(1, cfg.steps + 1):
        if step_i <= cfg.start_steps:
            action = AgentAction(
                f=float(rng.random()), b=float(rng.uniform(-1, 1)),
                ps=int(rng.integers(0, N_PIT)),
            )
        else:
            action = agent.act(obs, deterministic=False)
        res = env.step(action)
        act = action.clipped()
        pending.append((obs, [act.f, act.b], act.ps, res.reward))
        flush_pending(res.obs, res.done, full_only=True)
        obs = res.obs
        if res.done:
            flush_pending(res.obs, True, full_only=False)
            env = RaceEnv(_training_spec(spec, rng, cfg))
            obs = env.reset()

        if step_i > cfg.start_steps and step_i % cfg.update_every == 0:
            losses = agent.update(buffer.sample(cfg.batch_size), progress=step_i / cfg.steps)
            if step_i % 1000 == 0:
                curve.losses.append({"step": step_i, **losses})

        if step_i % cfg.eval_every == 0 or step_i == cfg.steps:
            _, metrics = evaluate(agent, spec)
            curve.steps.append(step_i)
            curve.eval_t_race.append(metrics.t_race)
            if metrics.legal and metrics.t_race < best_eval:
                best_eval = metrics.t_race
                best_state = agent.state_dict()
                if checkpoint_path is not None:
                    save_checkpoint(agent, checkpoint_path, spec, extra={"eval_t_race": best_eval, "step": step_i})
            if log_fn is not None:
                log_fn(step_i, metrics)

    if best_state is not None:
        agent.load_state_dict(best_state)
    return agent, curve


def save_checkpoint(agent: SacAgent, path: str | Path, spec: ScenarioSpec | None = None, extra: dict | None = None) -> None:
    """Atomic write (temp file then rename) of the versioned checkpoint."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = agent.state_dict()
    if spec is not None:
        payload["spec"] = spec.to_dict()
    if extra:
        payload["extra"] = extra
    tmp = path.with_suffix(path.suffix + ".tmp")
    torch.save(payload, tmp)
    os.replace(tmp, path)


def load_checkpoint(path: str | Path) -> tuple[SacAgent, dict]:
    payload = torch.load(Path(path), map_location="cpu", weights_only=False)
    tc = payload.get("train_config", {})
    cfg = TrainConfig(
        hidden=tuple(tc.get("hidden", (128, 128))),
        seed=int(tc.get("seed", 0)),
    )
    agent = SacAgent(OBS_DIM, cfg)
    agent.load_state_dict(payload)
    return agent, payload
