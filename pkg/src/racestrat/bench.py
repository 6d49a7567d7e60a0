"""Benchmark protocol: nominal optimizer-vs-agent comparison, the
disturbance scenario with a causal re-solve, and the go-long baseline.

All arms of a report share one config. The race-time difference of a method
is measured against the optimizer reference of the same report, which is
zero against itself by construction.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .config import Compound, RaceConfig
from .env import RaceEnv, ScenarioSpec
from .race_model import (
    ControlInput,
    EpisodeLog,
    RaceState,
    StepMode,
    rollout,
    simulate_strategy,
    strategy_of,
)
from .minlp import BnbOptions, OcpSolution, branch_and_bound, build_ocp, solve_nlp
from .minlp.ocp import OcpProblem
from .sac.train import evaluate, load_checkpoint

DEFAULT_DISTURBANCE = (22, 0.2)   # lap, wear jump


@dataclass
class ArmResult:
    name: str
    strategy: str
    t_race: float
    delta_t: float
    wall_time: float
    log: EpisodeLog
    extra: dict = field(default_factory=dict)
    flag_columns: dict = field(default_factory=dict)

    def rows(self) -> list[dict]:
        return [vars(rec) for rec in self.log.laps]

    def to_csv(self) -> str:
        return self.log.to_csv(extra_columns=self.flag_columns or None)


@dataclass
class BenchmarkReport:
    kind: str                       # nominal | disturbance
    cfg: RaceConfig
    arms: list[ArmResult]
    metadata: dict

    def arm(self, name: str) -> ArmResult:
        for a in self.arms:
            if a.name == name:
                return a
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "metadata": self.metadata,
            "arms": [
                {
                    "name": a.name,
                    "strategy": a.strategy,
                    "t_race": a.t_race,
                    "delta_t": a.delta_t,
                    "wall_time": a.wall_time,
                    "extra": a.extra,
                    "laps": a.rows(),
                }
                for a in self.arms
            ],
        }


def _metadata(cfg: RaceConfig, **extra) -> dict:
    return {"config_hash": cfg.content_hash(), "version": __version__, **extra}


def run_nominal(
    cfg: RaceConfig,
    checkpoint: str | Path,
    bnb_options: BnbOptions | None = None,
    minlp_solution: OcpSolution | None = None,
) -> BenchmarkReport:
    """Solve the race, evaluate the trained policy on it, compare."""
    t0 = time.perf_counter()
    if minlp_solution is None:
        minlp_solution = branch_and_bound(build_ocp(cfg), bnb_options or BnbOptions())
    minlp_wall = time.perf_counter() - t0

    agent, _ = load_checkpoint(checkpoint)
    t0 = time.perf_counter()
    rl_log, rl_metrics = evaluate(agent, ScenarioSpec(cfg=cfg))
    rl_wall = time.perf_counter() - t0

    ref = minlp_solution.t_race
    arms = [
        ArmResult(
            name="minlp", strategy=str(minlp_solution.strategy),
            t_race=minlp_solution.t_race, delta_t=0.0, wall_time=minlp_wall,
            log=minlp_solution.log,
            extra={"gap": minlp_solution.gap, "nodes": minlp_solution.n_nodes,
                   "terminal_battery": minlp_solution.log.final_state.battery,
                   "terminal_fuel": minlp_solution.log.final_state.fuel},
        ),
        ArmResult(
            name="rl", strategy=str(strategy_of(rl_log)),
            t_race=rl_metrics.t_race, delta_t=rl_metrics.t_race - ref, wall_time=rl_wall,
            log=rl_log, flag_columns=rl_metrics.flag_columns,
            extra={"forced_compound_count": rl_metrics.forced_compound_count,
                   "overwrites": rl_metrics.overwrite_counts,
                   "terminal_battery": rl_log.final_state.battery,
                   "terminal_fuel": rl_log.final_state.fuel},
        ),
    ]
    return BenchmarkReport(
        kind="nominal", cfg=cfg, arms=arms,
        metadata=_metadata(cfg, checkpoint=str(checkpoint)),
    )


def snapshot_after(
    cfg: RaceConfig, inputs: list[ControlInput], through_lap: int, disturbance: tuple[int, float]
) -> RaceState:
    """State at the start of lap through_lap+1 after following the given
    inputs with the disturbance applied."""
    log = rollout(
        cfg, RaceState.initial(cfg), inputs[: through_lap + 1],
        disturbances=dict([disturbance]),
    )
    state = log.final_state
    # the tail problem restarts its clock; race time is added back later
    return state


def go_long(
    cfg: RaceConfig,
    nominal: OcpSolution,
    disturbance: tuple[int, float],
    reaction_laps: int = 2,
) -> tuple[list[ControlInput], dict[int, int]]:
    """Conservative baseline: pit for hard right after the disturbance and
    run to the flag, with the energy allocation re-optimized around the
    fixed schedule (no further stops)."""
    lap, _ = disturbance
    stop_lap = lap + reaction_laps
    kept = {k: inp.ps for k, inp in enumerate(nominal.inputs) if inp.ps > 0 and k <= lap}
    schedule = dict(kept)
    schedule[stop_lap] = int(Compound.HARD)
    state = snapshot_after(cfg, nominal.inputs, lap, disturbance)
    problem = build_ocp(cfg, init_state=state, start_lap=lap + 1)
    n_tail = problem.horizon
    lo = np.zeros(n_tail)
    lo[stop_lap - (lap + 1)] = float(Compound.HARD)
    res = solve_nlp(problem, lo, lo)
    tail_inputs = problem.inputs_from(res.x)
    return nominal.inputs[: lap + 1] + tail_inputs, schedule


def run_disturbance(
    cfg: RaceConfig,
    checkpoint: str | Path,
    disturbance: tuple[int, float] = DEFAULT_DISTURBANCE,
    bnb_options: BnbOptions | None = None,
    nominal_solution: OcpSolution | None = None,
) -> BenchmarkReport:
    """Three arms against an unexpected wear jump.

    causal: follow the nominal plan to the disturbance lap, then re-solve
    from the post-disturbance state. rl: the trained policy in the disturbed
    environment. heuristic: the go-long baseline.
    """
    lap, delta = disturbance
    opts = bnb_options or BnbOptions()
    if nominal_solution is None:
        nominal_solution = branch_and_bound(build_ocp(cfg), opts)

    # causal arm
    t0 = time.perf_counter()
    state = snapshot_after(cfg, nominal_solution.inputs, lap, disturbance)
    tail_problem = build_ocp(cfg, init_state=state, start_lap=lap + 1)
    tail = branch_and_bound(tail_problem, opts)
    causal_inputs = nominal_solution.inputs[: lap + 1] + tail.inputs
    causal_log = simulate_strategy(cfg, causal_inputs, disturbances={lap: delta})
    causal_wall = time.perf_counter() - t0

    # rl arm
    agent, _ = load_checkpoint(checkpoint)
    t0 = time.perf_counter()
    rl_log, rl_metrics = evaluate(agent, ScenarioSpec(cfg=cfg, disturbances=(disturbance,)))
    rl_wall = time.perf_counter() - t0

    # heuristic arm
    t0 = time.perf_counter()
    heur_inputs, _ = go_long(cfg, nominal_solution, disturbance)
    heur_log = simulate_strategy(cfg, heur_inputs, disturbances={lap: delta}, allow_out_of_box=True)
    heur_wall = time.perf_counter() - t0

    ref = causal_log.total_time
    arms = [
        ArmResult(
            name="minlp", strategy=str(strategy_of(causal_log)),
            t_race=causal_log.total_time, delta_t=0.0, wall_time=causal_wall,
            log=causal_log,
            extra={"resolve_gap": tail.gap, "resolve_nodes": tail.n_nodes,
                   "resolve_from_lap": lap + 1},
        ),
        ArmResult(
            name="rl", strategy=str(strategy_of(rl_log)),
            t_race=rl_metrics.t_race, delta_t=rl_metrics.t_race - ref, wall_time=rl_wall,
            log=rl_log, flag_columns=rl_metrics.flag_columns,
            extra={"forced_compound_count": rl_metrics.forced_compound_count},
        ),
        ArmResult(
            name="heuristic", strategy=str(strategy_of(heur_log)),
            t_race=heur_log.total_time, delta_t=heur_log.total_time - ref, wall_time=heur_wall,
            log=heur_log, extra={"kind": "go_long"},
        ),
    ]
    return BenchmarkReport(
        kind="disturbance", cfg=cfg, arms=arms,
        metadata=_metadata(cfg, checkpoint=str(checkpoint),
                           disturbance={"lap": lap, "tw_delta": delta}),
    )


def first_stop_after(log: EpisodeLog, lap: int) -> int | None:
    for k, _ in log.stops:
        if k > lap:
            return k
    return None


# ---------------------------------------------------------------------------
# Report emission


def emit_report(report: BenchmarkReport, out_dir: str | Path, formats: tuple[str, ...] = ("json", "csv", "md")) -> list[Path]:
    """Write the machine-readable and human-readable report files."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if "json" in formats:
        p = out / f"{report.kind}_report.json"
        p.write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")
        written.append(p)
    if "csv" in formats:
        for arm in report.arms:
            p = out / f"{report.kind}_{arm.name}_laps.csv"
            p.write_text(arm.to_csv())
            written.append(p)
    if "md" in formats:
        lines = [
            f"# {report.kind.capitalize()} benchmark",
            "",
            f"config hash: `{report.metadata['config_hash']}`",
            "",
            "| method | strategy | race time (s) | delta T (s) | wall time (s) |",
            "|---|---|---|---|---|",
        ]
        for a in report.arms:
            lines.append(
                f"| {a.name} | {a.strategy} | {a.t_race:.3f} | {a.delta_t:+.3f} | {a.wall_time:.2f} |"
            )
        p = out / f"{report.kind}_summary.md"
        p.write_text("\n".join(lines) + "\n")
        written.append(p)
    return written


def load_report(path: str | Path) -> dict:
    return json.loads(Path(path).read_text())
