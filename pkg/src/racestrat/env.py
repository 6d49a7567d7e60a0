"""Finite-horizon MDP wrapping the race model.

One step is one lap. The agent submits a normalized fuel allocation, a
normalized battery allocation and a pit decision; the environment maps them
to physical inputs, overwrites them where a state bound or the backward-
reachable energy set would be violated, enforces the compound-change rule,
advances the race model, and returns the next observation with a reward of
(lap-time constant minus lap time). Overwrites are part of the transition
dynamics, so the action space itself never depends on the state.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .config import Compound, ConfigError, RaceConfig
from .laptime import lap_kind
from .race_model import ControlInput, LapRecord, RaceState, StepMode, step

T_LAP_CONST = 100.0  # s, reward offset; reward = T_LAP_CONST - lap time


class SteppedAfterDone(RuntimeError):
    """step() was called on a finished episode."""


@dataclass(frozen=True)
class ScenarioSpec:
    """A race scenario plus scripted wear disturbances."""

    cfg: RaceConfig = field(default_factory=RaceConfig)
    disturbances: tuple[tuple[int, float], ...] = ()
    seed: int = 0

    def __post_init__(self):
        for lap, _ in self.disturbances:
            if not 0 <= lap < self.cfg.n_laps:
                raise ConfigError(f"disturbance lap {lap} outside race")

    def to_dict(self) -> dict:
        return {
            "cfg": self.cfg.to_dict(),
            "disturbances": [[lap, delta] for lap, delta in self.disturbances],
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioSpec":
        return cls(
            cfg=RaceConfig.from_dict(data.get("cfg", {})),
            disturbances=tuple((int(l), float(d)) for l, d in data.get("disturbances", [])),
            seed=int(data.get("seed", 0)),
        )


@dataclass(frozen=True)
class AgentAction:
    """Normalized action: fuel head in [0,1], battery head in [-1,1], pit code."""

    f: float
    b: float
    ps: int

    def clipped(self) -> "AgentAction":
        ps = int(self.ps)
        if ps not in (0, 1, 2, 3):
            raise ValueError(f"pit action must be in 0..3, got {self.ps}")
        return AgentAction(float(np.clip(self.f, 0.0, 1.0)), float(np.clip(self.b, -1.0, 1.0)), ps)


@dataclass
class StepResult:
    obs: np.ndarray
    reward: float
    done: bool
    info: dict


OBS_SIZE = 10


def observe(state: RaceState, t_lap_prev: float, k: int, cfg: RaceConfig) -> np.ndarray:
    """10-component observation, each scaled to order one."""
    return np.array([
        state.battery / cfg.battery_capacity,
        state.fuel / cfg.initial_fuel_energy,
        (state.mass - cfg.empty_mass) / cfg.fuel_mass,
        state.race_time / (cfg.n_laps * T_LAP_CONST),
        float(state.compound_changes),
        int(state.compound) / 3.0,
        state.wear,
        1.0 if state.outlap else 0.0,
        t_lap_prev / T_LAP_CONST,
        float(cfg.n_laps - k) / cfg.n_laps,
    ])


def map_actions(f: float, b: float, cfg: RaceConfig) -> tuple[float, float]:
    """Clip then map the normalized heads onto the physical input boxes.

    The battery mapping is inverted: b = +1 requests maximum deployment
    (most negative physical delta), b = -1 maximum recharge.
    """
    f = float(np.clip(f, 0.0, 1.0))
    b = float(np.clip(b, -1.0, 1.0))
    de_f = cfg.fuel_per_lap_min + f * (cfg.fuel_per_lap_max - cfg.fuel_per_lap_min)
    de_b = cfg.recharge_limit + (b + 1.0) * 0.5 * (cfg.deploy_limit - cfg.recharge_limit)
    return de_f, de_b


def overwrite_battery(e_b: float, de_b: float, k: int, cfg: RaceConfig) -> tuple[float, int]:
    """Clamp the battery delta into the backward-reachable interval.

    Returns (applied delta, case flag): 0 none, 1 upper capacity bound,
    2 lower (empty) bound, 3 reachable-set bound (can still be fully
    depleted over the remaining laps).
    """
    remaining_after = cfg.n_laps - k - 1
    depletion_rate = -cfg.deploy_limit
    reach_cap = depletion_rate * remaining_after
    target = e_b + de_b
    if target < 0.0:
        return -e_b, 2
    if target > cfg.battery_capacity:
        # both caps can bind at once near the finish; the tighter one wins
        if reach_cap < cfg.battery_capacity:
            return reach_cap - e_b, 3
        return cfg.battery_capacity - e_b, 1
    if target > reach_cap:
        return reach_cap - e_b, 3
    return de_b, 0


def overwrite_fuel(e_f: float, de_f: float, k: int, cfg: RaceConfig) -> tuple[float, int]:
    """Clamp the fuel burn so the remaining laps can finish with zero fuel.

    Returns (applied delta, case flag): 0 none, 1 too much fuel would be
    left, 2 too little. On the last lap both bounds collapse and the whole
    remaining fuel is burned.
    """
    remaining_after = cfg.n_laps - k - 1
    hi = cfg.fuel_per_lap_max * remaining_after
    lo = cfg.fuel_per_lap_min * remaining_after
    target = e_f - de_f
    if target > hi:
        return e_f - hi, 1
    if target < lo:
        return e_f - lo, 2
    return de_f, 0


def enforce_compound_rule(
    compound_changes: int, tc: Compound | int, ps: int, k: int, cfg: RaceConfig
) -> tuple[int, bool]:
    """Force a compound change at the last admissible lap if none happened.

    The override mounts soft unless the car is already on softs, then
    medium. Returns (possibly overridden ps, forced flag).
    """
    if compound_changes >= 1:
        return ps, False
    last = max(lap for lap in range(cfg.n_laps) if lap not in cfg.forbidden_pit_laps)
    if k < last:
        return ps, False
    if ps > 0 and ps != int(tc):
        return ps, False
    forced = Compound.SOFT if int(tc) != int(Compound.SOFT) else Compound.MEDIUM
    return int(forced), True


class RaceEnv:
    """Deterministic single-car race environment."""

    def __init__(self, spec: ScenarioSpec):
        self.spec = spec
        self.cfg = spec.cfg
        self._disturbances = dict(spec.disturbances)
        self._extra_disturbance = 0.0
        self.state: RaceState | None = None
        self.k = 0
        self.t_lap_prev = 0.0
        self.done = True

    def reset(self) -> np.ndarray:
        self.state = RaceState.initial(self.cfg)
        self.k = 0
        self.t_lap_prev = 0.0
        self.done = False
        self._extra_disturbance = 0.0
        return observe(self.state, self.t_lap_prev, self.k, self.cfg)

    def inject_disturbance(self, tw_delta: float) -> float:
        """Apply an unscheduled wear jump to the current state immediately.

        Equivalent to a scheduled disturbance at the just-finished lap.
        Returns the new wear level.
        """
        self.state = replace(self.state, wear=min(1.0, self.state.wear + tw_delta))
        return self.state.wear

    def step(self, action: AgentAction) -> StepResult:
        if self.done or self.state is None:
            raise SteppedAfterDone("episode is finished; call reset()")
        act = action.clipped()
        de_f_raw, de_b_raw = map_actions(act.f, act.b, self.cfg)
        ps, forced = enforce_compound_rule(
            self.state.compound_changes, self.state.compound, act.ps, self.k, self.cfg
        )
        de_b, b_case = overwrite_battery(self.state.battery, de_b_raw, self.k, self.cfg)
        de_f, f_case = overwrite_fuel(self.state.fuel, de_f_raw, self.k, self.cfg)
        kind = lap_kind(ps, self.state.outlap)
        inp = ControlInput(de_b=de_b, de_f=de_f, ps=ps)
        nxt, t_lap = step(
            self.state, inp, self.cfg, mode=StepMode.STRICT, allow_out_of_box=True
        )
        if self.k in self._disturbances:
            nxt = replace(nxt, wear=min(1.0, nxt.wear + self._disturbances[self.k]))

        record = LapRecord(
            k=self.k, e_b=self.state.battery, e_f=self.state.fuel, m_car=self.state.mass,
            tw=self.state.wear, tc=int(self.state.compound), ps=ps,
            de_b=de_b, de_f=de_f, t_lap=t_lap, t_race=nxt.race_time,
            kind=kind.value, tire_age=self.state.tire_age,
            compound_changes=nxt.compound_changes,
        )
        self.state = nxt
        self.k += 1
        self.t_lap_prev = t_lap
        self.done = self.k >= self.cfg.n_laps
        reward = T_LAP_CONST - t_lap
        obs = observe(self.state, self.t_lap_prev, self.k, self.cfg)
        info = {
            "applied": inp,
            "battery_case": b_case,
            "fuel_case": f_case,
            "forced_compound": forced,
            "out_of_box": bool(
                de_f < self.cfg.fuel_per_lap_min - 1e-12
                or de_f > self.cfg.fuel_per_lap_max + 1e-12
                or de_b < self.cfg.deploy_limit - 1e-12
                or de_b > self.cfg.recharge_limit + 1e-12
            ),
            "kind": kind.value,
            "record": record,
            "legal": nxt.compound_changes >= 1,
        }
        return StepResult(obs=obs, reward=reward, done=self.done, info=info)
