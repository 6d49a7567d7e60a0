"""Deterministic lap-by-lap race dynamics.

Pure functions over value types: state transitions for energies, mass, race
time, tire compound, wear and regulation bookkeeping, plus a full-strategy
simulator. Everything is driven by per-lap control inputs, so identical
(config, inputs) pairs give bit-identical trajectories.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field, replace
from enum import Enum

from .config import Compound, RaceConfig
from .laptime import LapKind, lap_kind, lap_time


class BoundViolation(ValueError):
    """A state bound was crossed in strict mode."""


class InfeasibleStrategy(ValueError):
    """A simulated strategy violated a constraint; carries lap and reason."""

    def __init__(self, lap: int, reason: str):
        super().__init__(f"lap {lap}: {reason}")
        self.lap = lap
        self.reason = reason


class StepMode(Enum):
    STRICT = "strict"   # raise BoundViolation on any state-bound crossing
    CLAMP = "clamp"     # clamp inputs so states stay inside their bounds


_EPS = 1e-7        # state-bound slack for solver dust
_EPS_INPUT = 1e-6  # input-box slack; solver feasibility is 1e-8 on states


@dataclass(frozen=True)
class RaceState:
    """Full per-lap system state at the start of a lap."""

    battery: float            # MJ in the battery
    fuel: float               # MJ of fuel energy remaining
    mass: float               # kg, car plus remaining fuel
    race_time: float          # s since the start
    compound_changes: int     # number of stops that mounted a different compound
    compound: Compound
    wear: float               # dimensionless tire wear in [0, 1]
    tire_age: int             # laps on the current set; diagnostic only
    outlap: bool              # True if this lap exits the pit lane

    @classmethod
    def initial(cls, cfg: RaceConfig) -> "RaceState":
        return cls(
            battery=cfg.battery_capacity,
            fuel=cfg.initial_fuel_energy,
            mass=cfg.initial_mass,
            race_time=0.0,
            compound_changes=0,
            compound=cfg.initial_compound,
            wear=0.0,
            tire_age=0,
            outlap=False,
        )


@dataclass(frozen=True)
class ControlInput:
    """Physical inputs for one lap.

    de_b is the net battery delta (negative depletes), de_f the fuel energy
    burned, ps the pit decision (0 = stay out, else compound code to mount).
    """

    de_b: float
    de_f: float
    ps: int = 0

    def __post_init__(self):
        if self.ps not in (0, 1, 2, 3):
            raise ValueError(f"pit action must be in 0..3, got {self.ps}")


def nominal_input(cfg: RaceConfig, ps: int = 0) -> ControlInput:
    """Charge-sustain, nominal-fuel input."""
    return ControlInput(de_b=0.0, de_f=cfg.fuel_per_lap_nominal, ps=ps)


# ---------------------------------------------------------------------------
# Elementary updates


def update_compound(tc: Compound | int, ps: int) -> Compound:
    """Compound after the lap: the mounted one on a stop, unchanged otherwise."""
    return Compound(ps) if ps > 0 else Compound(tc)


def update_compound_changes(b: int, tc: Compound | int, ps: int) -> int:
    """Counter of stops that actually changed compound (regulation needs >= 1)."""
    return b + 1 if ps > 0 and ps != int(tc) else b


def update_tire_age(ta: int, ps: int) -> int:
    return 0 if ps > 0 else ta + 1


def update_tire_wear(
    tw: float, m_car: float, m_car0: float, tc: Compound | int, ps: int, cfg: RaceConfig
) -> float:
    """Next-lap wear: 0 after a stop, else the compound recursion, capped at 1."""
    if ps > 0:
        return 0.0
    return min(1.0, cfg.tire(Compound(tc)).wear_step(tw, m_car / m_car0))


def step_physical(
    state: RaceState,
    inp: ControlInput,
    lap_time_s: float,
    cfg: RaceConfig,
    mode: StepMode = StepMode.STRICT,
    allow_out_of_box: bool = False,
) -> RaceState:
    """Apply the energy/mass/time updates for one lap.

    In strict mode the resulting battery and fuel levels must stay inside
    their bounds; callers feeding overwritten inputs (which may leave the
    nominal input boxes) must say so via allow_out_of_box.
    """
    de_b, de_f = inp.de_b, inp.de_f
    if not allow_out_of_box and mode is StepMode.STRICT:
        if not cfg.deploy_limit - _EPS_INPUT <= de_b <= cfg.recharge_limit + _EPS_INPUT:
            raise BoundViolation(f"battery input {de_b} outside box")
        if not cfg.fuel_per_lap_min - _EPS_INPUT <= de_f <= cfg.fuel_per_lap_max + _EPS_INPUT:
            raise BoundViolation(f"fuel input {de_f} outside box")
    if mode is StepMode.CLAMP:
        de_b = min(max(de_b, -state.battery), cfg.battery_capacity - state.battery)
        de_f = min(de_f, state.fuel)

    battery = state.battery + de_b
    fuel = state.fuel - de_f
    if mode is StepMode.STRICT:
        if battery < -_EPS or battery > cfg.battery_capacity + _EPS:
            raise BoundViolation(f"battery level {battery} outside [0, {cfg.battery_capacity}]")
        if fuel < -_EPS:
            raise BoundViolation(f"fuel level {fuel} below zero")
    return replace(
        state,
        battery=battery,
        fuel=fuel,
        mass=state.mass - de_f / cfg.fuel_energy_density,
        race_time=state.race_time + lap_time_s,
    )


def step(
    state: RaceState,
    inp: ControlInput,
    cfg: RaceConfig,
    m_car0: float | None = None,
    mode: StepMode = StepMode.STRICT,
    allow_out_of_box: bool = False,
) -> tuple[RaceState, float]:
    """Advance one lap: compute the lap time, then apply every update."""
    m_car0 = cfg.initial_mass if m_car0 is None else m_car0
    kind = lap_kind(inp.ps, state.outlap)
    t_lap = lap_time(
        state.battery, inp.de_b, inp.de_f, state.mass, state.wear,
        state.compound, kind, cfg,
    )
    nxt = step_physical(state, inp, t_lap, cfg, mode=mode, allow_out_of_box=allow_out_of_box)
    nxt = replace(
        nxt,
        compound=update_compound(state.compound, inp.ps),
        compound_changes=update_compound_changes(state.compound_changes, state.compound, inp.ps),
        wear=update_tire_wear(state.wear, state.mass, m_car0, state.compound, inp.ps, cfg),
        tire_age=update_tire_age(state.tire_age, inp.ps),
        outlap=inp.ps > 0,
    )
    return nxt, t_lap


# ---------------------------------------------------------------------------
# Episode bookkeeping


@dataclass
class LapRecord:
    k: int
    e_b: float
    e_f: float
    m_car: float
    tw: float
    tc: int
    ps: int
    de_b: float
    de_f: float
    t_lap: float
    t_race: float
    kind: str = "normal"
    tire_age: int = 0
    compound_changes: int = 0


CSV_COLUMNS = ["k", "e_b", "e_f", "m_car", "tw", "tc", "ps", "de_b", "de_f", "t_lap", "t_race"]


@dataclass
class EpisodeLog:
    """Per-lap trajectory of one simulated race."""

    cfg: RaceConfig
    laps: list[LapRecord] = field(default_factory=list)
    final_state: RaceState | None = None

    @property
    def total_time(self) -> float:
        return self.laps[-1].t_race if self.laps else 0.0

    @property
    def legal(self) -> bool:
        return self.final_state is not None and self.final_state.compound_changes >= 1

    @property
    def stops(self) -> list[tuple[int, Compound]]:
        return [(rec.k, Compound(rec.ps)) for rec in self.laps if rec.ps > 0]

    def to_csv(self, extra_columns: dict[str, list] | None = None) -> str:
        buf = io.StringIO()
        cols = list(CSV_COLUMNS) + sorted(extra_columns or {})
        writer = csv.writer(buf)
        writer.writerow(cols)
        for i, rec in enumerate(self.laps):
            row = [getattr(rec, c) for c in CSV_COLUMNS]
            for name in cols[len(CSV_COLUMNS):]:
                row.append(extra_columns[name][i])
            writer.writerow(row)
        return buf.getvalue()

    def to_jsonl(self) -> str:
        lines = [json.dumps(vars(rec), sort_keys=True) for rec in self.laps]
        return "\n".join(lines) + "\n"


def rollout(
    cfg: RaceConfig,
    state: RaceState,
    inputs: list[ControlInput],
    start_lap: int = 0,
    m_car0: float | None = None,
    mode: StepMode = StepMode.STRICT,
    allow_out_of_box: bool = False,
    disturbances: dict[int, float] | None = None,
) -> EpisodeLog:
    """Roll out laps start_lap .. start_lap+len(inputs)-1 from a given state.

    Raises InfeasibleStrategy (with the first offending lap) if a state bound
    is violated in strict mode.
    """
    m0 = (cfg.initial_mass if m_car0 is None else m_car0)
    log = EpisodeLog(cfg=cfg)
    for j, inp in enumerate(inputs):
        k = start_lap + j
        kind = lap_kind(inp.ps, state.outlap)
        try:
            nxt, t_lap = step(state, inp, cfg, m_car0=m0, mode=mode, allow_out_of_box=allow_out_of_box)
        except BoundViolation as err:
            raise InfeasibleStrategy(k, str(err)) from err
        if disturbances and k in disturbances:
            nxt = replace(nxt, wear=min(1.0, nxt.wear + disturbances[k]))
        log.laps.append(LapRecord(
            k=k, e_b=state.battery, e_f=state.fuel, m_car=state.mass, tw=state.wear,
            tc=int(state.compound), ps=inp.ps, de_b=inp.de_b, de_f=inp.de_f,
            t_lap=t_lap, t_race=nxt.race_time, kind=kind.value,
            tire_age=state.tire_age, compound_changes=nxt.compound_changes,
        ))
        state = nxt
    log.final_state = state
    return log


def simulate_strategy(
    cfg: RaceConfig,
    inputs: list[ControlInput],
    mode: StepMode = StepMode.STRICT,
    allow_out_of_box: bool = False,
    disturbances: dict[int, float] | None = None,
) -> EpisodeLog:
    """Roll out a full race from the standard starting conditions."""
    if len(inputs) != cfg.n_laps:
        raise InfeasibleStrategy(0, f"expected {cfg.n_laps} inputs, got {len(inputs)}")
    return rollout(
        cfg, RaceState.initial(cfg), inputs,
        mode=mode, allow_out_of_box=allow_out_of_box, disturbances=disturbances,
    )


@dataclass(frozen=True)
class Strategy:
    """Ordered pit stops plus the starting compound."""

    initial: Compound
    stops: tuple[tuple[int, Compound], ...]

    def __post_init__(self):
        laps = [lap for lap, _ in self.stops]
        if laps != sorted(set(laps)):
            raise ValueError("stop laps must be strictly increasing")

    def __str__(self) -> str:
        parts = [f"{self.initial.label}_0"]
        parts += [f"{c.label}_{lap}" for lap, c in self.stops]
        return "(" + ", ".join(parts) + ")"

    @property
    def n_stops(self) -> int:
        return len(self.stops)


def strategy_of(log: EpisodeLog) -> Strategy:
    """Strategy string of a completed episode, e.g. (M_0, M_18, S_39)."""
    initial = Compound(log.laps[0].tc) if log.laps else log.cfg.initial_compound
    return Strategy(initial=initial, stops=tuple(log.stops))


def inputs_for_stops(
    cfg: RaceConfig, stops: dict[int, Compound | int], de_b: float = 0.0, de_f: float | None = None
) -> list[ControlInput]:
    """Constant-allocation input list with the given pit schedule."""
    de_f = cfg.fuel_per_lap_nominal if de_f is None else de_f
    return [
        ControlInput(de_b=de_b, de_f=de_f, ps=int(stops.get(k, 0)))
        for k in range(cfg.n_laps)
    ]
