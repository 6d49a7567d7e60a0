"""Construction of the minimum-race-time optimal control problem.

The decision vector stacks per-lap battery delta, fuel allocation and the
(possibly relaxed) pit variable: x = [de_b[0..N), de_f[0..N), ps[0..N)].
States are eliminated by forward recursion inside the kernel, so the solved
problem only carries box bounds on x plus the inequality list documented in
kernel.py.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..config import Compound, ConfigError, RaceConfig, TireParams
from ..race_model import ControlInput, EpisodeLog, RaceState, StepMode, rollout
from . import kernel


@dataclass
class PitRules:
    """Effective pit-schedule restrictions the search honors."""

    max_stops: int = 4
    min_stop_gap: int = 3         # minimum laps between consecutive stops
    forbidden_laps: frozenset[int] = frozenset()

    def allowed(self, lap: int) -> bool:
        return lap not in self.forbidden_laps


@dataclass
class OcpProblem:
    """A race-time minimization instance, possibly starting mid-race."""

    cfg: RaceConfig
    horizon: int
    start_lap: int
    init: np.ndarray                 # packed initial state, see kernel.py
    lapp: np.ndarray
    tire: np.ndarray
    lims: np.ndarray
    rules: PitRules
    lo: np.ndarray = field(default=None)  # per-lap pit domain lower bounds
    hi: np.ndarray = field(default=None)

    @property
    def n_variables(self) -> int:
        return 3 * self.horizon

    @property
    def n_constraints(self) -> int:
        return kernel.n_constraints(self.horizon, self.rules.min_stop_gap)

    def variable_bounds(self, ps_lo=None, ps_hi=None) -> list[tuple[float, float]]:
        n = self.horizon
        ps_lo = self.lo if ps_lo is None else ps_lo
        ps_hi = self.hi if ps_hi is None else ps_hi
        bounds = [(self.cfg.deploy_limit, self.cfg.recharge_limit)] * n
        bounds += [(self.cfg.fuel_per_lap_min, self.cfg.fuel_per_lap_max)] * n
        bounds += [(float(lo), float(hi)) for lo, hi in zip(ps_lo, ps_hi)]
        return bounds

    def split(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        n = self.horizon
        return x[:n], x[n : 2 * n], x[2 * n :]

    def evaluate(self, x: np.ndarray, lam: np.ndarray | None = None, rho: float = 0.0):
        """Kernel evaluation; lam=None gives the pure objective and gradient."""
        de_b, de_f, ps = self.split(np.asarray(x, dtype=float))
        if lam is None:
            lam = np.zeros(self.n_constraints)
            rho = 0.0
        return kernel.ocp_eval(
            np.ascontiguousarray(de_b), np.ascontiguousarray(de_f),
            np.ascontiguousarray(ps), self.init, self.lapp, self.tire,
            self.lims, lam, rho,
        )

    def objective_and_grad(self, x: np.ndarray) -> tuple[float, np.ndarray]:
        out = self.evaluate(x)
        grad = np.concatenate([out[3], out[4], out[5]])
        return out[0], grad

    def constraints(self, x: np.ndarray) -> np.ndarray:
        return self.evaluate(x)[2]

    def initial_point(self) -> np.ndarray:
        """Feasible-leaning start: drain the battery evenly, burn fuel evenly."""
        n = self.horizon
        de_b = np.full(n, -self.init[0] / n)
        de_b = np.clip(de_b, self.cfg.deploy_limit, self.cfg.recharge_limit)
        de_f = np.full(n, np.clip(self.init[1] / n, self.cfg.fuel_per_lap_min, self.cfg.fuel_per_lap_max))
        ps = self.lo.astype(float).copy()
        return np.concatenate([de_b, de_f, ps])

    def inputs_from(self, x: np.ndarray) -> list[ControlInput]:
        de_b, de_f, ps = self.split(x)
        return [
            ControlInput(float(de_b[k]), float(de_f[k]), int(round(ps[k])))
            for k in range(self.horizon)
        ]

    def initial_state(self) -> RaceState:
        return RaceState(
            battery=float(self.init[0]), fuel=float(self.init[1]), mass=float(self.init[2]),
            race_time=0.0, compound_changes=int(round(self.init[4])),
            compound=Compound(int(round(self.init[3]))), wear=float(self.init[5]),
            tire_age=0, outlap=bool(self.init[6] > 0.5),
        )

    def simulate(self, x: np.ndarray, mode: StepMode = StepMode.STRICT) -> EpisodeLog:
        """Strict simulator replay of an integer-feasible point."""
        return rollout(
            self.cfg, self.initial_state(), self.inputs_from(x),
            start_lap=self.start_lap, mode=mode,
        )


def pack_laptime(cfg: RaceConfig) -> np.ndarray:
    p = cfg.lap_time
    return np.array([
        p.base_time, p.mass_gain, p.deploy_gain, p.fuel_gain,
        p.recharge_penalty, p.low_bound_penalty, p.penalty_scale,
        p.free_recharge, p.inlap_recharge_bonus,
        p.inlap_offset, p.outlap_offset, p.out_inlap_offset,
        cfg.empty_mass, cfg.fuel_per_lap_nominal, cfg.battery_capacity,
        cfg.fuel_energy_density,
    ])


def pack_tires(cfg: RaceConfig) -> np.ndarray:
    ts = (cfg.soft, cfg.medium, cfg.hard)
    return np.array(
        [t.wear_gain for t in ts]
        + [t.wear_mass_gain for t in ts]
        + [t.wear_offset for t in ts]
        + [t.fresh_penalty for t in ts]
        + [t.wear_curvature for t in ts]
        + [cfg.initial_mass]
    )


def pack_state(state: RaceState) -> np.ndarray:
    return np.array([
        state.battery, state.fuel, state.mass, float(int(state.compound)),
        float(state.compound_changes), state.wear, 1.0 if state.outlap else 0.0,
    ])


def build_ocp(
    cfg: RaceConfig,
    rules: PitRules | None = None,
    init_state: RaceState | None = None,
    start_lap: int = 0,
    forbid_first_last: bool = True,
) -> OcpProblem:
    """Assemble the OCP for the whole race or for the tail from a snapshot."""
    for name in ("soft", "medium", "hard"):
        if not isinstance(getattr(cfg, name, None), TireParams):
            raise ConfigError(f"config missing tire parameters for {name!r}")
    if not 0 <= start_lap < cfg.n_laps:
        raise ConfigError(f"start lap {start_lap} outside race")
    horizon = cfg.n_laps - start_lap
    rules = rules or PitRules()
    forbidden = set(rules.forbidden_laps) | set(cfg.forbidden_pit_laps)
    if forbid_first_last:
        forbidden |= {0, cfg.n_laps - 1}
    rules = PitRules(
        max_stops=min(rules.max_stops, cfg.max_stops),
        min_stop_gap=rules.min_stop_gap,
        forbidden_laps=frozenset(forbidden),
    )
    state = init_state or RaceState.initial(cfg)

    lo = np.zeros(horizon)
    hi = np.full(horizon, 3.0)
    for j in range(horizon):
        if not rules.allowed(start_lap + j):
            hi[j] = 0.0

    return OcpProblem(
        cfg=cfg,
        horizon=horizon,
        start_lap=start_lap,
        init=pack_state(state),
        lapp=pack_laptime(cfg),
        tire=pack_tires(cfg),
        lims=np.array([float(rules.max_stops), float(rules.min_stop_gap)]),
        rules=rules,
        lo=lo,
        hi=hi,
    )


def schedule_count(n_laps: int, max_stops: int) -> int:
    """Number of raw pit schedules with up to max_stops stops."""
    return sum(math.comb(n_laps, s) * 3**s for s in range(max_stops + 1))
