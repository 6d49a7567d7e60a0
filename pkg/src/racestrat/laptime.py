"""Analytic lap-time maps: nominal lap time per lap kind plus tire correction.

The nominal map is affine in car mass, fuel allocation and net battery
depletion, with a twice-differentiable hinge penalizing net recharge beyond
the free recuperation capacity of the lap (larger on laps that enter the pit
lane, where braking for the speed limit recuperates for free). Smooth walls
guard the battery bounds so the map stays a total function; inside the
feasible set they are exactly zero. Everything here is C^2, which the
relaxation-based optimizer requires.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .config import Compound, LapTimeParams, RaceConfig, TireParams


class LapKind(Enum):
    NORMAL = "normal"
    INLAP = "inlap"
    OUTLAP = "outlap"
    OUT_INLAP = "out_inlap"

    @property
    def enters_pit(self) -> bool:
        return self in (LapKind.INLAP, LapKind.OUT_INLAP)


class CalibrationFailure(ValueError):
    """Raised when the calibration targets cannot be met."""


def lap_kind(ps: int, outlap: bool) -> LapKind:
    """Kind of the current lap given the pit decision and the outlap flag."""
    if ps > 0:
        return LapKind.OUT_INLAP if outlap else LapKind.INLAP
    return LapKind.OUTLAP if outlap else LapKind.NORMAL


def kind_offset(kind: LapKind, p: LapTimeParams) -> float:
    return {
        LapKind.NORMAL: 0.0,
        LapKind.INLAP: p.inlap_offset,
        LapKind.OUTLAP: p.outlap_offset,
        LapKind.OUT_INLAP: p.out_inlap_offset,
    }[kind]


def smooth_hinge(u: float) -> float:
    """C^2 ramp: 0 for u <= 0, cubic blend on (0, 1], quadratic beyond."""
    if u <= 0.0:
        return 0.0
    if u <= 1.0:
        return u * u * u / 3.0
    return u * u - u + 1.0 / 3.0


def smooth_hinge_d(u: float) -> float:
    if u <= 0.0:
        return 0.0
    if u <= 1.0:
        return u * u
    return 2.0 * u - 1.0


def free_recharge(kind: LapKind, p: LapTimeParams) -> float:
    """Penalty-free net recharge for the lap kind, in MJ."""
    extra = p.inlap_recharge_bonus if kind.enters_pit else 0.0
    return p.free_recharge + extra


def nominal_lap_time(
    e_b: float,
    de_b: float,
    de_f: float,
    m_car: float,
    kind: LapKind,
    p: LapTimeParams,
    cfg: RaceConfig,
) -> float:
    """Nominal lap time before the tire-wear correction.

    Total function: out-of-bound arguments are admitted and punished by the
    smooth walls instead of raising.
    """
    s = p.penalty_scale
    t = p.base_time + kind_offset(kind, p)
    t += p.mass_gain * (m_car - cfg.empty_mass)
    t += p.deploy_gain * de_b
    t -= p.fuel_gain * (de_f - cfg.fuel_per_lap_nominal)
    t += p.recharge_penalty * smooth_hinge((de_b - free_recharge(kind, p)) / s)
    t += p.recharge_penalty * smooth_hinge((e_b + de_b - cfg.battery_capacity) / s)
    t += p.low_bound_penalty * smooth_hinge(-(e_b + de_b) / s)
    return t


def nominal_lap_time_grad(
    e_b: float,
    de_b: float,
    de_f: float,
    m_car: float,
    kind: LapKind,
    p: LapTimeParams,
    cfg: RaceConfig,
) -> tuple[float, float, float, float]:
    """Analytic partials (d/d e_b, d/d de_b, d/d de_f, d/d m_car)."""
    s = p.penalty_scale
    hinge_d = smooth_hinge_d((de_b - free_recharge(kind, p)) / s) / s
    wall_hi_d = smooth_hinge_d((e_b + de_b - cfg.battery_capacity) / s) / s
    wall_lo_d = smooth_hinge_d(-(e_b + de_b) / s) / s
    d_eb = p.recharge_penalty * wall_hi_d - p.low_bound_penalty * wall_lo_d
    d_deb = p.deploy_gain + p.recharge_penalty * (hinge_d + wall_hi_d) - p.low_bound_penalty * wall_lo_d
    d_def = -p.fuel_gain
    d_m = p.mass_gain
    return d_eb, d_deb, d_def, d_m


def tire_correction(tw: float, compound: Compound | int, tp: TireParams | None = None, cfg: RaceConfig | None = None) -> float:
    """Additional lap time from wear on the given compound.

    Accepts either explicit per-compound params or a config to pull them from.
    """
    if tp is None:
        if cfg is None:
            raise ValueError("need tire params or a config")
        tp = cfg.tire(Compound(compound))
    return tp.correction(tw)


def lap_time(
    e_b: float,
    de_b: float,
    de_f: float,
    m_car: float,
    tw: float,
    compound: Compound | int,
    kind: LapKind,
    cfg: RaceConfig,
) -> float:
    base = nominal_lap_time(e_b, de_b, de_f, m_car, kind, cfg.lap_time, cfg)
    return base + tire_correction(tw, compound, cfg=cfg)


# ---------------------------------------------------------------------------
# Calibration


@dataclass(frozen=True)
class CalibrationTargets:
    """Anchor values the surrogate must reproduce at the reference condition.

    Reference condition: full battery, charge sustain, nominal fuel, full
    initial mass, fresh tires. The crossover anchor is the tire age at which
    the per-lap soft correction first exceeds the hard one when both wear
    from fresh under the same mass profile.
    """

    normal: float = 93.1
    inlap: float = 104.6
    outlap: float = 108.2
    out_inlap: float = 119.7
    fresh_soft: float = 0.0
    fresh_medium: float = 0.3
    fresh_hard: float = 2.0
    crossover_age: int = 18
    crossover_window: tuple[int, int] = (15, 21)
    mass_gain: float = 0.031
    medium_curvature: float = 6.5
    hard_curvature: float = 10.0


def simulated_wear(tp: TireParams, ages: int, mass_ratio: float = 1.0) -> np.ndarray:
    """Wear trajectory tw[0..ages] from fresh at a fixed mass ratio."""
    tw = np.zeros(ages + 1)
    for k in range(ages):
        tw[k + 1] = min(1.0, tp.wear_step(tw[k], mass_ratio))
    return tw


def correction_crossover_age(soft: TireParams, hard: TireParams, max_age: int = 60) -> int:
    """First tire age at which the soft correction exceeds the hard one."""
    tw_s = simulated_wear(soft, max_age)
    tw_h = simulated_wear(hard, max_age)
    for age in range(max_age + 1):
        if soft.correction(tw_s[age]) > hard.correction(tw_h[age]):
            return age
    return max_age + 1


def calibrate(targets: CalibrationTargets | None = None, cfg: RaceConfig | None = None) -> tuple[LapTimeParams, list[TireParams]]:
    """Fit the free surrogate coefficients to the anchor targets.

    The lap-kind anchors are affinely reachable, so the fit is exact: the
    base time absorbs the mass term and each pit offset is the difference to
    the normal lap. The soft wear curvature is chosen so the soft and hard
    correction curves cross at the target age.
    """
    if targets is None:
        raise CalibrationFailure("no calibration targets given")
    cfg = cfg or RaceConfig()

    base_time = targets.normal - targets.mass_gain * cfg.fuel_mass
    lt = LapTimeParams(
        base_time=base_time,
        mass_gain=targets.mass_gain,
        inlap_offset=targets.inlap - targets.normal,
        outlap_offset=targets.outlap - targets.normal,
        out_inlap_offset=targets.out_inlap - targets.normal,
    )

    hard = TireParams(
        cfg.hard.wear_gain, cfg.hard.wear_mass_gain, cfg.hard.wear_offset,
        targets.fresh_hard, targets.hard_curvature,
    )
    medium = TireParams(
        cfg.medium.wear_gain, cfg.medium.wear_mass_gain, cfg.medium.wear_offset,
        targets.fresh_medium, targets.medium_curvature,
    )
    age = targets.crossover_age
    tw_s = simulated_wear(cfg.soft, age)[age]
    tw_h = simulated_wear(cfg.hard, age)[age]
    if tw_s <= 0:
        raise CalibrationFailure("soft wear trajectory is degenerate")
    soft_curvature = (targets.fresh_hard + targets.hard_curvature * tw_h**2 - targets.fresh_soft) / tw_s**2
    soft = TireParams(
        cfg.soft.wear_gain, cfg.soft.wear_mass_gain, cfg.soft.wear_offset,
        targets.fresh_soft, soft_curvature,
    )

    # Verify the anchors actually hold before handing the params out.
    check_cfg = RaceConfig(
        n_laps=cfg.n_laps, empty_mass=cfg.empty_mass, fuel_mass=cfg.fuel_mass,
        fuel_energy_density=cfg.fuel_energy_density, lap_time=lt,
        soft=soft, medium=medium, hard=hard,
    )
    anchors = {
        LapKind.NORMAL: targets.normal,
        LapKind.INLAP: targets.inlap,
        LapKind.OUTLAP: targets.outlap,
        LapKind.OUT_INLAP: targets.out_inlap,
    }
    residuals = {}
    for kind, want in anchors.items():
        got = nominal_lap_time(
            check_cfg.battery_capacity, 0.0, check_cfg.fuel_per_lap_nominal,
            check_cfg.initial_mass, kind, lt, check_cfg,
        )
        residuals[kind.value] = got - want
    worst = max(abs(r) for r in residuals.values())
    if worst > 1e-9:
        raise CalibrationFailure(f"anchor residuals too large: {residuals}")
    lo, hi = targets.crossover_window
    xo = correction_crossover_age(soft, hard)
    if not lo <= xo <= hi:
        raise CalibrationFailure(f"soft/hard crossover at age {xo}, outside [{lo}, {hi}]")
    return lt, [soft, medium, hard]
