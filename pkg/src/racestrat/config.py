"""Scenario configuration: car, track, tire and bound parameters for one race.

All quantities are SI except energies, which are in MJ, and lap times in
seconds. A config fully determines the deterministic race model, so two runs
with the same config and inputs produce identical trajectories.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path


class Compound(IntEnum):
    """Tire compound code. Soft trades durability for grip, hard the opposite."""

    SOFT = 1
    MEDIUM = 2
    HARD = 3

    @property
    def label(self) -> str:
        return {Compound.SOFT: "S", Compound.MEDIUM: "M", Compound.HARD: "H"}[self]

    @classmethod
    def from_label(cls, label: str) -> "Compound":
        try:
            return {"S": cls.SOFT, "M": cls.MEDIUM, "H": cls.HARD}[label.upper()]
        except KeyError:
            raise ValueError(f"unknown compound label {label!r}") from None


# Pit action space: 0 = stay out, 1..3 = pit and mount that compound code.
PIT_STAY = 0
PIT_ACTIONS = (0, 1, 2, 3)


class ConfigError(ValueError):
    """Raised for configs that violate the documented invariants."""


@dataclass(frozen=True)
class TireParams:
    """Per-compound wear recursion and lap-time correction coefficients.

    Wear evolves as  tw' = wear_gain * tw + wear_mass_gain * (m / m_ref) + wear_offset
    (reset to 0 by a pit stop, saturated at 1). The lap-time correction is
    fresh_penalty + wear_curvature * tw**2, extended over the whole [0, 1]
    wear range so the optimizer is never boxed in by missing data.
    """

    wear_gain: float
    wear_mass_gain: float
    wear_offset: float
    fresh_penalty: float
    wear_curvature: float

    def wear_step(self, tw: float, mass_ratio: float) -> float:
        return self.wear_gain * tw + self.wear_mass_gain * mass_ratio + self.wear_offset

    def correction(self, tw: float) -> float:
        return self.fresh_penalty + self.wear_curvature * tw * tw


@dataclass(frozen=True)
class LapTimeParams:
    """Coefficients of the analytic nominal lap-time surrogate.

    base_time is the empty-car, charge-sustain, nominal-fuel lap. The pit
    offsets are additive per lap kind. Battery terms: deploy_gain is the
    seconds gained per MJ net depletion; recharging beyond the free
    recuperation window (free_recharge, widened by inlap_recharge_bonus on
    laps that enter the pits) is penalized smoothly with weight
    recharge_penalty on scale penalty_scale. low_bound_penalty guards the
    empty-battery side and defaults to zero because the reference track is
    flat near that bound.
    """

    base_time: float = 90.0
    mass_gain: float = 0.031          # s per kg above empty mass
    deploy_gain: float = 0.30         # s per MJ net battery depletion
    fuel_gain: float = 0.05           # s per MJ extra fuel allocated
    inlap_offset: float = 11.5
    outlap_offset: float = 15.1
    out_inlap_offset: float = 26.6
    recharge_penalty: float = 0.5     # s, weight of the heavy-recharge hinge
    low_bound_penalty: float = 0.0    # s, weight near the empty-battery bound
    penalty_scale: float = 0.25       # MJ, smoothing width of the hinges
    free_recharge: float = 0.5        # MJ of penalty-free net recharge per lap
    inlap_recharge_bonus: float = 1.0  # MJ of extra free recharge on inlaps


@dataclass(frozen=True)
class RaceConfig:
    """Everything that defines one race scenario."""

    n_laps: int = 57
    empty_mass: float = 798.0         # kg
    fuel_mass: float = 100.0          # kg loaded at the start
    fuel_energy_density: float = 43.4  # MJ/kg lower heating value
    battery_capacity: float = 4.0     # MJ, full at the start
    deploy_limit: float = -4.0        # MJ/lap, most negative battery delta
    recharge_limit: float = 2.0       # MJ/lap, most positive battery delta
    fuel_min_frac: float = 0.9        # per-lap fuel box as fractions of nominal
    fuel_max_frac: float = 1.1
    initial_compound: Compound = Compound.MEDIUM
    max_stops: int = 4
    # None means the model default: no stop on the first or final lap (an
    # outlap after the finish line would never pay its cost, which makes a
    # token final-lap stop a regulation loophole).
    forbidden_pit_laps: tuple[int, ...] | None = None
    lap_time: LapTimeParams = field(default_factory=LapTimeParams)
    # Correction coefficients below are the output of laptime.calibrate() on
    # the default targets; tests assert the two stay in sync.
    soft: TireParams = field(default_factory=lambda: TireParams(1.06, 0.004, 0.012, 0.0, 9.186263756547207))
    medium: TireParams = field(default_factory=lambda: TireParams(1.03, 0.003, 0.009, 0.3, 6.5))
    hard: TireParams = field(default_factory=lambda: TireParams(1.01, 0.002, 0.006, 2.0, 10.0))

    def __post_init__(self):
        if self.n_laps < 2:
            raise ConfigError("n_laps must be at least 2")
        if min(self.empty_mass, self.fuel_mass, self.fuel_energy_density, self.battery_capacity) <= 0:
            raise ConfigError("masses, energies and heating value must be positive")
        if not self.deploy_limit < 0 < self.recharge_limit:
            raise ConfigError("deploy_limit must be negative and recharge_limit positive")
        if not 0 < self.fuel_min_frac <= 1 <= self.fuel_max_frac:
            raise ConfigError("fuel fractions must bracket 1")
        if self.forbidden_pit_laps is None:
            object.__setattr__(self, "forbidden_pit_laps", (0, self.n_laps - 1))
        for lap in self.forbidden_pit_laps:
            if not 0 <= lap < self.n_laps:
                raise ConfigError(f"forbidden pit lap {lap} outside race")

    # Derived quantities -----------------------------------------------------

    @property
    def initial_mass(self) -> float:
        return self.empty_mass + self.fuel_mass

    @property
    def initial_fuel_energy(self) -> float:
        return self.fuel_mass * self.fuel_energy_density

    @property
    def fuel_per_lap_nominal(self) -> float:
        """Fuel energy per lap of the constant-allocation strategy."""
        return self.initial_fuel_energy / self.n_laps

    @property
    def fuel_per_lap_min(self) -> float:
        return self.fuel_min_frac * self.fuel_per_lap_nominal

    @property
    def fuel_per_lap_max(self) -> float:
        return self.fuel_max_frac * self.fuel_per_lap_nominal

    def tire(self, compound: Compound | int) -> TireParams:
        return (self.soft, self.medium, self.hard)[int(compound) - 1]

    # Serialization ----------------------------------------------------------

    def to_dict(self) -> dict:
        def enc(obj):
            if dataclasses.is_dataclass(obj):
                return {k: enc(v) for k, v in dataclasses.asdict(obj).items()}
            if isinstance(obj, Compound):
                return int(obj)
            if isinstance(obj, tuple):
                return list(obj)
            return obj

        out = {f.name: enc(getattr(self, f.name)) for f in dataclasses.fields(self)}
        return out

    def to_json(self, path: str | Path | None = None) -> str:
        text = json.dumps(self.to_dict(), indent=2, sort_keys=True)
        if path is not None:
            Path(path).write_text(text + "\n")
        return text

    @classmethod
    def from_dict(cls, data: dict) -> "RaceConfig":
        data = dict(data)
        for key in ("soft", "medium", "hard"):
            if key in data and isinstance(data[key], dict):
                data[key] = TireParams(**data[key])
        if isinstance(data.get("lap_time"), dict):
            data["lap_time"] = LapTimeParams(**data["lap_time"])
        if "initial_compound" in data:
            data["initial_compound"] = Compound(data["initial_compound"])
        if "forbidden_pit_laps" in data:
            data["forbidden_pit_laps"] = tuple(data["forbidden_pit_laps"])
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, source: str | Path) -> "RaceConfig":
        path = Path(source)
        text = path.read_text() if path.exists() else str(source)
        return cls.from_dict(json.loads(text))

    def content_hash(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()[:16]


def default_config() -> RaceConfig:
    """57-lap reference scenario with placeholder car and tire values."""
    return RaceConfig()


def toy_config(n_laps: int = 10) -> RaceConfig:
    """Small race for exhaustive-search tests; fuel scaled to the lap count."""
    return RaceConfig(n_laps=n_laps, fuel_mass=100.0 * n_laps / 57.0)
