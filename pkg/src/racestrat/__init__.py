"""Race strategy engine: simulator, mixed-integer optimizer, RL environment
and agent, benchmarks, and a pit-wall service."""

from .config import (
    Compound,
    ConfigError,
    LapTimeParams,
    RaceConfig,
    TireParams,
    default_config,
    toy_config,
)
from .laptime import LapKind, lap_kind, lap_time, nominal_lap_time, tire_correction
from .race_model import (
    BoundViolation,
    ControlInput,
    EpisodeLog,
    InfeasibleStrategy,
    RaceState,
    StepMode,
    Strategy,
    simulate_strategy,
    step,
    strategy_of,
)

__version__ = "0.1.0"
