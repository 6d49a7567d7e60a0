from .bnb import (
    BnbOptions,
    BnBNode,
    Infeasible,
    OcpSolution,
    TooLarge,
    branch_and_bound,
    exhaustive_oracle,
)
from .nlp import NlpDiverged, NlpResult, solve_nlp
from .ocp import OcpProblem, PitRules, build_ocp, schedule_count
from .reform import (
    compound_offsets,
    pit_indicator,
    selector_weights,
    smooth_base_blend,
    smooth_change_count,
    smooth_compound_update,
    smooth_correction,
    smooth_wear_update,
)
