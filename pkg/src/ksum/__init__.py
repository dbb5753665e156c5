"""Space-bounded kSUM solvers with metered workspace and a benchmark CLI."""

from .core import (
    KSumInstance,
    SolverReport,
    Witness,
    brute_force_report,
    brute_force_solve,
    generate_random,
    iter_witnesses,
    meet_in_middle,
    plant_solution,
)
from .hashing import (
    AlmostLinearHash,
    HashCascade,
    build_balanced_cascade,
    cascade_eval,
    check_balance,
    sample_hash,
)
from .selfreduce import (
    GroupSplit,
    large_space_solve,
    lv_ksum,
    self_reduce,
    two_sum_space_bounded,
)
from .workspace import (
    BudgetExceededError,
    CapacityError,
    CappedBuffer,
    DedupList,
    SpaceMeter,
    WitnessStream,
    meter_scope,
    paused_pull,
)

__version__ = "0.1.0"

__all__ = [
    "AlmostLinearHash",
    "BudgetExceededError",
    "CapacityError",
    "CappedBuffer",
    "DedupList",
    "GroupSplit",
    "HashCascade",
    "KSumInstance",
    "SolverReport",
    "SpaceMeter",
    "Witness",
    "WitnessStream",
    "brute_force_report",
    "brute_force_solve",
    "build_balanced_cascade",
    "cascade_eval",
    "check_balance",
    "generate_random",
    "iter_witnesses",
    "large_space_solve",
    "lv_ksum",
    "meet_in_middle",
    "meter_scope",
    "paused_pull",
    "plant_solution",
    "sample_hash",
    "self_reduce",
    "two_sum_space_bounded",
]
