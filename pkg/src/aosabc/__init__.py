"""Adaptive operator selection for a binary artificial bee colony solver,
with a set-union knapsack testbed and a statistical benchmark harness."""

from .bench import (
    MatrixResult,
    RankTable,
    RunRecord,
    Variant,
    WilcoxonResult,
    rank_table,
    run_matrix,
    wilcoxon_rank_sum,
)
from .colony import (
    AbcConfig,
    RunResult,
    derive_seeds,
    run,
    run_sequence,
    run_transfer_sequence,
)
from .credit import (
    CreditModel,
    bellman_update,
    compute_reward,
    credit_of,
    fresh_model,
    load_experience,
    save_experience,
    selection_credits,
    update_on_success,
)
from .moo import ParetoArchive, dominates
from .operators import DEFAULT_POOL, MoveContext, OperatorPool, default_pool
from .problem import (
    Evaluation,
    InstanceParseError,
    SukpInstance,
    brute_force_optimum,
    evaluate,
    format_instance,
    generate_instance,
    parse_instance,
    repair,
)
from .selection import SchemeState, make_scheme, select_operator, update_scheme

__version__ = "0.1.0"

__all__ = [
    "AbcConfig", "CreditModel", "DEFAULT_POOL", "Evaluation",
    "InstanceParseError", "MatrixResult", "MoveContext", "OperatorPool",
    "ParetoArchive", "RankTable", "RunRecord", "RunResult", "SchemeState",
    "SukpInstance", "Variant", "WilcoxonResult", "bellman_update",
    "brute_force_optimum", "compute_reward", "credit_of", "default_pool",
    "derive_seeds", "dominates", "evaluate", "format_instance", "fresh_model",
    "generate_instance", "load_experience", "make_scheme", "parse_instance",
    "rank_table", "repair", "run", "run_matrix", "run_sequence",
    "run_transfer_sequence", "save_experience", "select_operator",
    "selection_credits", "update_on_success", "update_scheme",
    "wilcoxon_rank_sum",
]
