"""The ``impulse_reinsurance`` package."""

# SPDX-License-Identifier: BSD-3-Clause

from .model import (
    ClaimClass,
    EconParams,
    ModelParams,
    ThinningStructure,
    claim_distribution,
    derive_constants,
)
from .policy_solver import Solution, eval_q, eval_W, solve
from .qvi_check import check_solution
from .serialization import SolutionDecoder, SolutionEncoder
from .simulator import (
    DividendBand,
    SimConfig,
    Strategy,
    compare_strategies,
    retention_rule,
    simulate,
)

__all__ = [
    "ClaimClass",
    "DividendBand",
    "EconParams",
    "ModelParams",
    "SimConfig",
    "Solution",
    "SolutionDecoder",
    "SolutionEncoder",
    "Strategy",
    "ThinningStructure",
    "check_solution",
    "claim_distribution",
    "compare_strategies",
    "derive_constants",
    "eval_W",
    "eval_q",
    "retention_rule",
    "simulate",
    "solve",
]
__version__ = "1.0.0"
