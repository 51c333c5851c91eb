"""Observer-based iterative solving of linear algebraic equations ``Y_d = G U``."""
from .errors import *  # noqa: F401,F403
from .lalg import DEFAULT_TOL, RankFactorization, full_rank_factorization, rref
from .solver import (
    Custom,
    Deadbeat,
    Gain,
    LaeProblem,
    NilpotentKind,
    SigmaTranspose,
    Solvability,
    SolverConfig,
    SolveOutcome,
    SolutionSet,
    classify_solvability,
    deadbeat_gain,
    default_gain,
    iterate_once,
    make_gain,
    projected_target,
    solution_set,
    solve,
    validate_gain,
)

__version__ = "0.1.0"
