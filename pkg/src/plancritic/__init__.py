"""Plan generation, validation, and iterative critique for STRIPS planning."""

from .critics import CriticBackend, CriticConfig, CritiqueLabel, extract_verdict
from .generators import Benchmark, GenSpec, generate, obfuscate
from .orchestrator import LoopConfig, PlannerConfig, RunRecord, run_batch, run_problem
from .pddl import (
    ActionSchema,
    Atom,
    DomainDef,
    GroundAction,
    Plan,
    PddlError,
    ProblemDef,
    parse_domain,
    parse_plan,
    parse_problem,
    print_domain,
    print_plan,
    print_problem,
)
from .report import Metrics, score, summary_line, wald_ci
from .search import SearchLimits, SearchStatus, bfs_plan, run_plan
from .semantics import (
    Correct,
    GoalNotReached,
    ValidationResult,
    WrongAtStep,
    validate_plan,
)

__version__ = "0.1.0"

__all__ = [
    "ActionSchema",
    "Atom",
    "Benchmark",
    "Correct",
    "CriticBackend",
    "CriticConfig",
    "CritiqueLabel",
    "DomainDef",
    "GenSpec",
    "GoalNotReached",
    "GroundAction",
    "LoopConfig",
    "Metrics",
    "PddlError",
    "Plan",
    "PlannerConfig",
    "ProblemDef",
    "RunRecord",
    "SearchLimits",
    "SearchStatus",
    "ValidationResult",
    "WrongAtStep",
    "__version__",
    "bfs_plan",
    "extract_verdict",
    "generate",
    "obfuscate",
    "parse_domain",
    "parse_plan",
    "parse_problem",
    "print_domain",
    "print_plan",
    "print_problem",
    "run_batch",
    "run_plan",
    "run_problem",
    "score",
    "summary_line",
    "validate_plan",
    "wald_ci",
]
