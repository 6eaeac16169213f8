"""Monte Carlo laboratory for ranked interacting diffusions.

Simulates finite truncations of rank-based particle systems (Atlas drifts
and generalizations), tracks gap processes and collision local times,
couples trajectories synchronously, detects excursions of coupled
differences, and estimates occupancy measures against product-exponential
reference laws.
"""

from .config import ConfigError, ExperimentConfig, parse_config, write_snapshot
from .coupling import (
    CoupledRecord,
    L1IdentityReport,
    couple,
    drift_domination_run,
    verify_l1_identity,
)
from .diagnostics import (
    AnalyticBoundValues,
    BoundQuery,
    DoaReport,
    Ecdf,
    OccupancyEstimate,
    analytic_bounds,
    doa_experiment,
    gaussian_tail,
    ks_to_exponential,
    occupancy,
    two_sample_ks,
    two_sample_ks_critical,
)
from .excursions import (
    ExcursionRecord,
    ExcursionTailReport,
    detect_excursions,
    excursion_tail_stats,
    t_chain,
    write_excursions_jsonl,
)
from .experiments import (
    ExperimentFailure,
    RunResult,
    alt_model_step_config,
    domination_constant,
    model_from_config,
    run,
    truncation_doubling_check,
)
from .models import (
    ConditionDiagnostic,
    InitialCondition,
    ModelSpec,
    as_gap_vector,
    check_conditions,
    prefix_positions,
    sample_alt_model_gaps,
    sample_finite_atlas_gaps,
    sample_stationary_gaps,
)
from .reflect import (
    GapState,
    PositionTrajectory,
    ReflectionSolveResult,
    SkorokhodSolveError,
    Trajectory,
    reflection_matrix,
    reflection_matrix_inverse,
    simulate,
    simulate_unranked,
    solve_skorokhod,
    step_ranked,
)
from .rng import NoiseStream

__all__ = [
    "AnalyticBoundValues",
    "BoundQuery",
    "ConditionDiagnostic",
    "ConfigError",
    "CoupledRecord",
    "DoaReport",
    "Ecdf",
    "ExcursionRecord",
    "ExcursionTailReport",
    "ExperimentConfig",
    "ExperimentFailure",
    "GapState",
    "InitialCondition",
    "L1IdentityReport",
    "ModelSpec",
    "NoiseStream",
    "OccupancyEstimate",
    "PositionTrajectory",
    "ReflectionSolveResult",
    "RunResult",
    "SkorokhodSolveError",
    "Trajectory",
    "alt_model_step_config",
    "analytic_bounds",
    "as_gap_vector",
    "check_conditions",
    "couple",
    "detect_excursions",
    "doa_experiment",
    "domination_constant",
    "drift_domination_run",
    "excursion_tail_stats",
    "gaussian_tail",
    "ks_to_exponential",
    "model_from_config",
    "occupancy",
    "parse_config",
    "prefix_positions",
    "reflection_matrix",
    "reflection_matrix_inverse",
    "run",
    "sample_alt_model_gaps",
    "sample_finite_atlas_gaps",
    "sample_stationary_gaps",
    "simulate",
    "simulate_unranked",
    "solve_skorokhod",
    "step_ranked",
    "t_chain",
    "truncation_doubling_check",
    "two_sample_ks",
    "two_sample_ks_critical",
    "verify_l1_identity",
    "write_snapshot",
]

__version__ = "0.1.0"
