"""Bayesian social learning over time-varying networks with a truth agent.

Simulates the noisy belief dynamics and its deterministic expectation,
and numerically verifies the contraction bounds, convergence rates, and
the alternating counterexample schedule that the model supports.
"""

from .analysis import (
    TOL,
    BoundCheck,
    ConsensusVerdict,
    CounterexampleVerdict,
    MomentReport,
    RateFit,
    StandardCase,
    burn_in_threshold,
    check_contraction,
    check_diagonal_bound,
    check_norm_inequalities,
    check_product_decay,
    check_transition_identities,
    check_truth_pull_accumulation,
    consensus_verdict,
    counterexample_check,
    estimate_deviation_moments,
    fit_rate,
    fourth_moment_summary,
    norm_inf,
    norm_max,
    standard_schedule_set,
    sweep_window_checks,
)
from .config import (
    ConfigError,
    ExperimentConfig,
    RatefitSpec,
    ScheduleSpec,
    VerifySpec,
    build_schedule,
    load_config,
    parse_config,
    serialize_config,
)
from .dynamics import (
    BeliefState,
    EnsembleResult,
    SignalBatch,
    SystemParams,
    Trajectory,
    emit_signals,
    initial_state,
    rng_stream,
    run_ensemble,
    run_simulation,
    run_stream,
    step_mean_process,
    step_per_agent,
    update_agent,
)
from .expected import (
    ExpectedTrajectory,
    TransitionBundle,
    bundle_at,
    reduced_product,
    run_expected,
    step_expected,
    transition_bundle,
)
from .schedules import (
    CounterexampleSchedule,
    DegreeMatrix,
    GraphSchedule,
    PeriodicSchedule,
    PrecisionLedger,
    RandomSchedule,
    ScheduleConstructionError,
    ScheduleHorizonError,
    SwitchRecord,
    TableSchedule,
    TruthHearingVerdict,
    default_pull_tolerance,
    degree_at,
    make_counterexample_schedule,
    make_periodic_schedule,
    make_random_schedule,
    make_table_schedule,
    max_degree,
    precision_at,
    verify_truth_hearing,
)
from .tables import (
    check_report_text,
    files_match,
    read_table,
    trajectory_norms,
    write_check_report,
    write_table,
    write_trajectory,
)

__version__ = "0.1.0"

__all__ = [
    "TOL",
    "BeliefState",
    "BoundCheck",
    "ConfigError",
    "ConsensusVerdict",
    "CounterexampleSchedule",
    "CounterexampleVerdict",
    "DegreeMatrix",
    "EnsembleResult",
    "ExpectedTrajectory",
    "ExperimentConfig",
    "GraphSchedule",
    "MomentReport",
    "PeriodicSchedule",
    "PrecisionLedger",
    "RandomSchedule",
    "RateFit",
    "RatefitSpec",
    "ScheduleConstructionError",
    "ScheduleHorizonError",
    "ScheduleSpec",
    "SignalBatch",
    "StandardCase",
    "SwitchRecord",
    "SystemParams",
    "TableSchedule",
    "Trajectory",
    "TransitionBundle",
    "TruthHearingVerdict",
    "VerifySpec",
    "build_schedule",
    "bundle_at",
    "burn_in_threshold",
    "check_contraction",
    "check_diagonal_bound",
    "check_norm_inequalities",
    "check_product_decay",
    "check_report_text",
    "check_transition_identities",
    "check_truth_pull_accumulation",
    "consensus_verdict",
    "counterexample_check",
    "default_pull_tolerance",
    "degree_at",
    "emit_signals",
    "estimate_deviation_moments",
    "files_match",
    "fit_rate",
    "fourth_moment_summary",
    "initial_state",
    "load_config",
    "make_counterexample_schedule",
    "make_periodic_schedule",
    "make_random_schedule",
    "make_table_schedule",
    "max_degree",
    "norm_inf",
    "norm_max",
    "parse_config",
    "precision_at",
    "read_table",
    "reduced_product",
    "rng_stream",
    "run_ensemble",
    "run_expected",
    "run_simulation",
    "run_stream",
    "serialize_config",
    "standard_schedule_set",
    "step_expected",
    "step_mean_process",
    "step_per_agent",
    "sweep_window_checks",
    "trajectory_norms",
    "transition_bundle",
    "update_agent",
    "verify_truth_hearing",
    "write_check_report",
    "write_table",
    "write_trajectory",
]
