"""Noisy QAOA on weighted Max-Cut with automatic control-depth selection.

Simulates the alternating problem/mixer control sequence as an open quantum
system (Lindblad dynamics on dense density matrices), optimizes control
durations with l1-regularized proximal gradient descent, and selects the
control depth by sweeping the regularization strength and scoring each arm
with the exact approximation ratio.
"""

__version__ = "0.1.0"

from .dynamics import (
    ControlSchedule,
    Generator,
    IntegrationDiverged,
    IntegratorConfig,
    System,
    alternating_tags,
    evolve_schedule,
    evolve_segment,
    expectation,
    initial_plus_state,
    lindblad_rhs,
    plus_state_vector,
    unitary_oracle,
)
from .objective import ScheduleObjective
from .operators import (
    NoiseKind,
    NoiseModel,
    build_maxcut_hamiltonian,
    build_mixer,
    build_noise_operators,
    embed_single_qubit,
    pauli,
)
from .optimizer import (
    EvaluationFailed,
    HybridRun,
    OptimizerConfig,
    Trajectory,
    fd_gradient,
    gd_step,
    pg_step,
    run_hybrid,
    run_pg,
    soft_threshold,
)
from .problems import Graph, parse_graph, random_graph, read_graph, serialize_graph, write_graph
from .selection import (
    CutExtrema,
    DepthRecord,
    ExperimentRecord,
    LambdaSchedule,
    SweepResult,
    approximation_ratio,
    brute_force_extrema,
    compact_schedule_objective,
    exhaustive_depth_baseline,
    invariance_check_merge,
    merge_operations,
    run_lambda_sweep,
)

__all__ = [name for name in dir() if not name.startswith("_")]
