"""Depth selection: lambda sweeps, schedule merging and Max-Cut ground truth.

The selector runs the regularized optimizer over a geometrically shrinking
grid of regularization strengths, counts the surviving control parameters,
merges adjacent same-generator operations into the effective depth and scores
every arm with the approximation ratio

    r = 1 - (value - c_min) / (c_max - c_min),

where c_min/c_max are the exact extrema of the cut Hamiltonian obtained by
exhaustive enumeration. The exhaustive per-depth baseline provides the ground
truth the selector is validated against.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .dynamics import Generator, IntegratorConfig, System, alternating_tags, as_steps, plus_state_vector, unitary_oracle
from .objective import ScheduleObjective
from .operators import NoiseModel
from .optimizer import OptimizerConfig, run_hybrid, run_pg
from .problems import Graph

MAX_ENUMERATION_NODES = 24


@dataclass(frozen=True)
class CutExtrema:
    """Exact extrema of sum w_ij s_i s_j over all spin assignments.

    Bitstrings are rendered most significant qubit first, so character k from
    the right is the bit of qubit k.
    """

    c_min: float
    c_max: float
    argmin_bits: str
    argmax_bits: str


def brute_force_extrema(graph: Graph) -> CutExtrema:
    """Enumerate all 2^N assignments through their cut values.

    Implemented via H(b) = total_weight - 2 * cut(b), a route independent of
    the Hamiltonian-diagonal construction so the two can cross-check each
    other.
    """
    n = graph.n_nodes
    if n > MAX_ENUMERATION_NODES:
        raise ValueError(f"{n} nodes exceeds the enumeration budget of {MAX_ENUMERATION_NODES}")
    b = np.arange(1 << n, dtype=np.int64)
    cut = np.zeros(1 << n)
    for i, j, w in graph.edges:
        cut += w * (((b >> i) ^ (b >> j)) & 1)
    values = graph.total_weight - 2.0 * cut
    lo, hi = int(np.argmin(values)), int(np.argmax(values))
    return CutExtrema(float(values[lo]), float(values[hi]), format(lo, f"0{n}b"), format(hi, f"0{n}b"))


def approximation_ratio(value: float, extrema: CutExtrema) -> float:
    """Normalized solution quality; 1 at the optimum c_min, 0 at c_max.

    The raw value is returned unclamped so callers can see overshoot from
    integrator tolerances; clamp only when pretty-printing.
    """
    if not extrema.c_max > extrema.c_min:
        raise ValueError("degenerate instance: c_max must exceed c_min")
    return 1.0 - (value - extrema.c_min) / (extrema.c_max - extrema.c_min)


def merge_operations(schedule) -> list[tuple[Generator, float]]:
    """Compact a schedule: drop zero durations, fold same-generator neighbors.

    Folding sums durations (exponentials of one generator compose additively).
    Repeats until stable, so cancellations that create new zeros also collapse.
    The result length is the effective depth.
    """
    steps = [(tag, dur) for tag, dur in as_steps(schedule)]
    while True:
        steps = [(tag, dur) for tag, dur in steps if dur != 0.0]
        merged: list[tuple[Generator, float]] = []
        for tag, dur in steps:
            if merged and merged[-1][0] is tag:
                merged[-1] = (tag, merged[-1][1] + dur)
            else:
                merged.append((tag, dur))
        if merged == steps:
            return merged
        steps = merged


def invariance_check_merge(schedule, merged, system: System, tol: float = 1e-10) -> bool:
    """True iff the merged schedule reproduces the unmerged noiseless final state."""
    psi0 = plus_state_vector(system.n_qubits)
    a = unitary_oracle(psi0, schedule, system)
    b = unitary_oracle(psi0, merged, system)
    return bool(np.max(np.abs(a - b)) <= tol)


def compact_schedule_objective(objective: ScheduleObjective, x: np.ndarray):
    """Compaction hook for hybrid runs: merge, then rebind the objective.

    Returns (reduced objective, reduced starting durations, merged steps).
    """
    merged = merge_operations(zip(objective.tags, x))
    tags = tuple(tag for tag, _ in merged)
    durations = np.array([dur for _, dur in merged], dtype=float)
    return objective.rebind(tags), durations, merged


@dataclass(frozen=True)
class LambdaSchedule:
    """Geometric grid of regularization strengths with an early-stop tolerance.

    The sweep stops once consecutive approximation ratios differ by at most
    plateau_tol (an infinite tolerance therefore stops after the first round)
    or after max_rounds arms.
    """

    initial: float = 6.0
    factor: float = 0.6
    max_rounds: int = 8
    plateau_tol: float = 0.01

    def __post_init__(self) -> None:
        if not self.initial > 0.0:
            raise ValueError("initial lambda must be positive")
        if not 0.0 < self.factor < 1.0:
            raise ValueError("shrink factor must lie in (0, 1)")
        if self.max_rounds < 1:
            raise ValueError("max_rounds must be positive")
        if self.plateau_tol < 0.0:
            raise ValueError("plateau_tol must be nonnegative")

    @property
    def values(self) -> tuple[float, ...]:
        return tuple(self.initial * self.factor**k for k in range(self.max_rounds))


@dataclass
class ExperimentRecord:
    """One sweep arm: regularization strength and what it selected."""

    lam: float
    selected_params: int
    effective_depth: int
    ratio: float
    final_x: np.ndarray
    objective: float
    phase2_ratio: float | None = None
    failed: bool = False
    objective_trace: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if not self.failed:
            if self.effective_depth > self.selected_params:
                raise ValueError("effective depth cannot exceed the selected parameter count")
            if self.selected_params > self.final_x.size:
                raise ValueError("selected parameters cannot exceed the schedule length")

    @property
    def score(self) -> float:
        """Accuracy used for ranking arms: the refined ratio when present."""
        return self.phase2_ratio if self.phase2_ratio is not None else self.ratio


@dataclass
class SweepResult:
    records: list[ExperimentRecord]
    best_index: int | None
    stopped_early_at: int | None = None

    @property
    def best(self) -> ExperimentRecord:
        if self.best_index is None:
            raise RuntimeError("sweep produced no successful arm")
        return self.records[self.best_index]


@dataclass
class DepthRecord:
    """One exhaustive-baseline row: unregularized descent at a fixed depth."""

    p: int
    n_params: int
    ratio: float
    objective: float
    rk4_steps: int


def _run_arm(graph: Graph, noise: NoiseModel, x0: np.ndarray, config: OptimizerConfig,
             lam: float, scale: float, integrator: IntegratorConfig) -> ExperimentRecord:
    system = System.from_graph(graph, noise, scale)
    extrema = brute_force_extrema(graph)
    tags = alternating_tags(x0.size // 2)
    objective = ScheduleObjective(system, integrator, tags)
    arm_cfg = replace(config, lam=lam)
    try:
        if config.hybrid_split is not None:
            run = run_hybrid(objective, compact_schedule_objective, x0, arm_cfg)
            if run.prune.aborted or run.refine.aborted:
                return _failed_record(lam, x0.size)
            final_x = run.prune.final_x
            value = run.prune.final_value
            ratio = approximation_ratio(value, extrema)
            phase2 = approximation_ratio(run.refine.final_value, extrema)
            trace = tuple(run.prune.objective_values) + tuple(run.refine.objective_values)
            merged = run.merged_steps
        else:
            trajectory = run_pg(objective, x0, arm_cfg)
            if trajectory.aborted:
                return _failed_record(lam, x0.size)
            final_x = trajectory.final_x
            value = trajectory.final_value
            ratio = approximation_ratio(value, extrema)
            phase2 = None
            trace = tuple(trajectory.objective_values)
            merged = merge_operations(zip(tags, final_x))
    except (RuntimeError, FloatingPointError):
        return _failed_record(lam, x0.size)
    return ExperimentRecord(
        lam=lam,
        selected_params=int(np.count_nonzero(final_x)),
        effective_depth=len(merged),
        ratio=ratio,
        final_x=np.asarray(final_x, dtype=float),
        objective=float(value),
        phase2_ratio=phase2,
        objective_trace=trace,
    )


def _failed_record(lam: float, size: int) -> ExperimentRecord:
    return ExperimentRecord(
        lam=lam, selected_params=0, effective_depth=0, ratio=math.nan,
        final_x=np.full(size, math.nan), objective=math.nan, failed=True,
    )


def _pick_best(records: Sequence[ExperimentRecord], plateau_tol: float) -> int | None:
    """Leftmost point on the accuracy plateau: among arms within plateau_tol of
    the best score, prefer the fewest selected parameters, then the larger
    lambda, then the earlier arm."""
    ok = [(k, r) for k, r in enumerate(records) if not r.failed]
    if not ok:
        return None
    best_score = max(r.score for _, r in ok)
    window = [(k, r) for k, r in ok if r.score >= best_score - plateau_tol]
    window.sort(key=lambda kr: (kr[1].selected_params, -kr[1].lam, kr[0]))
    return window[0][0]


def run_lambda_sweep(graph: Graph, noise: NoiseModel, x0, config: OptimizerConfig,
                     lam_schedule: LambdaSchedule, *, scale: float = 6.0,
                     integrator: IntegratorConfig = IntegratorConfig(), jobs: int = 1) -> SweepResult:
    """Run one optimization arm per lambda value, shrinking geometrically.

    Sequential mode evaluates the early-stop rule after each arm; with
    jobs > 1 all arms run concurrently and the early stop is skipped (a
    documented behavioral difference). Failed arms are recorded as failed and
    do not abort the sweep. Records come back in grid order along with the
    index of the best arm.
    """
    x0 = np.asarray(x0, dtype=float)
    if x0.size < 2 or x0.size % 2 != 0:
        raise ValueError("x0 must have a positive even length")
    lam_values = lam_schedule.values
    records: list[ExperimentRecord] = []
    stopped_at: int | None = None
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [
                pool.submit(_run_arm, graph, noise, x0, config, lam, scale, integrator)
                for lam in lam_values
            ]
            records = [f.result() for f in futures]
    else:
        previous_ratio: float | None = None
        for k, lam in enumerate(lam_values):
            record = _run_arm(graph, noise, x0, config, lam, scale, integrator)
            records.append(record)
            if not record.failed:
                diff = math.inf if previous_ratio is None else abs(record.score - previous_ratio)
                previous_ratio = record.score
                if diff <= lam_schedule.plateau_tol:
                    stopped_at = k
                    break
    return SweepResult(records, _pick_best(records, lam_schedule.plateau_tol), stopped_at)


def _run_depth(graph: Graph, noise: NoiseModel, config: OptimizerConfig, p: int,
               scale: float, integrator: IntegratorConfig) -> DepthRecord:
    system = System.from_graph(graph, noise, scale)
    extrema = brute_force_extrema(graph)
    objective = ScheduleObjective(system, integrator, alternating_tags(p))
    x0 = np.full(2 * p, 0.1)
    cfg = replace(config, lam=0.0, hybrid_split=None)
    trajectory = run_pg(objective, x0, cfg)
    if trajectory.aborted:
        raise RuntimeError(f"baseline run at p={p} aborted on a non-finite objective")
    value = trajectory.final_value
    return DepthRecord(p, 2 * p, approximation_ratio(value, extrema), float(value), objective.rk4_steps)


def exhaustive_depth_baseline(graph: Graph, noise: NoiseModel, config: OptimizerConfig,
                              p_values: Sequence[int], *, scale: float = 6.0,
                              integrator: IntegratorConfig = IntegratorConfig(), jobs: int = 1) -> list[DepthRecord]:
    """Unregularized descent from all-0.1 starts for every requested depth.

    Serves as ground truth for validating the selector's chosen depth.
    """
    p_values = list(p_values)
    if not p_values:
        raise ValueError("empty range of depths")
    if any(p < 1 for p in p_values):
        raise ValueError("depths must be positive")
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_run_depth, graph, noise, config, p, scale, integrator) for p in p_values]
            return [f.result() for f in futures]
    return [_run_depth(graph, noise, config, p, scale, integrator) for p in p_values]
