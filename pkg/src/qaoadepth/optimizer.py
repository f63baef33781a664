"""Proximal gradient descent with finite-difference gradients.

Minimizes f(x) + lam * ||x||_1 where f is a black-box objective (here the
measured expectation tr(H_o rho(x))). Gradients use the standard central
difference (f(x + eps) - f(x - eps)) / (2 eps); each iteration takes a plain
gradient step followed by elementwise soft thresholding with threshold
lam * eta, which sets small coordinates to exactly zero. With lam = 0 the
procedure reduces bit-for-bit to vanilla gradient descent.

`run_hybrid` implements the two-phase protocol: a regularized phase that
prunes the schedule, followed by an unregularized refinement on the compacted
schedule, whose final value is reported without the penalty term.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np


class EvaluationFailed(RuntimeError):
    """The objective returned a non-finite value."""


@dataclass(frozen=True)
class OptimizerConfig:
    eta: float = 0.008
    epsilon: float = 1e-3
    lam: float = 0.0
    iterations: int = 300
    hybrid_split: tuple[int, int] | None = None

    def __post_init__(self) -> None:
        if not self.eta > 0.0:
            raise ValueError("eta must be positive")
        if not self.epsilon > 0.0:
            raise ValueError("epsilon must be positive")
        if self.lam < 0.0:
            raise ValueError("lam must be nonnegative")
        if self.iterations < 0:
            raise ValueError("iterations must be nonnegative")
        if self.hybrid_split is not None:
            k_pg, k_refine = self.hybrid_split
            if k_pg < 0 or k_refine < 0 or k_pg + k_refine != self.iterations:
                raise ValueError("hybrid_split must be nonnegative and sum to iterations")


@dataclass
class Trajectory:
    """Per-iteration optimization records, including the initial point."""

    xs: list[np.ndarray] = field(default_factory=list)
    objective_values: list[float] = field(default_factory=list)
    regularized_values: list[float] = field(default_factory=list)
    zero_counts: list[int] = field(default_factory=list)
    aborted: bool = False

    def append(self, x: np.ndarray, value: float, lam: float) -> None:
        self.xs.append(x.copy())
        self.objective_values.append(float(value))
        self.regularized_values.append(float(value + lam * np.abs(x).sum()))
        self.zero_counts.append(int(x.size - np.count_nonzero(x)))

    @property
    def final_x(self) -> np.ndarray:
        return self.xs[-1]

    @property
    def final_value(self) -> float:
        return self.objective_values[-1]

    def __len__(self) -> int:
        return len(self.xs)


@dataclass
class HybridRun:
    """Result of the two-phase prune-then-refine protocol."""

    prune: Trajectory
    refine: Trajectory
    merged_steps: list  # (generator, duration) pairs entering the refine phase

    @property
    def selected_params(self) -> int:
        x = self.prune.final_x
        return int(np.count_nonzero(x))


def soft_threshold(z, threshold):
    """Shrink towards zero by `threshold`; the dead zone maps to exactly 0.0.

    Scalar in, scalar out; arrays are handled elementwise.
    """
    if threshold < 0.0:
        raise ValueError("threshold must be nonnegative")
    z = np.asarray(z, dtype=float)
    out = np.where(z > threshold, z - threshold, np.where(z < -threshold, z + threshold, 0.0))
    if out.ndim == 0:
        return float(out)
    return out


def gd_step(x: np.ndarray, gradient: np.ndarray, eta: float) -> np.ndarray:
    """Plain descent update x - eta * gradient."""
    x = np.asarray(x, dtype=float)
    gradient = np.asarray(gradient, dtype=float)
    if x.shape != gradient.shape:
        raise ValueError("x and gradient shapes differ")
    return x - eta * gradient

def pg_step(x: np.ndarray, gradient: np.ndarray, eta: float, lam: float) -> np.ndarray:
    """Gradient step followed by soft thresholding at lam * eta."""
    return soft_threshold(gd_step(x, gradient, eta), lam * eta)


def _checked(value: float, context: str) -> float:
    if not np.isfinite(value):
        raise EvaluationFailed(f"objective returned {value!r} during {context}")
    return float(value)


def fd_gradient(objective: Callable[[np.ndarray], float], x, epsilon: float) -> np.ndarray:
    """Central-difference gradient with 2 * len(x) objective evaluations.

    Component order is fixed, so results are deterministic for a deterministic
    objective.
    """
    if not epsilon > 0.0:
        raise ValueError("epsilon must be positive")
    x = np.asarray(x, dtype=float)
    grad = np.empty_like(x)
    for i in range(x.size):
        xp = x.copy()
        xp[i] += epsilon
        fp = _checked(objective(xp), f"forward perturbation of coordinate {i}")
        xm = x.copy()
        xm[i] -= epsilon
        fm = _checked(objective(xm), f"backward perturbation of coordinate {i}")
        grad[i] = (fp - fm) / (2.0 * epsilon)
    return grad


def run_pg(objective: Callable[[np.ndarray], float], x0, config: OptimizerConfig) -> Trajectory:
    """Proximal gradient descent for config.iterations steps.

    Records the trajectory including the initial point (length iterations + 1).
    A coordinate thresholded to zero is not frozen: it re-enters whenever its
    gradient pushes the pre-threshold value past lam * eta. On an evaluation
    failure the partial trajectory is returned with `aborted` set.
    """
    x = np.asarray(x0, dtype=float).copy()
    trajectory = Trajectory()
    try:
        trajectory.append(x, _checked(objective(x), "initial evaluation"), config.lam)
        for _ in range(config.iterations):
            grad = fd_gradient(objective, x, config.epsilon)
            x = pg_step(x, grad, config.eta, config.lam)
            trajectory.append(x, _checked(objective(x), "iterate evaluation"), config.lam)
    except EvaluationFailed:
        trajectory.aborted = True
    return trajectory


def run_hybrid(objective: Callable[[np.ndarray], float],
               compact: Callable[[Callable, np.ndarray], tuple[Callable, np.ndarray, list]],
               x0, config: OptimizerConfig) -> HybridRun:
    """Regularized pruning phase, schedule compaction, unregularized refinement.

    `compact(objective, x)` must return the reduced objective, the reduced
    starting vector and the merged (generator, duration) steps; the selection
    module provides the implementation for schedule objectives. The refine
    phase runs vanilla gradient descent (lam = 0), so its reported values
    carry no regularization term and its zero count stays constant.
    """
    if config.hybrid_split is None:
        raise ValueError("config.hybrid_split is required for a hybrid run")
    k_pg, k_refine = config.hybrid_split
    prune = run_pg(objective, x0, replace(config, iterations=k_pg, hybrid_split=None))
    if prune.aborted:
        return HybridRun(prune, Trajectory(aborted=True), [])
    reduced_objective, reduced_x0, merged = compact(objective, prune.final_x)
    refine_cfg = replace(config, lam=0.0, iterations=k_refine, hybrid_split=None)
    refine = run_pg(reduced_objective, reduced_x0, refine_cfg)
    return HybridRun(prune, refine, merged)
