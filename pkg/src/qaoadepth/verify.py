"""Self-contained invariant checks behind the `verify` CLI command.

Each check returns (passed, detail). The dynamics checks honor the configured
integration step so that a deliberately inflated step makes the
noiseless-equivalence check fail, which is itself exercised by the tests.
"""

from __future__ import annotations

import math

import numpy as np

from .dynamics import (
    ControlSchedule,
    IntegratorConfig,
    System,
    evolve_schedule,
    evolve_segment,
    expectation,
    initial_plus_state,
    plus_state_vector,
    unitary_oracle,
)
from .operators import SIGMA_X, SIGMA_Z, NoiseKind, NoiseModel, build_maxcut_hamiltonian
from .optimizer import OptimizerConfig, run_pg, soft_threshold
from .problems import random_graph
from .selection import brute_force_extrema, invariance_check_merge, merge_operations


def _random_case(seed: int, step: float):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 5))
    graph = random_graph(n, min(2 * n, n * (n - 1) // 2), seed=seed)
    system = System.from_graph(graph, NoiseModel.none(), scale=6.0)
    p = int(rng.integers(1, 4))
    schedule = ControlSchedule(tuple(rng.uniform(-0.3, 0.3, 2 * p)))
    config = IntegratorConfig(step=step)
    rho = evolve_schedule(initial_plus_state(n), schedule, system, config)
    psi = unitary_oracle(plus_state_vector(n), schedule, system)
    return system, rho, psi


def check_noiseless_equivalence(step: float):
    worst = 0.0
    for seed in range(10):
        system, rho, psi = _random_case(seed, step)
        via_master = expectation(system.scaled_diag, rho)
        via_oracle = float(np.sum(system.scaled_diag * np.abs(psi) ** 2))
        worst = max(worst, abs(via_master - via_oracle))
    return worst <= 1e-5, f"max |master - oracle| = {worst:.3e} (tol 1e-5)"


def check_state_validity(step: float):
    worst_trace = worst_herm = 0.0
    worst_eig = math.inf
    config = IntegratorConfig(step=step)
    for seed in range(6):
        _, rho, _ = _random_case(seed, step)
        states = [rho]
        rng = np.random.default_rng(100 + seed)
        graph = random_graph(4, 5, seed=seed)
        for kind, c in ((NoiseKind.RELAXATION, 0.5), (NoiseKind.DEPHASING, 0.4)):
            system = System.from_graph(graph, NoiseModel(kind, c), scale=6.0)
            schedule = ControlSchedule(tuple(rng.uniform(0.0, 0.3, 4)))
            states.append(evolve_schedule(initial_plus_state(4), schedule, system, config))
        for state in states:
            worst_trace = max(worst_trace, abs(np.trace(state).real - 1.0) + abs(np.trace(state).imag))
            worst_herm = max(worst_herm, float(np.abs(state - state.conj().T).max()))
            worst_eig = min(worst_eig, float(np.linalg.eigvalsh(0.5 * (state + state.conj().T)).min()))
    ok = worst_trace <= 1e-8 and worst_herm <= 1e-8 and worst_eig >= -1e-7
    return ok, f"trace dev {worst_trace:.2e}, herm dev {worst_herm:.2e}, min eig {worst_eig:.2e}"


def check_dephasing_analytic(step: float):
    coupling, t = 0.7, 0.9
    rho0 = np.full((2, 2), 0.5, dtype=complex)
    rho = evolve_segment(rho0, np.zeros((2, 2), dtype=complex), t,
                         [(SIGMA_Z.copy(), coupling)], IntegratorConfig(step=step))
    expected = 0.5 * math.exp(-2.0 * coupling * t)
    err = abs(rho[0, 1] - expected)
    return err <= 1e-6, f"off-diagonal error {err:.3e} (tol 1e-6)"


def check_rabi_analytic(step: float):
    t = 1.1
    rho0 = np.zeros((2, 2), dtype=complex)
    rho0[1, 1] = 1.0  # ground ket (0, 1)^T
    rho = evolve_segment(rho0, SIGMA_X.copy(), t, (), IntegratorConfig(step=step))
    err = abs(rho[0, 0].real - math.sin(t) ** 2)
    return err <= 1e-6, f"excited population error {err:.3e} (tol 1e-6)"


def check_rk4_order(_step: float):
    # uses its own coarse steps; halving a 4th-order integrator gains >= 8x
    graph = random_graph(3, 3, seed=3)
    system = System.from_graph(graph, NoiseModel.none(), scale=6.0)
    schedule = ControlSchedule((0.2, 0.24, -0.16, 0.2))
    psi = unitary_oracle(plus_state_vector(3), schedule, system)
    exact = float(np.sum(system.scaled_diag * np.abs(psi) ** 2))
    errs = []
    for step in (0.02, 0.01):
        rho = evolve_schedule(initial_plus_state(3), schedule, system, IntegratorConfig(step=step))
        errs.append(abs(expectation(system.scaled_diag, rho) - exact))
    ratio = errs[0] / errs[1] if errs[1] > 0 else math.inf
    return ratio >= 8.0, f"error ratio {ratio:.1f} (need >= 8)"


def check_soft_threshold(_step: float):
    cases = [((0.5, 0.2), 0.3), ((-0.1, 0.2), 0.0), ((-0.5, 0.2), -0.3), ((0.2, 0.2), 0.0)]
    for (z, t), want in cases:
        got = soft_threshold(z, t)
        if got != want:
            return False, f"S_{t}({z}) = {got}, expected {want}"
        if want == 0.0 and got != 0.0:
            return False, "dead zone must map to exact zero"
    return True, "all branches exact"


def check_lasso_closed_form(_step: float):
    a, lam = 1.3, 0.4
    objective = lambda x: 0.5 * float((x[0] - a) ** 2)
    cfg = OptimizerConfig(eta=0.5, epsilon=1e-6, lam=lam, iterations=200)
    trajectory = run_pg(objective, np.array([-2.0]), cfg)
    err = abs(trajectory.final_x[0] - soft_threshold(a, lam))
    return err <= 1e-6, f"fixed-point error {err:.3e} (tol 1e-6)"


def check_extrema_oracle(_step: float):
    for seed in range(20):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 7))
        m = int(rng.integers(1, n * (n - 1) // 2 + 1))
        graph = random_graph(n, m, seed=seed)
        extrema = brute_force_extrema(graph)
        diag = build_maxcut_hamiltonian(graph)
        if not (math.isclose(extrema.c_min, diag.min(), abs_tol=1e-12)
                and math.isclose(extrema.c_max, diag.max(), abs_tol=1e-12)):
            return False, f"mismatch against diagonal on seed {seed}"
    return True, "extrema equal diagonal min/max on 20 graphs"


def check_merge_invariance(_step: float):
    graph = random_graph(4, 5, seed=11)
    system = System.from_graph(graph, NoiseModel.none(), scale=6.0)
    for seed in range(10):
        rng = np.random.default_rng(seed)
        x = rng.uniform(-0.4, 0.4, 8)
        x[rng.integers(0, 8, 3)] = 0.0
        schedule = ControlSchedule(tuple(x))
        merged = merge_operations(schedule)
        if not invariance_check_merge(schedule, merged, system):
            return False, f"merge changed the final state on seed {seed}"
    return True, "merged schedules reproduce unmerged states on 10 seeds"


def check_fd_quadratic(_step: float):
    from .optimizer import fd_gradient

    grad = fd_gradient(lambda x: float(np.sum(x**2)), np.array([1.0, -2.0]), 1e-5)
    err = float(np.abs(grad - np.array([2.0, -4.0])).max())
    return err <= 1e-8, f"gradient error {err:.2e} (tol 1e-8)"


CHECKS = [
    ("noiseless-equivalence", check_noiseless_equivalence),
    ("state-validity", check_state_validity),
    ("dephasing-analytic", check_dephasing_analytic),
    ("rabi-analytic", check_rabi_analytic),
    ("rk4-order", check_rk4_order),
    ("soft-threshold-branches", check_soft_threshold),
    ("lasso-closed-form", check_lasso_closed_form),
    ("maxcut-extrema", check_extrema_oracle),
    ("merge-invariance", check_merge_invariance),
    ("fd-quadratic", check_fd_quadratic),
]


def run_all(step: float = 1e-3):
    """Run every invariant check at the given integration step."""
    results = []
    for name, fn in CHECKS:
        try:
            ok, detail = fn(step)
        except Exception as exc:  # a crashing check is a failing check
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        results.append((name, ok, detail))
    return results
