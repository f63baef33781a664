import math

import numpy as np
import pytest

from qaoadepth.dynamics import (
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
    _fwht,
)
from qaoadepth.operators import (
    NoiseKind,
    NoiseModel,
    build_maxcut_hamiltonian,
    build_mixer,
    build_noise_operators,
    pauli,
)
from qaoadepth.problems import random_graph

RELAX = NoiseModel(NoiseKind.RELAXATION, 0.5)
DEPHASE = NoiseModel(NoiseKind.DEPHASING, 0.4)


def random_system(seed, noise=NoiseModel.none(), scale=6.0, n=None):
    rng = np.random.default_rng(seed)
    n = n or int(rng.integers(2, 5))
    g = random_graph(n, min(2 * n, n * (n - 1) // 2), seed=seed)
    return System.from_graph(g, noise, scale)


class TestInitialState:
    def test_single_qubit(self):
        assert np.array_equal(initial_plus_state(1), np.full((2, 2), 0.5))

    def test_two_qubits_uniform(self):
        assert np.array_equal(initial_plus_state(2), np.full((4, 4), 0.25))

    def test_purity(self):
        rho = initial_plus_state(3)
        assert np.isclose(np.trace(rho @ rho).real, 1.0, atol=1e-14)

    def test_budget(self):
        with pytest.raises(ValueError, match="budget"):
            initial_plus_state(13)


class TestLindbladRhs:
    def test_commuting_case_is_zero(self):
        rho = np.diag([0.3, 0.2, 0.4, 0.1]).astype(complex)
        h = np.diag([1.0, -1.0, -1.0, 1.0]).astype(complex)
        assert np.abs(lindblad_rhs(rho, h)).max() == 0.0

    def test_trace_preservation(self):
        rng = np.random.default_rng(5)
        a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        rho = a @ a.conj().T
        rho /= np.trace(rho)
        h = build_mixer(2)
        noise = build_noise_operators(RELAX, 2)
        assert abs(np.trace(lindblad_rhs(rho, h, noise))) <= 1e-12

    def test_single_qubit_dephasing_closed_form(self):
        # with H = 0 and L = sigma_z the off-diagonals decay at rate 2c
        rho = np.array([[0.6, 0.2 + 0.1j], [0.2 - 0.1j, 0.4]], dtype=complex)
        out = lindblad_rhs(rho, np.zeros((2, 2), complex), [(pauli("z"), 0.3)])
        expected = np.array([[0.0, -2 * 0.3 * (0.2 + 0.1j)], [-2 * 0.3 * (0.2 - 0.1j), 0.0]])
        assert np.abs(out - expected).max() <= 1e-15

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="dimension"):
            lindblad_rhs(np.eye(2, dtype=complex), np.eye(4, dtype=complex))
        with pytest.raises(ValueError, match="mismatch"):
            lindblad_rhs(np.eye(4, dtype=complex), np.eye(4, dtype=complex), [(pauli("z"), 0.1)])


class TestEvolveSegment:
    def test_zero_duration_identity(self):
        rho = initial_plus_state(2)
        out = evolve_segment(rho, build_mixer(2), 0.0)
        assert np.array_equal(out, rho)
        assert out is not rho

    def test_rabi_population(self):
        # ground ket is (0, 1)^T; excited population sits at entry [0, 0]
        rho0 = np.zeros((2, 2), dtype=complex)
        rho0[1, 1] = 1.0
        for t in (0.3, 0.9, 1.7):
            rho = evolve_segment(rho0, pauli("x"), t)
            assert abs(rho[0, 0].real - math.sin(t) ** 2) <= 1e-6

    def test_dephasing_decay(self):
        coupling, t = 0.5, 1.3
        rho = evolve_segment(initial_plus_state(1), np.zeros((2, 2), complex), t, [(pauli("z"), coupling)])
        assert abs(rho[0, 1] - 0.5 * math.exp(-2 * coupling * t)) <= 1e-6

    def test_negative_duration_noiseless_is_inverse_angle(self):
        rho0 = np.zeros((2, 2), dtype=complex)
        rho0[1, 1] = 1.0
        t = 0.7
        rho = evolve_segment(rho0, pauli("x"), -t)
        # e^{+i X t} gives the same populations as e^{-i X t}
        assert abs(rho[0, 0].real - math.sin(t) ** 2) <= 1e-6
        forward = evolve_segment(rho0, -pauli("x"), t)
        assert np.abs(rho - forward).max() == 0.0

    def test_divergence_detected(self):
        rho0 = np.zeros((2, 2), dtype=complex)
        rho0[1, 1] = 1.0  # does not commute with X, so the stiff system blows up
        with np.errstate(over="ignore", invalid="ignore"):
            with pytest.raises(IntegrationDiverged):
                evolve_segment(rho0, 1e9 * pauli("x"), 0.01)


class TestEvolveSchedule:
    def test_all_zero_schedule_returns_input(self):
        system = random_system(0)
        rho0 = initial_plus_state(system.n_qubits)
        out = evolve_schedule(rho0, ControlSchedule((0.0, 0.0, 0.0, 0.0)), system)
        assert np.array_equal(out, rho0)

    @pytest.mark.parametrize("noise", [NoiseModel.none(), RELAX, DEPHASE])
    def test_fast_path_matches_dense_path(self, noise):
        # structured kernels against the generic dense-matrix integrator
        for seed in (1, 2):
            system = random_system(seed, noise, n=3)
            rng = np.random.default_rng(seed)
            durations = rng.uniform(-0.25, 0.25, 4) if noise.kind is NoiseKind.NONE else rng.uniform(0.0, 0.25, 4)
            schedule = ControlSchedule(tuple(durations))
            fast = evolve_schedule(initial_plus_state(3), schedule, system)
            dense = initial_plus_state(3)
            hc = system.scale * build_mixer(3)
            ho = np.diag(system.scaled_diag).astype(complex)
            noise_terms = build_noise_operators(noise, 3)
            for tag, dur in schedule.steps:
                dense = evolve_segment(dense, ho if tag is Generator.PROBLEM else hc, dur, noise_terms)
            assert np.abs(fast - dense).max() <= 1e-12

    def test_negative_duration_under_noise_folds_sign(self):
        # reversed drive: |t| of dissipation with the Hamiltonian sign flipped
        system = random_system(3, RELAX, n=2)
        schedule = ControlSchedule((0.1, -0.15, 0.0, 0.05))
        out = evolve_schedule(initial_plus_state(2), schedule, system)
        assert abs(np.trace(out).real - 1.0) <= 1e-8
        dense = initial_plus_state(2)
        hc = system.scale * build_mixer(2)
        ho = np.diag(system.scaled_diag).astype(complex)
        nt = build_noise_operators(RELAX, 2)
        for h, dur in ((ho, 0.1), (hc, -0.15), (ho, 0.0), (hc, 0.05)):
            dense = evolve_segment(dense, h, dur, nt)
        assert np.abs(out - dense).max() <= 1e-12

    def test_trace_and_hermiticity_preserved_under_noise(self):
        for noise in (RELAX, DEPHASE):
            system = random_system(7, noise, n=4)
            rng = np.random.default_rng(11)
            schedule = ControlSchedule(tuple(rng.uniform(0.0, 0.3, 8)))
            rho = evolve_schedule(initial_plus_state(4), schedule, system)
            assert abs(np.trace(rho) - 1.0) <= 1e-8
            assert np.abs(rho - rho.conj().T).max() <= 1e-8
            assert np.linalg.eigvalsh(rho).min() >= -1e-7

    def test_noiseless_equivalence_sample(self):
        for seed in range(5):
            system = random_system(seed)
            rng = np.random.default_rng(seed + 50)
            p = int(rng.integers(1, 5))
            schedule = ControlSchedule(tuple(rng.uniform(-0.3, 0.3, 2 * p)))
            rho = evolve_schedule(initial_plus_state(system.n_qubits), schedule, system)
            psi = unitary_oracle(plus_state_vector(system.n_qubits), schedule, system)
            via_master = expectation(system.scaled_diag, rho)
            via_oracle = float(np.sum(system.scaled_diag * np.abs(psi) ** 2))
            assert abs(via_master - via_oracle) <= 1e-5

    def test_step_halving_fourth_order(self):
        system = random_system(4, n=3)
        schedule = ControlSchedule((0.2, 0.24, -0.16, 0.2))
        psi = unitary_oracle(plus_state_vector(3), schedule, system)
        exact = float(np.sum(system.scaled_diag * np.abs(psi) ** 2))
        errors = []
        for step in (0.02, 0.01):
            rho = evolve_schedule(initial_plus_state(3), schedule, system, IntegratorConfig(step=step))
            errors.append(abs(expectation(system.scaled_diag, rho) - exact))
        assert errors[0] / errors[1] >= 8.0

    def test_purity_decay_under_dephasing(self):
        system = System(2, np.zeros(4), DEPHASE, scale=1.0)
        rho = initial_plus_state(2)
        purities = [np.trace(rho @ rho).real]
        for _ in range(10):
            rho = evolve_schedule(rho, [(Generator.PROBLEM, 0.05)], system)
            purities.append(np.trace(rho @ rho).real)
        assert all(b <= a + 1e-12 for a, b in zip(purities, purities[1:]))


class TestUnitaryOracle:
    def test_empty_schedule_identity(self):
        system = random_system(1)
        psi = plus_state_vector(system.n_qubits)
        assert np.array_equal(unitary_oracle(psi, [], system), psi)

    def test_norm_preserved(self):
        for seed in range(4):
            system = random_system(seed)
            rng = np.random.default_rng(seed)
            schedule = ControlSchedule(tuple(rng.uniform(-1, 1, 6)))
            psi = unitary_oracle(plus_state_vector(system.n_qubits), schedule, system)
            assert abs(np.linalg.norm(psi) - 1.0) <= 1e-12

    def test_half_pi_mixer_rotation(self):
        # e^{-i X pi/2}|0> = -i |1> up to the stated conventions
        system = System(1, np.zeros(2), scale=1.0)
        ket0 = np.array([0.0, 1.0], dtype=complex)
        psi = unitary_oracle(ket0, [(Generator.MIXER, math.pi / 2)], system)
        assert abs(abs(psi[0]) - 1.0) <= 1e-12
        assert abs(psi[1]) <= 1e-12
        assert np.allclose(psi[0], -1j, atol=1e-12)

    def test_fwht_matches_explicit_hadamard(self):
        h1 = np.array([[1, 1], [1, -1]]) / math.sqrt(2)
        for n in (1, 2, 3):
            w = np.eye(1)
            for _ in range(n):
                w = np.kron(w, h1)
            rng = np.random.default_rng(n)
            v = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
            assert np.allclose(_fwht(v), w @ v, atol=1e-12)

    def test_problem_segment_phases(self):
        g = random_graph(3, 3, seed=2)
        system = System.from_graph(g, scale=6.0)
        psi0 = plus_state_vector(3)
        psi = unitary_oracle(psi0, [(Generator.PROBLEM, 0.17)], system)
        assert np.allclose(psi, psi0 * np.exp(-1j * 0.17 * system.scaled_diag), atol=1e-14)


class TestExpectation:
    def test_maxcut_on_plus_state_is_zero(self):
        g = random_graph(4, 5, seed=8)
        diag = build_maxcut_hamiltonian(g)
        assert abs(expectation(diag, initial_plus_state(4))) <= 1e-12

    def test_unit_trace_observable(self):
        rho = initial_plus_state(2)
        assert np.isclose(expectation(np.ones(4), rho), 1.0, atol=1e-14)

    def test_point_mass(self):
        diag = np.array([3.0, -1.0, 2.0, 5.0])
        rho = np.zeros((4, 4), dtype=complex)
        rho[2, 2] = 1.0
        assert expectation(diag, rho) == 2.0

    def test_imaginary_residue_guard(self):
        rho = np.diag([0.5 + 1e-4j, 0.5]).astype(complex)
        with pytest.raises(ValueError, match="residue"):
            expectation(np.array([1.0, -1.0]), rho)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="dimensions"):
            expectation(np.ones(2), initial_plus_state(2))


class TestScheduleTypes:
    def test_alternating_order(self):
        schedule = ControlSchedule((0.1, 0.2, 0.3, 0.4))
        assert schedule.p == 2
        assert schedule.steps == (
            (Generator.PROBLEM, 0.1),
            (Generator.MIXER, 0.2),
            (Generator.PROBLEM, 0.3),
            (Generator.MIXER, 0.4),
        )

    def test_odd_length_rejected(self):
        with pytest.raises(ValueError, match="even"):
            ControlSchedule((0.1, 0.2, 0.3))

    def test_empty_rejected(self):
        with pytest.raises(ValueError, match="even"):
            ControlSchedule(())

    def test_alternating_tags(self):
        assert alternating_tags(2) == (Generator.PROBLEM, Generator.MIXER) * 2

    def test_integrator_validation(self):
        with pytest.raises(ValueError, match="positive"):
            IntegratorConfig(step=0.0)
        with pytest.raises(ValueError, match="method"):
            IntegratorConfig(method="euler")
        assert IntegratorConfig(step=0.25).substeps(1.0) == 4
        assert IntegratorConfig(step=0.3).substeps(-1.0) == 4


class TestAdjointConsistency:
    def test_heisenberg_transpose_identity(self):
        # <A, M(rho)> must equal <M^dag(A), rho> for every segment kind
        for noise in (NoiseModel.none(), RELAX, DEPHASE):
            system = random_system(9, noise, n=3)
            rng = np.random.default_rng(9)
            a = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
            sigma = a + a.conj().T
            base = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
            rho = base @ base.conj().T
            rho /= np.trace(rho)
            cfg = IntegratorConfig(step=1e-3)
            for tag in (Generator.PROBLEM, Generator.MIXER):
                for dur in (0.2, -0.2) if noise.kind is NoiseKind.NONE else (0.2,):
                    evolved = np.array(rho, order="C", copy=True)
                    system.evolve_segment_inplace(evolved, tag, dur, cfg)
                    pulled = np.array(sigma, order="C", copy=True)
                    system.evolve_segment_inplace(pulled, tag, dur, cfg, adjoint=True)
                    lhs = np.vdot(sigma, evolved)
                    rhs = np.vdot(pulled, rho)
                    assert abs(lhs - rhs) <= 1e-11 * max(1.0, abs(lhs))
