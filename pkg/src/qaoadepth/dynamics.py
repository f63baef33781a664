"""Density-matrix evolution through alternating problem/mixer control segments.

A control schedule is a sequence of (generator, duration) steps. Under noise
the state follows the Lindblad master equation

    drho/dt = -i [H, rho] + sum_n c_n (L_n rho L_n^dag
              - 1/2 L_n^dag L_n rho - 1/2 rho L_n^dag L_n),

integrated with fixed-step classic RK4. Without noise the evolution is exactly
unitary and a matrix-exponential oracle (`unitary_oracle`) provides an
independent reference path for cross-validation.

Durations may be negative: a segment of duration t < 0 evolves for |t| under
the sign-flipped Hamiltonian, which reproduces the unitary e^{-iHt} exactly in
the noiseless case. Under noise the dissipator still acts forward in time over
|t| (a reversed drive, not a reversed channel), so decoherence accumulates
with the total absolute control time.

The mixer Hamiltonian is always scale * sum_n sigma_x^(n); its eigenbasis is
the Walsh-Hadamard basis, which the oracle exploits through a fast transform
instead of a dense eigendecomposition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from . import operators
from ._kernels import rk4_evolve
from .operators import NoiseKind, NoiseModel
from .problems import Graph


class IntegrationDiverged(RuntimeError):
    """The integrator produced non-finite entries."""


class Generator(Enum):
    PROBLEM = "problem"
    MIXER = "mixer"


Step = tuple[Generator, float]


@dataclass(frozen=True)
class IntegratorConfig:
    """Fixed-step RK4 settings.

    Each segment of duration t is divided into ceil(|t| / step) uniform
    sub-steps, so the effective sub-step never exceeds `step`. The default of
    5e-4 keeps the positivity error of scale-6 evolutions more than an order
    of magnitude inside the 1e-7 tolerance.
    """

    step: float = 5e-4
    method: str = "rk4"

    def __post_init__(self) -> None:
        if not self.step > 0.0:
            raise ValueError("integration step must be positive")
        if self.method != "rk4":
            raise ValueError(f"unsupported integration method {self.method!r}")

    def substeps(self, duration: float) -> int:
        return int(math.ceil(abs(duration) / self.step))


@dataclass(frozen=True)
class ControlSchedule:
    """Interleaved control durations (g_1, b_1, ..., g_p, b_p).

    Execution order alternates problem and mixer segments, problem first.
    Entries may be zero (a removable step) or negative (reversed drive).
    """

    durations: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.durations) < 2 or len(self.durations) % 2 != 0:
            raise ValueError("schedule needs a positive even number of durations")
        object.__setattr__(self, "durations", tuple(float(v) for v in self.durations))

    @property
    def p(self) -> int:
        return len(self.durations) // 2

    @property
    def steps(self) -> tuple[Step, ...]:
        return tuple(zip(alternating_tags(self.p), self.durations))


def alternating_tags(p: int) -> tuple[Generator, ...]:
    """Canonical tag sequence (problem, mixer) repeated p times."""
    return (Generator.PROBLEM, Generator.MIXER) * p


def as_steps(schedule) -> tuple[Step, ...]:
    """Normalize a ControlSchedule or an iterable of (generator, duration) pairs."""
    if isinstance(schedule, ControlSchedule):
        return schedule.steps
    return tuple((Generator(tag), float(dur)) for tag, dur in schedule)


class System:
    """Problem instance bound to a noise model and a Hamiltonian scale factor.

    Holds the Max-Cut diagonal, implies the transverse-field mixer for the same
    qubit count, and precomputes the structured generator masks used by the
    RK4 kernels. Instances are immutable after construction and safe to share
    across threads.
    """

    def __init__(self, n_qubits: int, ho_diag: np.ndarray, noise: NoiseModel | None = None, scale: float = 6.0):
        operators.check_qubit_budget(n_qubits)
        if not scale > 0.0:
            raise ValueError("scale factor must be positive")
        self.n_qubits = int(n_qubits)
        self.dim = 1 << self.n_qubits
        diag = np.asarray(ho_diag, dtype=float)
        if diag.shape != (self.dim,):
            raise ValueError(f"ho_diag must have length {self.dim}")
        self.ho_diag = diag.copy()
        self.noise = noise if noise is not None else NoiseModel.none()
        self.scale = float(scale)
        self.scaled_diag = self.scale * self.ho_diag

        popcount = np.array([bin(b).count("1") for b in range(self.dim)])
        self.mixer_eigs = self.n_qubits - 2.0 * popcount

        # elementwise noise mask (real) and jump rate for the kernels
        c = self.noise.coupling
        if self.noise.kind is NoiseKind.RELAXATION:
            zeros = self.n_qubits - popcount
            ew_noise = -0.5 * c * (zeros[:, None] + zeros[None, :]).astype(float)
            self._jump_rate = c
        elif self.noise.kind is NoiseKind.DEPHASING:
            hamming = np.array(
                [[bin(i ^ j).count("1") for j in range(self.dim)] for i in range(self.dim)], dtype=float
            )
            ew_noise = -2.0 * c * hamming
            self._jump_rate = 0.0
        else:
            ew_noise = np.zeros((self.dim, self.dim))
            self._jump_rate = 0.0

        gap = self.scaled_diag[:, None] - self.scaled_diag[None, :]
        self._ew_problem_pos = np.ascontiguousarray(ew_noise - 1j * gap)
        self._ew_problem_neg = np.ascontiguousarray(ew_noise + 1j * gap)
        self._ew_mixer = np.ascontiguousarray(ew_noise.astype(complex))

    @classmethod
    def from_graph(cls, graph: Graph, noise: NoiseModel | None = None, scale: float = 6.0) -> "System":
        return cls(graph.n_nodes, operators.build_maxcut_hamiltonian(graph), noise, scale)

    def segment_args(self, generator: Generator, duration: float, adjoint: bool = False):
        """Kernel arguments (ew, mix_strength, jump_rate, jump_adjoint) for one segment.

        The duration sign is folded into the generator; the adjoint flag selects
        the Hilbert-Schmidt adjoint used for backwards observable propagation.
        """
        sign = 1.0 if duration >= 0.0 else -1.0
        if generator is Generator.PROBLEM:
            pos = sign > 0.0
            if adjoint:
                pos = not pos  # conj of -i*gap mask is the opposite-sign mask
            ew = self._ew_problem_pos if pos else self._ew_problem_neg
            ms = 0.0
        else:
            ew = self._ew_mixer
            ms = sign * self.scale
            if adjoint:
                ms = -ms
        return ew, ms, self._jump_rate, adjoint

    def evolve_segment_inplace(self, state: np.ndarray, generator: Generator, duration: float,
                               config: IntegratorConfig, adjoint: bool = False) -> int:
        """Run one segment on a contiguous complex matrix; returns RK4 steps taken."""
        if duration == 0.0:
            return 0
        n_steps = config.substeps(duration)
        h = abs(duration) / n_steps
        ew, ms, jr, jadj = self.segment_args(generator, duration, adjoint)
        rk4_evolve(state, ew, ms, jr, jadj, self.n_qubits, h, n_steps)
        return n_steps


def initial_plus_state(n_qubits: int) -> np.ndarray:
    """Projector onto the uniform superposition: every entry equals 2^-N."""
    operators.check_qubit_budget(n_qubits)
    d = 1 << n_qubits
    return np.full((d, d), 1.0 / d, dtype=complex)


def plus_state_vector(n_qubits: int) -> np.ndarray:
    """State vector of the uniform superposition, for the unitary oracle."""
    operators.check_qubit_budget(n_qubits)
    d = 1 << n_qubits
    return np.full(d, 1.0 / math.sqrt(d), dtype=complex)


def lindblad_rhs(rho: np.ndarray, hamiltonian: np.ndarray,
                 noise_terms: Sequence[tuple[np.ndarray, float]] = ()) -> np.ndarray:
    """Dense reference Lindblad right-hand side.

    Returns -i[H, rho] + sum_n c_n (L rho L^dag - 1/2 {L^dag L, rho}). This is
    the plain matrix-product formulation; the structured kernels are validated
    against it in the test suite.
    """
    if rho.shape != hamiltonian.shape or rho.shape[0] != rho.shape[1]:
        raise ValueError("rho and hamiltonian must be square matrices of equal dimension")
    drho = -1j * (hamiltonian @ rho - rho @ hamiltonian)
    for op, rate in noise_terms:
        if op.shape != rho.shape:
            raise ValueError("noise operator dimension mismatch")
        od = op.conj().T
        odo = od @ op
        drho += rate * (op @ rho @ od - 0.5 * (odo @ rho + rho @ odo))
    return drho


def evolve_segment(rho: np.ndarray, hamiltonian: np.ndarray, duration: float,
                   noise_terms: Sequence[tuple[np.ndarray, float]] = (),
                   config: IntegratorConfig = IntegratorConfig()) -> np.ndarray:
    """RK4-evolve a density matrix under one constant Hamiltonian segment.

    Generic dense-matrix path built directly on `lindblad_rhs`; works for any
    Hermitian Hamiltonian. Negative durations evolve |t| under -H with the
    dissipator unchanged. Used as the slow reference for arbitrary operators;
    schedule evolution goes through the structured kernels instead.
    """
    if duration == 0.0:
        return np.array(rho, dtype=complex, copy=True)
    h_eff = hamiltonian if duration >= 0.0 else -hamiltonian
    n_steps = config.substeps(duration)
    h = abs(duration) / n_steps
    state = np.array(rho, dtype=complex, copy=True)
    for _ in range(n_steps):
        k1 = lindblad_rhs(state, h_eff, noise_terms)
        k2 = lindblad_rhs(state + 0.5 * h * k1, h_eff, noise_terms)
        k3 = lindblad_rhs(state + 0.5 * h * k2, h_eff, noise_terms)
        k4 = lindblad_rhs(state + h * k3, h_eff, noise_terms)
        state += (h / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
    if not np.all(np.isfinite(state.view(float))):
        raise IntegrationDiverged("segment integration produced non-finite entries")
    return state


def evolve_schedule(rho0: np.ndarray, schedule, system: System,
                    config: IntegratorConfig = IntegratorConfig()) -> np.ndarray:
    """Evolve a density matrix through every schedule step in execution order.

    Steps with duration exactly 0 are skipped. Uses the structured RK4 kernels
    bound to the system's generators.
    """
    state = np.array(rho0, dtype=complex, order="C", copy=True)
    if state.shape != (system.dim, system.dim):
        raise ValueError(f"state must be {system.dim}x{system.dim}")
    for tag, dur in as_steps(schedule):
        system.evolve_segment_inplace(state, tag, dur, config)
        if not np.all(np.isfinite(state.view(float))):
            raise IntegrationDiverged("schedule integration produced non-finite entries")
    return state


def _fwht(vec: np.ndarray) -> np.ndarray:
    """Orthonormal fast Walsh-Hadamard transform, qubit 0 innermost."""
    d = vec.size
    out = vec.copy()
    h = 1
    while h < d:
        out = out.reshape(-1, 2, h)
        top = out[:, 0, :].copy()
        out[:, 0, :] = top + out[:, 1, :]
        out[:, 1, :] = top - out[:, 1, :]
        out = out.reshape(d)
        h *= 2
    return out / math.sqrt(d)


def unitary_oracle(state: np.ndarray, schedule, system: System) -> np.ndarray:
    """Exact noiseless propagation of a state vector through a schedule.

    Problem segments apply diagonal phases e^{-i t * scale * g_b}; mixer
    segments apply exact exponentials through the Walsh-Hadamard eigenbasis of
    the transverse field. Independent of the RK4 path by construction.
    """
    psi = np.asarray(state, dtype=complex).copy()
    if psi.shape != (system.dim,):
        raise ValueError(f"state vector must have length {system.dim}")
    for tag, dur in as_steps(schedule):
        if dur == 0.0:
            continue
        if tag is Generator.PROBLEM:
            psi *= np.exp(-1j * dur * system.scaled_diag)
        else:
            psi = _fwht(psi)
            psi *= np.exp(-1j * dur * system.scale * system.mixer_eigs)
            psi = _fwht(psi)
    return psi


def expectation(diagonal: np.ndarray, rho: np.ndarray) -> float:
    """Trace of a diagonal observable against a density matrix.

    Asserts that the imaginary residue of the trace stays below 1e-9, then
    returns sum_b diagonal[b] * Re(rho[b, b]).
    """
    diagonal = np.asarray(diagonal, dtype=float)
    if rho.shape != (diagonal.size, diagonal.size):
        raise ValueError("observable and state dimensions do not match")
    entries = np.diagonal(rho)
    residue = abs(float(np.sum(diagonal * entries.imag)))
    if residue > 1e-9:
        raise ValueError(f"imaginary trace residue {residue:.3e} exceeds 1e-9; state is not Hermitian enough")
    return float(np.sum(diagonal * entries.real))
