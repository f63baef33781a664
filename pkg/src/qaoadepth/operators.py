"""Hermitian operators for the Max-Cut control problem, built by Kronecker composition.

Single-qubit matrices follow the convention

    sigma_z = [[1, 0], [0, -1]],  sigma_x = [[0, 1], [1, 0]],
    sigma_minus = [[0, 0], [1, 0]],

with kets |0> = (0, 1)^T and |1> = (1, 0)^T, so sigma_minus lowers the excited
state (vector position 0) to the ground state (vector position 1).

Bit convention, used consistently across the package: bit k of a basis index b
(least significant bit = qubit 0) addresses qubit k, and the spin value of
qubit k in basis state b is

    s_k(b) = +1 if bit k of b is 0,  -1 if bit k of b is 1,

which is the sigma_z eigenvalue of the corresponding vector position. Any
consistent convention yields identical spectra; this one is fixed so that
tests can assert concrete matrix entries.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .problems import Graph

# Dense 2^N x 2^N matrices only; keeps the worst case around a quarter GiB.
MAX_QUBITS = 12

SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_MINUS = np.array([[0.0, 0.0], [1.0, 0.0]], dtype=complex)


class NoiseKind(Enum):
    NONE = "none"
    RELAXATION = "relaxation"
    DEPHASING = "dephasing"


@dataclass(frozen=True)
class NoiseModel:
    """Lindblad channel selection with a uniform per-qubit coupling strength.

    kind=RELAXATION couples every qubit through sigma_minus (amplitude
    damping), kind=DEPHASING through sigma_z. kind=NONE means exactly unitary
    evolution and requires coupling 0.
    """

    kind: NoiseKind = NoiseKind.NONE
    coupling: float = 0.0

    def __post_init__(self) -> None:
        if self.coupling < 0.0:
            raise ValueError("coupling must be nonnegative")
        if self.kind is NoiseKind.NONE and self.coupling != 0.0:
            raise ValueError("noise kind 'none' requires coupling 0")

    @classmethod
    def none(cls) -> "NoiseModel":
        return cls(NoiseKind.NONE, 0.0)

    @classmethod
    def from_name(cls, name: str, coupling: float) -> "NoiseModel":
        kind = NoiseKind(name)
        if kind is NoiseKind.NONE:
            return cls(kind, 0.0)
        return cls(kind, coupling)


def check_qubit_budget(n_qubits: int) -> None:
    if n_qubits < 1:
        raise ValueError("need at least one qubit")
    if n_qubits > MAX_QUBITS:
        raise ValueError(f"{n_qubits} qubits exceeds the dense-matrix budget of {MAX_QUBITS}")


def pauli(kind: str) -> np.ndarray:
    """Return a copy of sigma_z ('z'), sigma_x ('x') or sigma_minus ('minus')."""
    table = {"z": SIGMA_Z, "x": SIGMA_X, "minus": SIGMA_MINUS}
    try:
        return table[kind.lower()].copy()
    except KeyError:
        raise ValueError(f"unknown Pauli kind {kind!r}, expected 'z', 'x' or 'minus'") from None


def embed_single_qubit(op: np.ndarray, qubit: int, n_qubits: int) -> np.ndarray:
    """Embed a 2x2 operator at a qubit slot: I x ... x op x ... x I.

    Qubit 0 sits at the least significant bit of the basis index, i.e. it is
    the rightmost Kronecker factor.
    """
    check_qubit_budget(n_qubits)
    if op.shape != (2, 2):
        raise ValueError("op must be 2x2")
    if not 0 <= qubit < n_qubits:
        raise ValueError(f"qubit index {qubit} out of range for {n_qubits} qubits")
    out = np.eye(1, dtype=complex)
    for k in range(n_qubits - 1, -1, -1):
        out = np.kron(out, op if k == qubit else np.eye(2, dtype=complex))
    return out


def spin_values(n_qubits: int, qubit: int) -> np.ndarray:
    """Vector of s_qubit(b) = +/-1 over all basis indices b."""
    b = np.arange(1 << n_qubits)
    return 1.0 - 2.0 * ((b >> qubit) & 1)


def build_maxcut_hamiltonian(graph: Graph) -> np.ndarray:
    """Diagonal of the Max-Cut Hamiltonian sum_{(i,j)} w_ij sigma_z_i sigma_z_j.

    Returned as a real vector over basis indices; entry b equals
    sum_{(i,j)} w_ij * s_i(b) * s_j(b). The operator is diagonal in the
    computational basis, so the full matrix is never materialized.
    """
    check_qubit_budget(graph.n_nodes)
    diag = np.zeros(1 << graph.n_nodes)
    for i, j, w in graph.edges:
        diag += w * spin_values(graph.n_nodes, i) * spin_values(graph.n_nodes, j)
    return diag


def build_mixer(n_qubits: int) -> np.ndarray:
    """Dense transverse-field mixer sum_n sigma_x^(n).

    Hermitian and traceless; every row couples to the n_qubits basis states at
    Hamming distance one.
    """
    check_qubit_budget(n_qubits)
    d = 1 << n_qubits
    out = np.zeros((d, d), dtype=complex)
    for q in range(n_qubits):
        out += embed_single_qubit(SIGMA_X, q, n_qubits)
    return out


def build_noise_operators(model: NoiseModel, n_qubits: int) -> list[tuple[np.ndarray, float]]:
    """Per-qubit embedded coupling operators, each paired with the coupling rate.

    Returns an empty list for kind NONE; otherwise one (L_n, coupling) pair per
    qubit in qubit order, with L = sigma_minus for relaxation and sigma_z for
    dephasing.
    """
    check_qubit_budget(n_qubits)
    if model.kind is NoiseKind.NONE:
        return []
    base = SIGMA_MINUS if model.kind is NoiseKind.RELAXATION else SIGMA_Z
    return [(embed_single_qubit(base, q, n_qubits), model.coupling) for q in range(n_qubits)]
