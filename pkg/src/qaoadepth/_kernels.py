"""Numba kernels: fixed-step RK4 integration of structured Lindblad generators.

The right-hand side acting on a dense complex density matrix is assembled from
three structured pieces, so no dense matrix product is ever formed:

* ``ew``: an elementwise complex mask. It carries the commutator of any
  diagonal Hamiltonian (entries -i*(g_i - g_j)), the full dephasing dissipator
  (entries -2*coupling*hamming(i, j)) and the anticommutator half of the
  amplitude-damping dissipator (entries -coupling*(z0_i + z0_j)/2, with z0 the
  count of zero bits).

* ``mix_strength``: real prefactor s of a transverse-field Hamiltonian
  s * sum_n X_n. Its commutator -i*s*(X rho - rho X) is accumulated from
  single-bit-flip row and column gathers. Pass 0 to disable.

* ``jump_rate``/``jump_adjoint``: amplitude-damping jump term
  rate * sum_n L_n rho L_n^dag with L = sigma_minus embedded per qubit. In the
  forward direction entry (i, j) gains rate * rho[i - 2^n, j - 2^n] whenever
  bit n is set in both i and j; the adjoint (Heisenberg) direction gathers
  from (i + 2^n, j + 2^n) whenever bit n is clear in both.

The Hilbert-Schmidt adjoint of a generator is obtained by conjugating ``ew``,
negating ``mix_strength`` and flipping ``jump_adjoint``, which is what the
dynamics layer does when it propagates observables backwards.

Everything is compiled without fastmath so results are bit-reproducible.
"""

from __future__ import annotations

import numba as nb
import numpy as np


@nb.njit(cache=True, fastmath=False)
def lindblad_rhs_structured(src, out, ew, mix_strength, jump_rate, jump_adjoint, n_qubits, rowacc, colacc):
    """out <- structured Lindblad generator applied to src (both (d, d) complex)."""
    d = src.shape[0]
    for i in range(d):
        if mix_strength != 0.0:
            # rowacc[j] = sum_n src[i ^ 2^n, j]; contiguous in j
            ip = i ^ 1
            for j in range(d):
                rowacc[j] = src[ip, j]
            for n in range(1, n_qubits):
                ip = i ^ (1 << n)
                for j in range(d):
                    rowacc[j] += src[ip, j]
            # colacc[j] = sum_n src[i, j ^ 2^n]; stays within row i
            for j in range(d):
                colacc[j] = src[i, j ^ 1]
            for n in range(1, n_qubits):
                bit = 1 << n
                for j in range(d):
                    colacc[j] += src[i, j ^ bit]
            for j in range(d):
                z = rowacc[j] - colacc[j]
                # -1j * mix_strength * z
                out[i, j] = ew[i, j] * src[i, j] + mix_strength * complex(z.imag, -z.real)
        else:
            for j in range(d):
                out[i, j] = ew[i, j] * src[i, j]
        if jump_rate != 0.0:
            if not jump_adjoint:
                for n in range(n_qubits):
                    bit = 1 << n
                    if i & bit:
                        isrc = i - bit
                        for j0 in range(0, d, 2 * bit):
                            for j in range(j0 + bit, j0 + 2 * bit):
                                out[i, j] += jump_rate * src[isrc, j - bit]
            else:
                for n in range(n_qubits):
                    bit = 1 << n
                    if not i & bit:
                        isrc = i + bit
                        for j0 in range(0, d, 2 * bit):
                            for j in range(j0, j0 + bit):
                                out[i, j] += jump_rate * src[isrc, j + bit]


@nb.njit(cache=True, fastmath=False)
def rk4_evolve(state, ew, mix_strength, jump_rate, jump_adjoint, n_qubits, step, n_steps):
    """Advance state in place through n_steps classic RK4 steps of size step."""
    d = state.shape[0]
    k1 = np.empty((d, d), np.complex128)
    k2 = np.empty((d, d), np.complex128)
    k3 = np.empty((d, d), np.complex128)
    k4 = np.empty((d, d), np.complex128)
    stage = np.empty((d, d), np.complex128)
    rowacc = np.empty(d, np.complex128)
    colacc = np.empty(d, np.complex128)
    half = 0.5 * step
    sixth = step / 6.0
    for _ in range(n_steps):
        lindblad_rhs_structured(state, k1, ew, mix_strength, jump_rate, jump_adjoint, n_qubits, rowacc, colacc)
        for i in range(d):
            for j in range(d):
                stage[i, j] = state[i, j] + half * k1[i, j]
        lindblad_rhs_structured(stage, k2, ew, mix_strength, jump_rate, jump_adjoint, n_qubits, rowacc, colacc)
        for i in range(d):
            for j in range(d):
                stage[i, j] = state[i, j] + half * k2[i, j]
        lindblad_rhs_structured(stage, k3, ew, mix_strength, jump_rate, jump_adjoint, n_qubits, rowacc, colacc)
        for i in range(d):
            for j in range(d):
                stage[i, j] = state[i, j] + step * k3[i, j]
        lindblad_rhs_structured(stage, k4, ew, mix_strength, jump_rate, jump_adjoint, n_qubits, rowacc, colacc)
        for i in range(d):
            for j in range(d):
                state[i, j] += sixth * (k1[i, j] + 2.0 * (k2[i, j] + k3[i, j]) + k4[i, j])
