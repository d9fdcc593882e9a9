"""Statevector simulation of alternating-layer MAXCUT circuits.

States are flat complex128 arrays of 2^N amplitudes; bit i of the basis index
is the computational value of qubit i. The cost layer is the diagonal phase
exp(-i*gamma*C) where C counts cut edges per basis state; the mixer layer is
the product of single-qubit rotations exp(-i*beta*X_j).
"""

from __future__ import annotations

import numpy as np

from . import _kernels
from .errors import BudgetError
from .problems import MaxCutProblem, cut_spectrum

MAX_QUBITS = 24


def uniform_state(n: int) -> np.ndarray:
    """Equal superposition of all basis states with real positive amplitudes."""
    if not 1 <= n <= MAX_QUBITS:
        raise BudgetError(f"qubit count must satisfy 1 <= n <= {MAX_QUBITS}, got {n}")
    return np.full(1 << n, 2.0 ** (-n / 2.0), dtype=np.complex128)


def n_qubits(state: np.ndarray) -> int:
    size = state.shape[0]
    n = int(size).bit_length() - 1
    if state.ndim != 1 or size != 1 << n:
        raise ValueError(f"state length {size} is not a power of two")
    return n


def _writable(state: np.ndarray, inplace: bool) -> np.ndarray:
    if inplace:
        if state.dtype != np.complex128 or not state.flags.c_contiguous:
            raise ValueError("in-place update requires a contiguous complex128 array")
        return state
    return np.array(state, dtype=np.complex128)


def apply_cost_layer(
    state: np.ndarray, problem: MaxCutProblem, gamma: float, inplace: bool = False
) -> np.ndarray:
    """Multiply each amplitude by exp(-i*gamma*cut_value(z))."""
    n = n_qubits(state)
    if n != problem.n_vertices:
        raise ValueError(f"state has {n} qubits but problem has {problem.n_vertices} vertices")
    psi = _writable(state, inplace)
    spec = cut_spectrum(problem)
    table = np.exp(-1j * float(gamma) * np.arange(problem.m + 1, dtype=np.float64))
    _kernels.phase_by_table(psi, spec, table)
    return psi


def apply_mixer_layer(state: np.ndarray, beta: float, inplace: bool = False) -> np.ndarray:
    """Rotate every qubit by exp(-i*beta*X)."""
    n = n_qubits(state)
    psi = _writable(state, inplace)
    _kernels.rotate_x_all(psi, float(beta), n)
    return psi


def run_schedule(problem: MaxCutProblem, schedule) -> np.ndarray:
    """Alternate cost and mixer layers over the uniform state.

    ``schedule`` is a sequence of (gamma, beta) pairs; an empty schedule
    returns the uniform state itself.
    """
    angles = np.asarray(schedule, dtype=np.float64).reshape(-1, 2)
    psi = uniform_state(problem.n_vertices)
    for gamma, beta in angles:
        apply_cost_layer(psi, problem, gamma, inplace=True)
        apply_mixer_layer(psi, beta, inplace=True)
    return psi


def _edge_array(edges) -> np.ndarray:
    arr = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    return arr


def expect_cost(state: np.ndarray, problem: MaxCutProblem) -> float:
    """<C> = sum over basis states of |amp|^2 times the cut value."""
    n = n_qubits(state)
    if n != problem.n_vertices:
        raise ValueError(f"state has {n} qubits but problem has {problem.n_vertices} vertices")
    psi = np.ascontiguousarray(state, dtype=np.complex128)
    spec = cut_spectrum(problem)
    return float(_kernels.weighted_prob_sum(psi, spec, _kernels.LOG2_CHUNK))


def expect_z(state: np.ndarray, i: int) -> float:
    n = n_qubits(state)
    if not 0 <= i < n:
        raise IndexError(f"qubit index {i} out of range for {n} qubits")
    z, _ = _kernels.z_and_edge_sums(
        np.ascontiguousarray(state, dtype=np.complex128),
        n,
        np.empty((0, 2), dtype=np.int64),
        _kernels.LOG2_CHUNK,
    )
    return float(z[i])


def expect_x(state: np.ndarray, i: int) -> float:
    n = n_qubits(state)
    if not 0 <= i < n:
        raise IndexError(f"qubit index {i} out of range for {n} qubits")
    xs = _kernels.x_sums(
        np.ascontiguousarray(state, dtype=np.complex128), n, _kernels.LOG2_CHUNK
    )
    return float(xs[i])


def expect_edge(state: np.ndarray, problem: MaxCutProblem, edge) -> float:
    """<C_ij> = probability that the edge's endpoints disagree."""
    n = n_qubits(state)
    if n != problem.n_vertices:
        raise ValueError(f"state has {n} qubits but problem has {problem.n_vertices} vertices")
    e = (min(edge), max(edge))
    if e not in problem.edges:
        raise ValueError(f"edge {tuple(edge)} is not part of the problem")
    _, xor = _kernels.z_and_edge_sums(
        np.ascontiguousarray(state, dtype=np.complex128),
        n,
        _edge_array([e]),
        _kernels.LOG2_CHUNK,
    )
    return float(xor[0])


def all_observables(
    state: np.ndarray, problem: MaxCutProblem, include_edges: bool = True
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """All <X_i>, <Z_i>, and (optionally) <C_e> in problem edge order."""
    n = n_qubits(state)
    if n != problem.n_vertices:
        raise ValueError(f"state has {n} qubits but problem has {problem.n_vertices} vertices")
    psi = np.ascontiguousarray(state, dtype=np.complex128)
    edges = _edge_array(problem.edges if include_edges else np.empty((0, 2), dtype=np.int64))
    zs, edge_vals = _kernels.z_and_edge_sums(psi, n, edges, _kernels.LOG2_CHUNK)
    xs = _kernels.x_sums(psi, n, _kernels.LOG2_CHUNK)
    return xs, zs, edge_vals


def state_fidelity(a: np.ndarray, b: np.ndarray) -> float:
    """|<a|b>| — the global-phase-insensitive overlap used for state comparison."""
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(abs(np.vdot(a, b)))


def norm_error(state: np.ndarray) -> float:
    return float(abs(1.0 - np.vdot(state, state).real))
