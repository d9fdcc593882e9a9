"""Statevector layers and observables against dense matrix references."""

import numpy as np
import pytest

from qaoarl.problems import MaxCutProblem, random_regular_graph, triangle
from qaoarl.simulator import (MAX_QUBITS, all_observables, apply_cost_layer,
                              apply_mixer_layer, expect_cost, expect_edge,
                              expect_x, expect_z, norm_error, run_schedule,
                              state_fidelity, uniform_state)
from qaoarl.errors import BudgetError

import oracles

ATOL = 1e-12


def _random_problem(n, rng):
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    take = rng.choice(len(pairs), size=max(1, len(pairs) // 2), replace=False)
    return MaxCutProblem(n, tuple(pairs[int(t)] for t in take))


class TestUniformState:
    def test_amplitudes_and_norm(self):
        psi = uniform_state(3)
        assert psi.shape == (8,)
        np.testing.assert_allclose(psi, np.full(8, 8 ** -0.5), atol=ATOL)
        assert norm_error(psi) < ATOL

    def test_qubit_budget(self):
        with pytest.raises(BudgetError):
            uniform_state(0)
        with pytest.raises(BudgetError):
            uniform_state(MAX_QUBITS + 1)


class TestLayersAgainstDenseReference:
    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_cost_layer(self, n):
        rng = np.random.default_rng(n)
        prob = _random_problem(n, rng)
        for _ in range(5):
            psi = oracles.random_state(n, rng)
            gamma = rng.uniform(0, 2 * np.pi)
            expected = oracles.cost_layer_matrix(n, prob.edges, gamma) @ psi
            got = apply_cost_layer(psi, prob, gamma)
            np.testing.assert_allclose(got, expected, atol=ATOL)

    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_mixer_layer(self, n):
        rng = np.random.default_rng(10 + n)
        for _ in range(5):
            psi = oracles.random_state(n, rng)
            beta = rng.uniform(0, 2 * np.pi)
            expected = oracles.mixer_matrix(n, beta) @ psi
            got = apply_mixer_layer(psi, beta)
            np.testing.assert_allclose(got, expected, atol=ATOL)

    def test_run_schedule_composes_layers(self):
        prob = triangle()
        schedule = [(0.7, 1.1), (2.0, 0.3)]
        expected = oracles.uniform_state(3)
        for gamma, beta in schedule:
            expected = oracles.cost_layer_matrix(3, prob.edges, gamma) @ expected
            expected = oracles.mixer_matrix(3, beta) @ expected
        np.testing.assert_allclose(run_schedule(prob, schedule), expected, atol=ATOL)

    def test_empty_schedule_is_uniform_state(self):
        prob = triangle()
        np.testing.assert_array_equal(run_schedule(prob, np.empty((0, 2))),
                                      uniform_state(3))


class TestInPlaceSemantics:
    def test_copy_by_default(self):
        psi = uniform_state(2)
        before = psi.copy()
        out = apply_mixer_layer(psi, 0.5)
        assert out is not psi
        np.testing.assert_array_equal(psi, before)

    def test_inplace_returns_same_array(self):
        psi = uniform_state(2)
        out = apply_mixer_layer(psi, 0.5, inplace=True)
        assert out is psi

    def test_inplace_requires_complex_contiguous(self):
        with pytest.raises(ValueError):
            apply_mixer_layer(np.ones(4), 0.5, inplace=True)


class TestObservables:
    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_match_dense_operators(self, n):
        rng = np.random.default_rng(20 + n)
        prob = _random_problem(n, rng)
        psi = oracles.random_state(n, rng)
        h = oracles.cost_hamiltonian(n, prob.edges)
        assert abs(expect_cost(psi, prob) - oracles.expectation(psi, h)) < ATOL
        for q in range(n):
            x_op = oracles.op_on_qubit(oracles.SIGMA_X, q, n)
            z_op = oracles.op_on_qubit(oracles.SIGMA_Z, q, n)
            assert abs(expect_x(psi, q) - oracles.expectation(psi, x_op)) < ATOL
            assert abs(expect_z(psi, q) - oracles.expectation(psi, z_op)) < ATOL
        for edge in prob.edges:
            e_op = oracles.cost_hamiltonian(n, [edge])
            assert abs(expect_edge(psi, prob, edge)
                       - oracles.expectation(psi, e_op)) < ATOL

    def test_all_observables_consistent_with_singles(self):
        rng = np.random.default_rng(3)
        prob = random_regular_graph(6, 3, seed=1)
        psi = oracles.random_state(6, rng)
        xs, zs, edge_vals = all_observables(psi, prob)
        for q in range(6):
            assert abs(xs[q] - expect_x(psi, q)) < ATOL
            assert abs(zs[q] - expect_z(psi, q)) < ATOL
        for k, edge in enumerate(prob.edges):
            assert abs(edge_vals[k] - expect_edge(psi, prob, edge)) < ATOL

    def test_all_observables_can_skip_edges(self):
        prob = triangle()
        _, _, edge_vals = all_observables(uniform_state(3), prob,
                                          include_edges=False)
        assert edge_vals.size == 0

    def test_unknown_edge_rejected(self):
        prob = MaxCutProblem(3, ((0, 1),))
        with pytest.raises(ValueError, match="not part"):
            expect_edge(uniform_state(3), prob, (1, 2))

    def test_qubit_index_bounds(self):
        psi = uniform_state(2)
        with pytest.raises(IndexError):
            expect_x(psi, 2)
        with pytest.raises(IndexError):
            expect_z(psi, -1)

    def test_state_problem_size_mismatch(self):
        with pytest.raises(ValueError, match="qubits"):
            expect_cost(uniform_state(2), triangle())


class TestNumericalHygiene:
    def test_norm_preserved_over_many_layers(self):
        prob = random_regular_graph(8, 3, seed=0)
        rng = np.random.default_rng(0)
        psi = uniform_state(8)
        for _ in range(100):
            apply_cost_layer(psi, prob, rng.uniform(0, np.pi), inplace=True)
            apply_mixer_layer(psi, rng.uniform(0, 2 * np.pi), inplace=True)
        assert norm_error(psi) < 1e-10

    def test_fidelity_is_phase_insensitive(self):
        rng = np.random.default_rng(5)
        psi = oracles.random_state(3, rng)
        assert abs(state_fidelity(psi, np.exp(1j * 0.7) * psi) - 1.0) < ATOL

    def test_fidelity_shape_mismatch(self):
        with pytest.raises(ValueError):
            state_fidelity(uniform_state(2), uniform_state(3))
