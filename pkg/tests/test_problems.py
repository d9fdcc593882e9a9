"""Graph construction, cut evaluation, exact solving, and file round trips."""

import numpy as np
import pytest

from qaoarl.errors import BudgetError, ProblemFileError
from qaoarl.problems import (MaxCutProblem, best_cut_assignment, cut_spectrum,
                             cut_value, cycle, exact_maxcut, load_problem,
                             random_average_degree_graph, random_regular_graph,
                             save_problem, triangle)

from oracles import brute_force_maxcut


class TestMaxCutProblem:
    def test_edges_canonicalized(self):
        prob = MaxCutProblem(4, ((2, 1), (3, 0), (0, 1)))
        assert prob.edges == ((0, 1), (0, 3), (1, 2))
        assert prob.m == 3

    def test_self_loop_rejected(self):
        with pytest.raises(ValueError, match="self-loop"):
            MaxCutProblem(3, ((1, 1),))

    def test_duplicate_edge_rejected(self):
        # same edge in both orientations is still a duplicate
        with pytest.raises(ValueError, match="duplicate"):
            MaxCutProblem(3, ((0, 1), (1, 0)))

    def test_out_of_range_edge_rejected(self):
        with pytest.raises(ValueError, match="out of range"):
            MaxCutProblem(3, ((0, 3),))

    def test_empty_graph_allowed(self):
        assert MaxCutProblem(2, ()).m == 0

    def test_nonpositive_vertex_count_rejected(self):
        with pytest.raises(ValueError, match="positive"):
            MaxCutProblem(0, ())


class TestCutValue:
    def test_triangle_by_hand(self):
        prob = triangle()
        assert cut_value(prob, "000") == 0
        assert cut_value(prob, "100") == 2
        assert cut_value(prob, "110") == 2
        assert cut_value(prob, "111") == 0

    def test_string_and_sequence_agree(self):
        prob = triangle()
        assert cut_value(prob, "101") == cut_value(prob, [1, 0, 1])

    def test_bad_assignments_rejected(self):
        prob = triangle()
        with pytest.raises(ValueError):
            cut_value(prob, "0102")
        with pytest.raises(ValueError):
            cut_value(prob, "01")
        with pytest.raises(ValueError):
            cut_value(prob, [0, 1, 2])


class TestCutSpectrum:
    def test_matches_per_assignment_values(self):
        prob = random_regular_graph(6, 3, seed=7)
        spec = cut_spectrum(prob)
        for z in range(1 << 6):
            bits = [(z >> i) & 1 for i in range(6)]
            assert spec[z] == cut_value(prob, bits)

    def test_returned_read_only(self):
        spec = cut_spectrum(triangle())
        with pytest.raises(ValueError):
            spec[0] = 5

    def test_size_budget_enforced(self):
        with pytest.raises(BudgetError):
            cut_spectrum(MaxCutProblem(25, ()))


class TestExactMaxcut:
    @pytest.mark.parametrize("n,seed", [(2, 0), (4, 1), (6, 2), (8, 3)])
    def test_matches_brute_force(self, n, seed):
        prob = random_average_degree_graph(n, 2.5, seed=seed) if n > 2 \
            else MaxCutProblem(2, ((0, 1),))
        expected, _ = brute_force_maxcut(prob.n_vertices, prob.edges)
        assert exact_maxcut(prob) == expected

    def test_witness_achieves_optimum(self):
        prob = random_regular_graph(8, 3, seed=5)
        value, witness = best_cut_assignment(prob)
        assert witness[0] == "0"
        assert cut_value(prob, witness) == value == exact_maxcut(prob)

    def test_known_small_graphs(self):
        assert exact_maxcut(triangle()) == 2
        assert exact_maxcut(cycle(6)) == 6
        assert exact_maxcut(cycle(7)) == 6

    def test_single_vertex(self):
        assert best_cut_assignment(MaxCutProblem(1, ())) == (0, "0")

    def test_enumeration_budget_enforced(self):
        with pytest.raises(BudgetError):
            exact_maxcut(MaxCutProblem(29, ()))


class TestGenerators:
    def test_regular_graph_degrees(self):
        prob = random_regular_graph(10, 3, seed=0)
        degree = np.zeros(10, dtype=int)
        for i, j in prob.edges:
            degree[i] += 1
            degree[j] += 1
        assert (degree == 3).all()

    def test_regular_graph_deterministic(self):
        a = random_regular_graph(12, 3, seed=9)
        b = random_regular_graph(12, 3, seed=9)
        assert a == b

    def test_regular_graph_parity_rejected(self):
        with pytest.raises(ValueError, match="even"):
            random_regular_graph(5, 3, seed=0)

    def test_regular_graph_degree_bounds(self):
        with pytest.raises(ValueError):
            random_regular_graph(4, 0, seed=0)
        with pytest.raises(ValueError):
            random_regular_graph(4, 4, seed=0)

    def test_average_degree_edge_count(self):
        prob = random_average_degree_graph(10, 3.0, seed=0)
        assert prob.m == 15
        assert prob.n_vertices == 10

    def test_average_degree_bad_target(self):
        with pytest.raises(ValueError):
            random_average_degree_graph(4, 0.0, seed=0)
        with pytest.raises(ValueError):
            random_average_degree_graph(4, 10.0, seed=0)


class TestProblemFiles:
    def test_round_trip(self, tmp_path):
        prob = random_regular_graph(8, 3, seed=2)
        path = tmp_path / "graph.txt"
        save_problem(prob, path)
        assert load_problem(path) == prob

    def test_comments_and_blank_lines(self, tmp_path):
        path = tmp_path / "graph.txt"
        path.write_text("# a triangle\n3\n\n0 1  # first edge\n1 2\n0 2\n")
        assert load_problem(path) == triangle()

    @pytest.mark.parametrize("text", [
        "",
        "not_a_number\n",
        "0\n",
        "3\n0\n",
        "3\n0 1 2\n",
        "3\n0 x\n",
        "3\n0 5\n",
        "3\n1 1\n",
        "3\n0 1\n1 0\n",
    ])
    def test_malformed_files_rejected(self, tmp_path, text):
        path = tmp_path / "bad.txt"
        path.write_text(text)
        with pytest.raises(ProblemFileError):
            load_problem(path)
