"""
tests/test_ordering.py - ConvLens

Función objetivo, búsqueda exhaustiva y recocido simulado.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from models.confusion import ConfusionMatrix
from models.permutation import Permutation
from services import confmat_service, ordering_service
from services.errors import ConvLensError


def random_matrices(count: int, k: int, seed: int):
    rng = np.random.default_rng(seed)
    return [ConfusionMatrix(rng.integers(0, 21, size=(k, k))) for _ in range(count)]


class TestObjective:

    def test_identity_matrix_scores_zero(self):
        c = ConfusionMatrix(np.eye(4, dtype=int) * 7)
        assert ordering_service.objective_value(c, Permutation.identity(4)) == 0

    def test_adjacent_confusion(self):
        c = ConfusionMatrix([[0, 5], [5, 0]])
        assert ordering_service.objective_value(c, Permutation.identity(2)) == 10

    def test_three_class_example(self, example3):
        assert ordering_service.objective_value(example3, Permutation.identity(3)) == 30
        assert ordering_service.objective_value(example3, Permutation([1, 0, 2])) == 20

    def test_wrong_length(self, example3):
        with pytest.raises(ConvLensError):
            ordering_service.objective_value(example3, Permutation.identity(2))

    @given(st.integers(2, 6).flatmap(lambda k: arrays(np.int64, (k, k), elements=st.integers(0, 9)))
           .filter(lambda m: m.sum() > 0))
    @settings(max_examples=50, deadline=None)
    def test_reversal_keeps_objective(self, cells):
        c = ConfusionMatrix(cells)
        identity = Permutation.identity(c.k)
        assert (ordering_service.objective_value(c, identity)
                == ordering_service.objective_value(c, identity.reversed()))


class TestBruteForce:

    def test_three_class_optimum(self, example3):
        result = ordering_service.brute_force_order(example3)
        assert result.objective == 20
        assert result.initial_objective == 30
        assert result.order == [1, 0, 2]

    def test_rejects_large_k(self):
        c = ConfusionMatrix(np.ones((11, 11), dtype=int))
        with pytest.raises(ConvLensError, match="K <= 10"):
            ordering_service.brute_force_order(c)

    def test_never_worse_than_identity(self):
        for c in random_matrices(5, 5, seed=3):
            result = ordering_service.brute_force_order(c)
            assert result.objective <= result.initial_objective
            assert ordering_service.objective_value(c, result.permutation) == result.objective

    @given(st.integers(2, 6).flatmap(lambda k: st.tuples(
        arrays(np.int64, (k, k), elements=st.integers(0, 15)).filter(lambda m: m.sum() > 0),
        st.permutations(list(range(k))),
    )))
    @settings(max_examples=60, deadline=None)
    def test_optimum_ignores_input_class_order(self, data):
        cells, shuffle = data
        c = ConfusionMatrix(cells)
        shuffled = confmat_service.permute(c, Permutation(shuffle))
        original = ordering_service.brute_force_order(c)
        relabelled = ordering_service.brute_force_order(shuffled)
        assert relabelled.objective == original.objective
        mapped = Permutation([shuffle[i] for i in relabelled.order])
        assert ordering_service.objective_value(c, mapped) == original.objective


class TestAnnealing:

    def test_three_class_example(self, example3):
        schedule = ordering_service.default_schedule(example3, steps=10000, restarts=3, seed=1)
        result = ordering_service.anneal_order(example3, schedule)
        assert result.objective == 20
        assert result.initial_objective == 30

    def test_default_schedule_values(self, example3):
        schedule = ordering_service.default_schedule(example3)
        assert schedule.steps == 1500 * 3
        assert schedule.t0 == pytest.approx(1.0)
        assert schedule.cooling ** schedule.steps == pytest.approx(0.001)

    def test_same_seed_same_order(self):
        c = random_matrices(1, 7, seed=11)[0]
        schedule = ordering_service.default_schedule(c, steps=3000, seed=42)
        first = ordering_service.anneal_order(c, schedule)
        second = ordering_service.anneal_order(c, schedule)
        assert first == second

    def test_trace_is_non_increasing(self):
        c = random_matrices(1, 6, seed=5)[0]
        schedule = ordering_service.default_schedule(c, steps=2000, restarts=1, trace_every=100)
        result = ordering_service.anneal_order(c, schedule)
        assert len(result.trace) == 20
        assert all(a >= b for a, b in zip(result.trace, result.trace[1:]))
        assert result.trace[-1] == result.objective

    def test_trace_omitted_by_default(self, example3):
        schedule = ordering_service.default_schedule(example3, steps=100)
        assert ordering_service.anneal_order(example3, schedule).trace is None

    @pytest.mark.parametrize("metropolis", ["best", "current"])
    def test_result_is_consistent(self, metropolis):
        for c in random_matrices(3, 9, seed=17):
            schedule = ordering_service.default_schedule(c, steps=2000, restarts=2,
                                                         seed=9, metropolis=metropolis)
            result = ordering_service.anneal_order(c, schedule)
            assert sorted(result.order) == list(range(c.k))
            assert result.objective <= result.initial_objective
            assert ordering_service.objective_value(c, result.permutation) == result.objective

    def test_matches_exhaustive_search(self):
        matrices = random_matrices(20, 8, seed=2024)
        hits = 0
        for index, c in enumerate(matrices):
            exact = ordering_service.brute_force_order(c)
            schedule = ordering_service.default_schedule(c, seed=index)
            annealed = ordering_service.anneal_order(c, schedule)
            assert annealed.objective >= exact.objective
            hits += annealed.objective == exact.objective
        assert hits >= 19

    @pytest.mark.slow
    def test_matches_exhaustive_search_hundred(self):
        matrices = random_matrices(100, 8, seed=7)
        hits = 0
        for index, c in enumerate(matrices):
            exact = ordering_service.brute_force_order(c)
            annealed = ordering_service.anneal_order(c, ordering_service.default_schedule(c, seed=index))
            hits += annealed.objective == exact.objective
        assert hits >= 95
