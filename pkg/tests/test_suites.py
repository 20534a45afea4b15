"""Suite tools: mutation score, greedy selection, minimization, curves."""

from __future__ import annotations

import itertools
import random

import pytest

from mist.errors import DuplicateTest, EmptyMutantPool
from mist.suites import (
    curve_to_csv,
    greedy_select,
    minimize_suite,
    mutation_score,
    utility_curve,
)

from helpers import matrix_from_kills

# Four tests against six mutants; T0+T1 cover three of them.
FIXTURE_KILLS = {
    "T0": {"m0", "m1"},
    "T1": {"m1", "m2"},
    "T2": {"m0"},
    "T3": {"m3"},
}
FIXTURE_MUTANTS = ["m0", "m1", "m2", "m3", "m4", "m5"]


@pytest.fixture
def fixture_matrix():
    return matrix_from_kills(FIXTURE_KILLS, FIXTURE_MUTANTS)


class TestMutationScore:
    def test_empty_suite(self, fixture_matrix):
        assert mutation_score(fixture_matrix, []) == 0.0

    def test_half_covered(self, fixture_matrix):
        assert mutation_score(fixture_matrix, ["T0", "T1"]) == 0.5

    def test_full_cover_is_one(self):
        matrix = matrix_from_kills({"T0": {"m0"}, "T1": {"m1"}}, ["m0", "m1"])
        assert mutation_score(matrix, ["T0", "T1"]) == 1.0

    def test_empty_pool_rejected(self):
        matrix = matrix_from_kills({"T0": set()}, [])
        with pytest.raises(EmptyMutantPool):
            mutation_score(matrix, ["T0"])

    def test_unknown_test_rejected(self, fixture_matrix):
        with pytest.raises(KeyError):
            mutation_score(fixture_matrix, ["nope"])

    def test_monotone_in_suite(self):
        rng = random.Random(11)
        for _ in range(100):
            n_tests, n_mutants = rng.randint(1, 8), rng.randint(1, 10)
            mutants = [f"m{j}" for j in range(n_mutants)]
            kills = {
                f"T{i}": {m for m in mutants if rng.random() < 0.3}
                for i in range(n_tests)
            }
            matrix = matrix_from_kills(kills, mutants)
            tests = list(kills)
            small = rng.sample(tests, rng.randint(0, n_tests))
            extra = rng.sample(tests, rng.randint(0, n_tests))
            large = list(dict.fromkeys(small + extra))
            assert mutation_score(matrix, small) <= mutation_score(matrix, large)


class TestGreedySelect:
    def test_zero_budget(self, fixture_matrix):
        result = greedy_select(fixture_matrix, 0)
        assert result.order == ()
        assert result.gains == ()

    def test_textbook_instance(self):
        matrix = matrix_from_kills(
            {"T1": {"m1", "m2"}, "T2": {"m2"}, "T3": {"m3"}}, ["m1", "m2", "m3"]
        )
        result = greedy_select(matrix, 2)
        assert result.order == ("T1", "T3")
        assert result.gains == (2.0, 1.0)
        # Exhaustive confirmation that greedy is optimal here.
        best = max(
            len(matrix.killed_by(combo))
            for combo in itertools.combinations(matrix.tests, 2)
        )
        assert len(result.covered) == best

    def test_zero_gain_early_stop(self):
        matrix = matrix_from_kills({"T0": set(), "T1": set()}, ["m0"])
        assert greedy_select(matrix, 2).order == ()

    def test_gains_non_increasing(self):
        rng = random.Random(3)
        for _ in range(50):
            mutants = [f"m{j}" for j in range(rng.randint(1, 12))]
            kills = {
                f"T{i}": {m for m in mutants if rng.random() < 0.4}
                for i in range(rng.randint(1, 10))
            }
            weights = {m: rng.choice([1.0, 1.5, 2.0]) for m in mutants}
            matrix = matrix_from_kills(kills, mutants, weights)
            result = greedy_select(matrix, rng.randint(0, 10))
            assert all(a >= b for a, b in zip(result.gains, result.gains[1:]))

    def test_tie_breaks_to_lowest_index(self):
        matrix = matrix_from_kills({"T0": {"m0"}, "T1": {"m0"}}, ["m0"])
        assert greedy_select(matrix, 1).order == ("T0",)

    def test_weighted_gain_changes_pick(self):
        matrix = matrix_from_kills(
            {"T0": {"m0"}, "T1": {"m1", "m2"}},
            ["m0", "m1", "m2"],
            weights={"m0": 5.0, "m1": 1.0, "m2": 1.0},
        )
        result = greedy_select(matrix, 1)
        assert result.order == ("T0",)
        assert result.gains == (5.0,)

    def test_coverage_matches_covered_field(self, fixture_matrix):
        result = greedy_select(fixture_matrix, 4)
        assert result.covered == fixture_matrix.killed_by(result.order)


class TestMinimizeSuite:
    def test_singleton_with_kills(self, fixture_matrix):
        assert minimize_suite(fixture_matrix, ["T0"]) == ["T0"]

    def test_singleton_without_kills(self):
        matrix = matrix_from_kills({"T0": set()}, ["m0"])
        assert minimize_suite(matrix, ["T0"]) == []

    def test_duplicate_kill_rows_collapse(self):
        matrix = matrix_from_kills(
            {"T0": {"m0"}, "T1": {"m0"}, "T2": {"m0"}}, ["m0"]
        )
        assert minimize_suite(matrix, ["T0", "T1", "T2"]) == ["T0"]

    def test_six_tests_two_cover_everything(self):
        kills = {
            "T0": {"m0", "m1", "m2"},
            "T1": {"m3", "m4"},
            "T2": {"m0"},
            "T3": {"m1", "m3"},
            "T4": {"m2"},
            "T5": {"m4"},
        }
        mutants = ["m0", "m1", "m2", "m3", "m4"]
        matrix = matrix_from_kills(kills, mutants)
        minimized = minimize_suite(matrix, list(kills))
        assert len(minimized) == 2
        assert mutation_score(matrix, minimized) == mutation_score(matrix, list(kills))
        # Brute force: no single test covers everything.
        assert all(
            matrix.killed_by([t]) != set(mutants) for t in matrix.tests
        )

    def test_idempotent_and_score_preserving(self):
        rng = random.Random(5)
        for _ in range(60):
            mutants = [f"m{j}" for j in range(rng.randint(1, 10))]
            kills = {
                f"T{i}": {m for m in mutants if rng.random() < 0.35}
                for i in range(rng.randint(1, 9))
            }
            matrix = matrix_from_kills(kills, mutants)
            suite = rng.sample(list(kills), rng.randint(1, len(kills)))
            minimized = minimize_suite(matrix, suite)
            assert set(minimized) <= set(suite)
            assert mutation_score(matrix, minimized) == mutation_score(matrix, suite)
            assert minimize_suite(matrix, minimized) == minimized


class TestUtilityCurve:
    def test_empty_order(self, fixture_matrix):
        assert utility_curve(fixture_matrix, []) == []

    def test_fixture_walk(self, fixture_matrix):
        points = utility_curve(fixture_matrix, ["T0", "T1", "T2", "T3"])
        assert [p[2] for p in points] == [2.0, 1.0, 0.0, 1.0]
        assert [p[3] for p in points] == pytest.approx([2 / 6, 3 / 6, 3 / 6, 4 / 6])

    def test_greedy_order_has_non_increasing_gains(self, fixture_matrix):
        order = greedy_select(fixture_matrix, 4).order
        points = utility_curve(fixture_matrix, order)
        gains = [p[2] for p in points]
        assert gains == sorted(gains, reverse=True)

    def test_duplicate_rejected(self, fixture_matrix):
        with pytest.raises(DuplicateTest):
            utility_curve(fixture_matrix, ["T0", "T0"])

    def test_csv_export(self, fixture_matrix):
        points = utility_curve(fixture_matrix, ["T0", "T1"])
        text = curve_to_csv(points)
        lines = text.splitlines()
        assert lines[0] == "step,test_id,marginal_gain,cumulative_score"
        assert lines[1].startswith("1,T0,2,")


class TestGreedyBound:
    def test_approximation_guarantee(self):
        # Greedy weighted coverage is at least (1 - 1/e) of the exhaustive
        # optimum on small instances.
        rng = random.Random(299)
        bound = 1 - 1 / 2.718281828459045
        for _ in range(40):
            n_tests = rng.randint(1, 10)
            mutants = [f"m{j}" for j in range(rng.randint(1, 8))]
            kills = {
                f"T{i}": {m for m in mutants if rng.random() < 0.35}
                for i in range(n_tests)
            }
            weights = {m: rng.choice([1.0, 2.0, 3.5]) for m in mutants}
            matrix = matrix_from_kills(kills, mutants, weights)
            k = rng.randint(1, min(4, n_tests))
            result = greedy_select(matrix, k)
            greedy_value = sum(weights[m] for m in result.covered)
            optimum = 0.0
            for size in range(0, k + 1):
                for combo in itertools.combinations(matrix.tests, size):
                    value = sum(weights[m] for m in matrix.killed_by(combo))
                    optimum = max(optimum, value)
            assert greedy_value >= bound * optimum - 1e-9
