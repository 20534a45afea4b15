"""Shared test helpers: case-study sources, fake mutants, mock verdicts."""

from __future__ import annotations

from pathlib import Path

from mist.execution import KillMatrix, Status, Verdict
from mist.mutation import Mutant

STUB_RUNNER = Path(__file__).parent / "stub_runner.py"

CASE_STUDY_SOURCE = '''def move_one_ball(arr):
    """
    Determine if it is possible to get a sorted array
    by performing right shift operations.
    Ex: [3, 4, 5, 1, 2] -> True (2 shifts)
    Ex: [3, 5, 4, 1, 2] -> False
    """
    if len(arr) == 0: return True
    sorted_arr = sorted(arr)
    if arr == sorted_arr: return True

    # Check all possible rotations
    for i in range(1, len(arr)):
        if arr[i:] + arr[:i] == sorted_arr:
            return True
    return False
'''

BASELINE_SUITE = '''import unittest

class TestMoveOneBall(unittest.TestCase):
    def test_already_sorted(self):
        # Requires 0 shifts.
        self.assertTrue(move_one_ball([1, 2, 3, 4, 5]))

    def test_two_shifts(self):
        self.assertTrue(move_one_ball([3, 4, 5, 1, 2]))

    def test_large_values(self):
        self.assertTrue(move_one_ball([10, 20, 30, 40, 100]))
'''

ONE_SHIFT_TEST = '''    def test_one_shift(self):
        # Requires exactly one right shift.
        self.assertTrue(move_one_ball([2, 1]))
'''

EXTENDED_SUITE = BASELINE_SUITE + "\n" + ONE_SHIFT_TEST


def fake_mutants(count: int, weights: list[float] | None = None) -> list[Mutant]:
    """Distinct placeholder mutants whose sources identify them."""
    mutants = []
    for i in range(count):
        weight = weights[i] if weights else 1.0
        mutants.append(
            Mutant(
                id=f"m{i}",
                category="CRP",
                original_line=1,
                mutated_line=1,
                original_fragment="0",
                mutated_fragment=str(i + 1),
                weight=weight,
                mutated_source=f"MUTANT_TAG = {i}\n",
            )
        )
    return mutants


def make_verdict_fn(source: str, source_status: dict[str, str], kills: dict[str, set[str]], mutants: list[Mutant]):
    """Mocked execution: verdicts keyed by variant source and method id.

    ``source_status`` maps method id to the verdict status against the
    canonical source (default PASS); ``kills`` maps method id to the set of
    mutant ids the method kills.
    """
    by_source = {m.mutated_source: m.id for m in mutants}

    def fn(code: str, tests: str, method: str) -> Verdict:
        if code == source:
            status = Status(source_status.get(method, "PASS"))
            return Verdict(status, 0.0, "" if status is Status.PASS else "mocked")
        mutant_id = by_source[code]
        if mutant_id in kills.get(method, set()):
            return Verdict(Status.FAIL, 0.0, "mocked kill")
        return Verdict(Status.PASS, 0.0)

    return fn


def matrix_from_kills(
    kills: dict[str, set[str]],
    mutants: list[str],
    weights: dict[str, float] | None = None,
    failing_tests: set[str] | None = None,
) -> KillMatrix:
    """Hand-built kill matrix for selection and scoring tests."""
    failing_tests = failing_tests or set()
    tests = list(kills)
    source_verdicts = {
        t: Verdict(Status.FAIL if t in failing_tests else Status.PASS, 0.01)
        for t in tests
    }
    grid: list[list[Verdict | None]] = []
    for t in tests:
        if t in failing_tests:
            grid.append([None] * len(mutants))
        else:
            grid.append(
                [
                    Verdict(Status.FAIL if m in kills[t] else Status.PASS, 0.01)
                    for m in mutants
                ]
            )
    return KillMatrix(
        tests=tests,
        mutants=list(mutants),
        source_verdicts=source_verdicts,
        grid=grid,
        weights=dict(weights or {}),
    )
