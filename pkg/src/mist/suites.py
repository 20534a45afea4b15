"""Mutation-score computation, greedy suite selection, and utility curves.

The weighted-coverage objective maximized here is monotone and submodular,
so greedy selection by marginal gain carries the classical (1 - 1/e)
approximation guarantee relative to the optimal fixed-size suite.
"""

from __future__ import annotations

import io
import csv
import json
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import DuplicateTest, EmptyMutantPool
from .execution import KillMatrix

__all__ = [
    "SelectionResult",
    "mutation_score",
    "greedy_select",
    "minimize_suite",
    "utility_curve",
    "curve_to_csv",
    "selection_to_json",
]


@dataclass(frozen=True)
class SelectionResult:
    """Greedy pick order, the gain realized at each pick, and the cover."""

    order: tuple[str, ...]
    gains: tuple[float, ...]
    covered: frozenset[str]


def mutation_score(matrix: KillMatrix, suite: Iterable[str]) -> float:
    """Fraction of the mutant pool killed by at least one suite test."""
    if not matrix.mutants:
        raise EmptyMutantPool("mutation score undefined for an empty mutant pool")
    suite = list(suite)
    unknown = [t for t in suite if t not in matrix.tests]
    if unknown:
        raise KeyError(f"tests not in matrix: {unknown}")
    return len(matrix.killed_by(suite)) / len(matrix.mutants)


def greedy_select(matrix: KillMatrix, k: int) -> SelectionResult:
    """Pick up to ``k`` tests maximizing weighted new-kill gain per step.

    Ties break toward the lowest test index; selection stops early once
    the best available gain is zero.
    """
    if k < 0:
        raise ValueError(f"budget must be >= 0, got {k}")
    kill_rows = {t: matrix.kills_of(t) for t in matrix.tests}
    return _greedy_over(matrix, matrix.tests, kill_rows, k, target=None)


def minimize_suite(matrix: KillMatrix, suite: Iterable[str]) -> list[str]:
    """A subset of ``suite`` with the same mutation score.

    Greedy cover over the suite's own kills, then a reverse pass dropping
    any test whose removal leaves the covered set intact. The result is
    returned in matrix test order.
    """
    suite = list(suite)
    unknown = [t for t in suite if t not in matrix.tests]
    if unknown:
        raise KeyError(f"tests not in matrix: {unknown}")
    ordered = [t for t in matrix.tests if t in set(suite)]
    kill_rows = {t: matrix.kills_of(t) for t in ordered}
    target = matrix.killed_by(ordered)

    picked = list(_greedy_over(matrix, ordered, kill_rows, len(ordered), target).order)
    for candidate in reversed(list(picked)):
        rest = [t for t in picked if t != candidate]
        remaining_cover: set[str] = set()
        for t in rest:
            remaining_cover |= kill_rows[t]
        if remaining_cover == target:
            picked = rest
    return [t for t in matrix.tests if t in set(picked)]


def utility_curve(
    matrix: KillMatrix, order: Sequence[str]
) -> list[tuple[int, str, float, float]]:
    """Per-step marginal gain and cumulative score along a fixed order.

    Returns ``(step, test_id, marginal_gain, cumulative_score)`` rows with
    1-based steps. Gains are weighted by mutant difficulty; the cumulative
    column is the plain mutation score of the prefix.
    """
    seen: set[str] = set()
    for test_id in order:
        if test_id in seen:
            raise DuplicateTest(f"duplicate test id in order: {test_id}")
        seen.add(test_id)
    unknown = [t for t in order if t not in matrix.tests]
    if unknown:
        raise KeyError(f"tests not in matrix: {unknown}")
    if not order:
        return []
    if not matrix.mutants:
        raise EmptyMutantPool("utility curve undefined for an empty mutant pool")

    points: list[tuple[int, str, float, float]] = []
    covered: set[str] = set()
    for step, test_id in enumerate(order, start=1):
        new_kills = matrix.kills_of(test_id) - covered
        gain = sum(matrix.weights[m] for m in new_kills)
        covered |= new_kills
        points.append((step, test_id, gain, len(covered) / len(matrix.mutants)))
    return points


def curve_to_csv(points: Sequence[tuple[int, str, float, float]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["step", "test_id", "marginal_gain", "cumulative_score"])
    for step, test_id, gain, score in points:
        writer.writerow([step, test_id, f"{gain:g}", f"{score:g}"])
    return buffer.getvalue()


def selection_to_json(result: SelectionResult, score: float) -> str:
    payload = {
        "order": list(result.order),
        "gains": list(result.gains),
        "score": score,
    }
    return json.dumps(payload, indent=2) + "\n"


def _greedy_over(
    matrix: KillMatrix,
    candidates: Sequence[str],
    kill_rows: dict[str, frozenset[str]],
    k: int,
    target: set[str] | None,
) -> SelectionResult:
    order: list[str] = []
    gains: list[float] = []
    covered: set[str] = set()
    available = list(candidates)
    while len(order) < k and available:
        best_test = None
        best_gain = 0.0
        for test_id in available:
            gain = sum(matrix.weights[m] for m in kill_rows[test_id] - covered)
            if gain > best_gain:
                best_gain = gain
                best_test = test_id
        if best_test is None:
            break
        order.append(best_test)
        gains.append(best_gain)
        covered |= kill_rows[best_test]
        available.remove(best_test)
        if target is not None and covered == target:
            break
    return SelectionResult(
        order=tuple(order), gains=tuple(gains), covered=frozenset(covered)
    )
