"""Consensus-based reranking of code candidates against test suites.

Each candidate is voted on by each suite: a vote of 1 means the candidate
passes every test method of that suite. Row sums rank the candidates and
the argmax (lowest index on ties) is selected.
"""

from __future__ import annotations

import ast
import json
from dataclasses import dataclass
from typing import Sequence

from .execution import ExecutionLimits, VerdictFn, _run_job_groups, discover_test_methods

__all__ = ["ConsensusMatrix", "build_consensus", "select_best", "consensus_to_json"]


@dataclass(frozen=True)
class ConsensusMatrix:
    """N x K pass/fail vote grid with per-candidate scores."""

    candidates: tuple[str, ...]
    suites: tuple[str, ...]
    grid: tuple[tuple[int, ...], ...]
    scores: tuple[int, ...]

    @classmethod
    def from_grid(
        cls,
        candidates: Sequence[str],
        suites: Sequence[str],
        grid: Sequence[Sequence[int]],
    ) -> "ConsensusMatrix":
        if len(grid) != len(candidates):
            raise ValueError("grid row count must equal candidate count")
        rows = []
        for row in grid:
            if len(row) != len(suites):
                raise ValueError("grid column count must equal suite count")
            if any(v not in (0, 1) for v in row):
                raise ValueError("grid entries must be 0 or 1")
            rows.append(tuple(int(v) for v in row))
        return cls(
            candidates=tuple(candidates),
            suites=tuple(suites),
            grid=tuple(rows),
            scores=tuple(sum(row) for row in rows),
        )


def build_consensus(
    candidates: Sequence[str],
    suites: Sequence[str],
    limits: ExecutionLimits | None = None,
    verdict_fn: VerdictFn | None = None,
    candidate_ids: Sequence[str] | None = None,
    suite_ids: Sequence[str] | None = None,
) -> ConsensusMatrix:
    """Vote every candidate source against every suite module.

    A candidate that fails to parse gets an all-zero row without being
    executed; a suite with no discoverable test methods contributes an
    all-zero column (no evidence of passing anything).
    """
    if not candidates or not suites:
        raise ValueError("need at least one candidate and one suite")
    limits = limits or ExecutionLimits()
    candidate_ids = list(candidate_ids or (f"c{i}" for i in range(len(candidates))))
    suite_ids = list(suite_ids or (f"s{j}" for j in range(len(suites))))

    suite_methods: list[list[str]] = []
    for suite in suites:
        try:
            suite_methods.append(discover_test_methods(suite))
        except SyntaxError:
            suite_methods.append([])

    parseable = []
    for candidate in candidates:
        try:
            ast.parse(candidate)
            parseable.append(True)
        except SyntaxError:
            parseable.append(False)

    grid = [[0] * len(suites) for _ in candidates]
    for j, (suite, methods) in enumerate(zip(suites, suite_methods)):
        if not methods:
            continue
        if verdict_fn is not None:
            for i, candidate in enumerate(candidates):
                if not parseable[i]:
                    continue
                verdicts = [verdict_fn(candidate, suite, m) for m in methods]
                grid[i][j] = int(all(v.is_pass() for v in verdicts))
        else:
            groups = [
                [(candidate_ids[i], candidates[i], m) for m in methods]
                for i in range(len(candidates))
                if parseable[i]
            ]
            results = _run_job_groups(groups, suite, limits)
            for i in range(len(candidates)):
                if not parseable[i]:
                    continue
                grid[i][j] = int(
                    all(results[(candidate_ids[i], m)].is_pass() for m in methods)
                )
    return ConsensusMatrix.from_grid(candidate_ids, suite_ids, grid)


def select_best(matrix: ConsensusMatrix) -> int:
    """Index of the highest-scoring candidate, lowest index on ties."""
    if not matrix.candidates:
        raise ValueError("empty consensus matrix")
    best = 0
    for i, score in enumerate(matrix.scores):
        if score > matrix.scores[best]:
            best = i
    return best


def consensus_to_json(matrix: ConsensusMatrix) -> str:
    selected = select_best(matrix)
    payload = {
        "grid": [list(row) for row in matrix.grid],
        "scores": list(matrix.scores),
        "selected": matrix.candidates[selected],
    }
    return json.dumps(payload, indent=2) + "\n"
