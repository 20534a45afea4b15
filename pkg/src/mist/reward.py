"""Incremental reward computation for generated test suites.

A candidate suite is scored one test method at a time against a running
history of killed mutants:

- a method that fails against the canonical source earns a flat failure
  penalty (it rejects correct code);
- a passing method that kills no new mutants earns a redundancy penalty
  that grows exponentially with the step index;
- a passing method that kills new mutants earns a weighted sum of an
  assertion-quality heuristic and its marginal utility.

The per-step rewards are summed and normalized by the square root of the
number of evaluated methods; a suite with no discoverable test methods
earns a large flat penalty instead.
"""

from __future__ import annotations

import ast
import json
import math
from dataclasses import dataclass, field, fields, replace
from enum import Enum
from typing import Iterable, Mapping, Sequence

from .errors import MissingWeight
from .execution import (
    ExecutionLimits,
    Verdict,
    VerdictFn,
    _run_job_groups,
    iter_test_methods,
    prefilter_vulnerable,
)
from .mutation import Mutant

__all__ = [
    "RewardConfig",
    "StepCase",
    "StepRecord",
    "RewardTrace",
    "marginal_utility",
    "dynamic_penalty",
    "quality_score",
    "step_reward",
    "trajectory_reward",
    "score_trajectory",
    "trace_to_json",
    "DEFAULT_QUALITY_WEIGHTS",
]

DEFAULT_QUALITY_WEIGHTS: dict[str, float] = {
    "strict_equality": 1.0,
    "exception": 1.2,
    "collection_equality": 1.0,
    "membership": 0.7,
    "boolean": 0.4,
}

# unittest assertion primitives grouped by specificity kind.
_ASSERT_KINDS: dict[str, str] = {
    "assertEqual": "strict_equality",
    "assertNotEqual": "strict_equality",
    "assertIs": "strict_equality",
    "assertIsNot": "strict_equality",
    "assertIsNone": "strict_equality",
    "assertIsNotNone": "strict_equality",
    "assertRaises": "exception",
    "assertRaisesRegex": "exception",
    "assertWarns": "exception",
    "assertWarnsRegex": "exception",
    "assertAlmostEqual": "collection_equality",
    "assertNotAlmostEqual": "collection_equality",
    "assertListEqual": "collection_equality",
    "assertTupleEqual": "collection_equality",
    "assertSetEqual": "collection_equality",
    "assertDictEqual": "collection_equality",
    "assertCountEqual": "collection_equality",
    "assertSequenceEqual": "collection_equality",
    "assertMultiLineEqual": "collection_equality",
    "assertIn": "membership",
    "assertNotIn": "membership",
    "assertIsInstance": "membership",
    "assertNotIsInstance": "membership",
    "assertGreater": "membership",
    "assertGreaterEqual": "membership",
    "assertLess": "membership",
    "assertLessEqual": "membership",
    "assertRegex": "membership",
    "assertNotRegex": "membership",
    "assertTrue": "boolean",
    "assertFalse": "boolean",
}


class StepCase(str, Enum):
    FAILURE = "FAILURE"
    REDUNDANT = "REDUNDANT"
    EFFECTIVE = "EFFECTIVE"


@dataclass(frozen=True)
class RewardConfig:
    """Coefficients of the incremental reward mechanism.

    Two values are documented conflicts in the source material and are kept
    configurable: ``r_fail_method`` defaults to the algorithmic listing's
    -10.0 (the coefficient table says -1.0), and ``beta`` defaults to the
    coefficient table's 3.0 (the listing's parameter line says 1.0).
    ``truncate_on_failure`` selects between stopping the trajectory at the
    first failing method and penalizing it while continuing (default).
    """

    alpha: float = 0.05
    beta: float = 3.0
    rho_base: float = 0.5
    gamma: float = 1.0
    k_max: int = 10
    r_fail_suite: float = -100.0
    r_fail_method: float = -10.0
    pool_scaling: bool = False
    truncate_on_failure: bool = False
    sigma_eps: float = 1e-8
    quality_cap: float = 3.0
    quality_weights: Mapping[str, float] = field(
        default_factory=lambda: dict(DEFAULT_QUALITY_WEIGHTS)
    )

    def __post_init__(self) -> None:
        if self.k_max < 1:
            raise ValueError(f"k_max must be >= 1, got {self.k_max}")
        if self.rho_base < 0:
            raise ValueError(f"rho_base must be >= 0, got {self.rho_base}")
        if self.quality_cap < 0:
            raise ValueError(f"quality_cap must be >= 0, got {self.quality_cap}")

    @classmethod
    def from_mapping(cls, values: Mapping[str, str]) -> "RewardConfig":
        """Build a config from flat text values, coercing types per field."""
        known = {f.name: f for f in fields(cls)}
        parsed: dict[str, object] = {}
        for key, raw in values.items():
            if key not in known:
                raise ValueError(f"unknown reward config key: {key}")
            if key == "quality_weights":
                parsed[key] = json.loads(raw) if isinstance(raw, str) else raw
            elif key in ("pool_scaling", "truncate_on_failure"):
                parsed[key] = _parse_bool(raw)
            elif key == "k_max":
                parsed[key] = int(raw)
            else:
                parsed[key] = float(raw)
        return replace(cls(), **parsed)  # type: ignore[arg-type]

    def to_flat_items(self) -> list[tuple[str, str]]:
        items: list[tuple[str, str]] = []
        for f in fields(self):
            value = getattr(self, f.name)
            if f.name == "quality_weights":
                items.append((f.name, json.dumps(dict(value), sort_keys=True)))
            elif isinstance(value, bool):
                items.append((f.name, "true" if value else "false"))
            else:
                items.append((f.name, repr(value)))
        return items


def _parse_bool(raw: object) -> bool:
    if isinstance(raw, bool):
        return raw
    text = str(raw).strip().lower()
    if text in ("1", "true", "yes", "on"):
        return True
    if text in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


@dataclass(frozen=True)
class StepRecord:
    method_id: str
    verdict: Verdict
    new_kills: frozenset[str]
    delta: float
    penalty: float
    r_t: float
    case: StepCase


@dataclass(frozen=True)
class RewardTrace:
    """Full record of one scored suite."""

    steps: tuple[StepRecord, ...]
    history_final: frozenset[str]
    k_valid: int
    r_total: float


def marginal_utility(
    kills: Iterable[str], history: Iterable[str], weights: Mapping[str, float]
) -> float:
    """Weighted sum of mutants killed now but absent from the history."""
    kill_set = set(kills)
    missing = [m for m in kill_set if m not in weights]
    if missing:
        raise MissingWeight(f"no weight entry for mutants: {sorted(missing)}")
    history_set = set(history)
    return float(sum(weights[m] for m in kill_set - history_set))


def dynamic_penalty(t: int, cfg: RewardConfig) -> float:
    """Redundancy penalty at step ``t`` (0-based over evaluated methods)."""
    return cfg.rho_base * math.exp(cfg.gamma * t / cfg.k_max)


def quality_score(test_method_source: str, cfg: RewardConfig | None = None) -> float:
    """Heuristic assertion-quality score of a single test method.

    Each assertion primitive contributes its kind weight; repeats of a kind
    count at half weight so stacking identical assertions saturates, and
    the total is capped. Unparseable input scores 0 (handled upstream as a
    failure).
    """
    cfg = cfg or RewardConfig()
    try:
        tree = ast.parse(test_method_source)
    except SyntaxError:
        return 0.0
    total = 0.0
    seen: set[str] = set()
    for kind in _iter_assertion_kinds(tree):
        weight = cfg.quality_weights.get(kind, 0.0)
        total += weight if kind not in seen else weight / 2.0
        seen.add(kind)
    return min(total, cfg.quality_cap)


def _iter_assertion_kinds(tree: ast.AST) -> Iterable[str]:
    for node in ast.walk(tree):
        if isinstance(node, ast.Call):
            name = None
            if isinstance(node.func, ast.Attribute):
                name = node.func.attr
            elif isinstance(node.func, ast.Name):
                name = node.func.id
            if name == "raises":
                yield "exception"
            elif name in _ASSERT_KINDS:
                yield _ASSERT_KINDS[name]
        elif isinstance(node, ast.Assert):
            yield _classify_bare_assert(node.test)


def _classify_bare_assert(test: ast.expr) -> str:
    if isinstance(test, ast.Compare) and len(test.ops) == 1:
        op = test.ops[0]
        if isinstance(op, (ast.Eq, ast.NotEq, ast.Is, ast.IsNot)):
            return "strict_equality"
        if isinstance(op, (ast.In, ast.NotIn, ast.Lt, ast.LtE, ast.Gt, ast.GtE)):
            return "membership"
    if isinstance(test, ast.Call) and isinstance(test.func, ast.Name):
        if test.func.id == "isinstance":
            return "membership"
    return "boolean"


def step_reward(
    verdict: Verdict,
    delta: float,
    t: int,
    q: float,
    cfg: RewardConfig,
    pool_size: int = 0,
) -> tuple[float, StepCase]:
    """Piecewise reward for one evaluated test method.

    ``pool_size`` is the size of the full mutant pool and only matters when
    ``cfg.pool_scaling`` is on, in which case the marginal utility is
    scaled by ``1 + pool_size / 100``.
    """
    if delta < 0:
        raise ValueError(f"delta must be >= 0, got {delta}")
    if not verdict.is_pass():
        return cfg.r_fail_method, StepCase.FAILURE
    if delta == 0:
        return -dynamic_penalty(t, cfg), StepCase.REDUNDANT
    scaled = delta * (1.0 + pool_size / 100.0) if cfg.pool_scaling else delta
    return cfg.alpha * q + cfg.beta * scaled, StepCase.EFFECTIVE


def trajectory_reward(
    step_rewards: Sequence[float], k_valid: int, cfg: RewardConfig
) -> float:
    """Length-normalized total reward of a trajectory.

    ``step_rewards`` holds the rewards of the evaluated steps only; when no
    method was evaluated at all the suite-level failure penalty applies.
    """
    if k_valid < 0 or k_valid > len(step_rewards):
        raise ValueError(f"k_valid {k_valid} out of range for {len(step_rewards)} steps")
    if k_valid == 0:
        return cfg.r_fail_suite
    return sum(step_rewards) / math.sqrt(k_valid)


def score_trajectory(
    source: str,
    mutants: Sequence[Mutant],
    suite_source: str,
    cfg: RewardConfig | None = None,
    limits: ExecutionLimits | None = None,
    verdict_fn: VerdictFn | None = None,
    smoke_tests: str | None = None,
) -> RewardTrace:
    """Score a whole generated suite method by method.

    Methods are discovered in source order; each is first run against the
    canonical source, then (when it passes) against every not-yet-killed
    mutant of the pre-filtered pool. A suite that fails to parse or defines
    no test methods is the suite-level failure outcome, not an error.
    """
    cfg = cfg or RewardConfig()
    limits = limits or ExecutionLimits()
    ast.parse(source)

    try:
        methods = iter_test_methods(ast.parse(suite_source))
    except SyntaxError:
        methods = []
    if not methods:
        return RewardTrace(
            steps=(), history_final=frozenset(), k_valid=0, r_total=cfg.r_fail_suite
        )

    weights = {m.id: m.weight for m in mutants}
    pool_size = len(mutants)
    if smoke_tests is not None:
        vulnerable = prefilter_vulnerable(source, mutants, smoke_tests, limits, verdict_fn)
    else:
        vulnerable = list(mutants)

    run = _make_runner(suite_source, limits, verdict_fn)
    source_verdicts = run([("__source__", source, mid) for mid, _ in methods])

    history: set[str] = set()
    steps: list[StepRecord] = []
    for t, (method_id, method_node) in enumerate(methods):
        verdict = source_verdicts[("__source__", method_id)]
        if not verdict.is_pass():
            r_t, case = cfg.r_fail_method, StepCase.FAILURE
            steps.append(
                StepRecord(method_id, verdict, frozenset(), 0.0, 0.0, r_t, case)
            )
            if cfg.truncate_on_failure:
                break
            continue
        candidates = [m for m in vulnerable if m.id not in history]
        kill_verdicts = run([(m.id, m.mutated_source, method_id) for m in candidates])
        new_kills = frozenset(
            m.id for m in candidates if kill_verdicts[(m.id, method_id)].kills()
        )
        delta = marginal_utility(new_kills, history, weights)
        method_source = ast.get_source_segment(suite_source, method_node) or ""
        q = quality_score(method_source, cfg)
        r_t, case = step_reward(verdict, delta, t, q, cfg, pool_size=pool_size)
        penalty = dynamic_penalty(t, cfg) if case is StepCase.REDUNDANT else 0.0
        history |= new_kills
        steps.append(StepRecord(method_id, verdict, new_kills, delta, penalty, r_t, case))

    k_valid = len(steps)
    r_total = trajectory_reward([s.r_t for s in steps], k_valid, cfg)
    return RewardTrace(
        steps=tuple(steps),
        history_final=frozenset(history),
        k_valid=k_valid,
        r_total=r_total,
    )


def _make_runner(suite_source, limits, verdict_fn):
    if verdict_fn is not None:
        def run(jobs):
            return {
                (key, method): verdict_fn(code, suite_source, method)
                for key, code, method in jobs
            }
        return run

    def run(jobs):
        if not jobs:
            return {}
        # One group per variant keeps dispatch variant-major.
        groups: dict[str, list] = {}
        for job in jobs:
            groups.setdefault(job[0], []).append(job)
        return _run_job_groups(list(groups.values()), suite_source, limits)

    return run


def trace_to_json(trace: RewardTrace) -> str:
    """Serialize a reward trace to its JSON export schema."""
    payload = {
        "r_total": trace.r_total,
        "k_valid": trace.k_valid,
        "steps": [
            {
                "method": step.method_id,
                "status": step.verdict.status.value,
                "case": step.case.value,
                "delta": step.delta,
                "r_t": step.r_t,
                "new_kills": sorted(step.new_kills),
            }
            for step in trace.steps
        ],
    }
    return json.dumps(payload, indent=2, ensure_ascii=False) + "\n"
