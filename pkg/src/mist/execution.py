"""Sandboxed test execution and kill-matrix construction.

Test methods run in isolated interpreter processes ("runners") that speak a
newline-delimited JSON protocol over stdin/stdout:

    request:  {"job_id": str, "code": str, "tests": str, "method": str,
               "timeout_s": float}
    response: {"job_id": str, "status": "PASS"|"FAIL"|"ERROR"|"TIMEOUT",
               "duration_s": float, "detail": str}

The orchestrator owns a bounded pool of runner processes. Jobs are
dispatched variant-major: all test methods for one code variant are sent
sequentially to one runner process to amortize interpreter startup. A
runner that reports TIMEOUT, goes silent past the grace window, or emits
garbage is killed and respawned; a runner that cannot be started at all
raises InfrastructureError.

The runner command defaults to ``python -m mist_runner`` and can be
overridden with the MIST_RUNNER_CMD environment variable or per-call via
ExecutionLimits.runner_cmd.
"""

from __future__ import annotations

import ast
import csv
import io
import json
import os
import select
import shlex
import subprocess
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable, Sequence

from .errors import InfrastructureError
from .mutation import Mutant

__all__ = [
    "Status",
    "Verdict",
    "ExecutionLimits",
    "KillMatrix",
    "VerdictFn",
    "run_test",
    "build_kill_matrix",
    "prefilter_vulnerable",
    "discover_test_methods",
    "iter_test_methods",
    "default_runner_command",
    "SOURCE_ROW_ID",
    "NOT_RUN",
    "GRACE_S",
]

GRACE_S = 1.0

SOURCE_ROW_ID = "__source__"
NOT_RUN = "NOT_RUN"

_KILL_STATUSES = frozenset({"FAIL", "ERROR", "TIMEOUT"})


class Status(str, Enum):
    PASS = "PASS"
    FAIL = "FAIL"
    ERROR = "ERROR"
    TIMEOUT = "TIMEOUT"


@dataclass(frozen=True)
class Verdict:
    """Outcome of running one test method against one code variant."""

    status: Status
    duration_s: float = 0.0
    detail: str = ""

    def is_pass(self) -> bool:
        return self.status is Status.PASS

    def kills(self) -> bool:
        return self.status.value in _KILL_STATUSES


@dataclass(frozen=True)
class ExecutionLimits:
    """Per-job resource limits and pool sizing."""

    timeout_s: float = 5.0
    memory_mb: int | None = None
    workers: int | None = None
    runner_cmd: tuple[str, ...] | None = None

    def pool_size(self) -> int:
        return self.workers or os.cpu_count() or 1


# (code_variant, test_module, method) -> Verdict. Injectable for tests and
# for scoring against recorded/mocked verdicts without a runner process.
VerdictFn = Callable[[str, str, str], Verdict]


def default_runner_command() -> tuple[str, ...]:
    env_cmd = os.environ.get("MIST_RUNNER_CMD")
    if env_cmd:
        return tuple(shlex.split(env_cmd))
    return (sys.executable, "-u", "-m", "mist_runner")


def iter_test_methods(tree: ast.Module) -> list[tuple[str, ast.FunctionDef]]:
    """Test methods in source order, as (qualified id, def node) pairs.

    Discovery matches the unittest convention: methods whose names start
    with ``test`` inside classes whose base name ends with ``TestCase``.
    """
    methods: list[tuple[str, ast.FunctionDef]] = []
    for node in tree.body:
        if not isinstance(node, ast.ClassDef):
            continue
        if not any(_is_testcase_base(base) for base in node.bases):
            continue
        for item in node.body:
            if isinstance(item, (ast.FunctionDef, ast.AsyncFunctionDef)):
                if item.name.startswith("test"):
                    methods.append((f"{node.name}.{item.name}", item))
    return methods


def discover_test_methods(test_module: str) -> list[str]:
    """Qualified test-method ids of a test module, in source order."""
    return [method_id for method_id, _ in iter_test_methods(ast.parse(test_module))]


def _is_testcase_base(base: ast.expr) -> bool:
    if isinstance(base, ast.Name):
        return base.id.endswith("TestCase")
    if isinstance(base, ast.Attribute):
        return base.attr.endswith("TestCase")
    return False


@dataclass
class KillMatrix:
    """Verdict grid over (test method x mutant) plus source verdicts.

    ``grid[i][j]`` holds the verdict of test ``tests[i]`` against mutant
    ``mutants[j]``, or None when the cell was not evaluated because the
    test does not pass the canonical source.
    """

    tests: list[str]
    mutants: list[str]
    source_verdicts: dict[str, Verdict]
    grid: list[list[Verdict | None]]
    weights: dict[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if len(self.grid) != len(self.tests):
            raise ValueError("grid row count must equal test count")
        for row in self.grid:
            if len(row) != len(self.mutants):
                raise ValueError("grid column count must equal mutant count")
        for mutant_id in self.mutants:
            self.weights.setdefault(mutant_id, 1.0)

    def kill(self, test_id: str, mutant_id: str) -> bool:
        """True when the test passes the source and flags the mutant."""
        source = self.source_verdicts.get(test_id)
        if source is None or not source.is_pass():
            return False
        cell = self.grid[self.tests.index(test_id)][self.mutants.index(mutant_id)]
        return cell is not None and cell.kills()

    def kills_of(self, test_id: str) -> frozenset[str]:
        source = self.source_verdicts.get(test_id)
        if source is None or not source.is_pass():
            return frozenset()
        row = self.grid[self.tests.index(test_id)]
        return frozenset(
            mutant_id
            for mutant_id, cell in zip(self.mutants, row)
            if cell is not None and cell.kills()
        )

    def killed_by(self, suite: Iterable[str]) -> set[str]:
        covered: set[str] = set()
        for test_id in suite:
            covered |= self.kills_of(test_id)
        return covered

    def to_csv(self) -> str:
        """Export as ``test_id,mutant_id,status,duration_s`` rows.

        Source verdicts use the reserved mutant id ``__source__``;
        unevaluated grid cells are written with status NOT_RUN so the full
        test/mutant universe round-trips through the file.
        """
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["test_id", "mutant_id", "status", "duration_s"])
        for test_id in self.tests:
            verdict = self.source_verdicts[test_id]
            writer.writerow(
                [test_id, SOURCE_ROW_ID, verdict.status.value, f"{verdict.duration_s:.6f}"]
            )
        for i, test_id in enumerate(self.tests):
            for j, mutant_id in enumerate(self.mutants):
                cell = self.grid[i][j]
                if cell is None:
                    writer.writerow([test_id, mutant_id, NOT_RUN, "0.000000"])
                else:
                    writer.writerow(
                        [test_id, mutant_id, cell.status.value, f"{cell.duration_s:.6f}"]
                    )
        return buffer.getvalue()

    @classmethod
    def from_csv(cls, text: str, weights: dict[str, float] | None = None) -> "KillMatrix":
        reader = csv.reader(io.StringIO(text))
        header = next(reader, None)
        if header != ["test_id", "mutant_id", "status", "duration_s"]:
            raise ValueError(f"unexpected kill-matrix CSV header: {header}")
        tests: list[str] = []
        mutants: list[str] = []
        source_verdicts: dict[str, Verdict] = {}
        cells: dict[tuple[str, str], Verdict | None] = {}
        for row in reader:
            if not row:
                continue
            test_id, mutant_id, status, duration = row
            if test_id not in tests:
                tests.append(test_id)
            if mutant_id == SOURCE_ROW_ID:
                source_verdicts[test_id] = Verdict(Status(status), float(duration))
                continue
            if mutant_id not in mutants:
                mutants.append(mutant_id)
            if status == NOT_RUN:
                cells[(test_id, mutant_id)] = None
            else:
                cells[(test_id, mutant_id)] = Verdict(Status(status), float(duration))
        grid = [[cells.get((t, m)) for m in mutants] for t in tests]
        return cls(
            tests=tests,
            mutants=mutants,
            source_verdicts=source_verdicts,
            grid=grid,
            weights=dict(weights or {}),
        )


def run_test(
    code_variant: str,
    test_module: str,
    method: str,
    limits: ExecutionLimits | None = None,
) -> Verdict:
    """Run one test method against one code variant in a fresh runner."""
    limits = limits or ExecutionLimits()
    results = _run_job_groups(
        [[("variant", code_variant, method)]], test_module, limits
    )
    return results[("variant", method)]


def build_kill_matrix(
    source: str,
    mutants: Sequence[Mutant],
    test_module: str,
    limits: ExecutionLimits | None = None,
    verdict_fn: VerdictFn | None = None,
) -> KillMatrix:
    """Run every discovered test against the source and each mutant.

    Grid cells are only evaluated for tests that PASS the canonical
    source; rows of failing tests are left unevaluated and contribute no
    kills.
    """
    limits = limits or ExecutionLimits()
    tests = discover_test_methods(test_module)
    mutant_ids = [m.id for m in mutants]
    weights = {m.id: m.weight for m in mutants}

    if verdict_fn is not None:
        source_verdicts = {t: verdict_fn(source, test_module, t) for t in tests}
    else:
        results = _run_job_groups(
            [[(SOURCE_ROW_ID, source, t) for t in tests]], test_module, limits
        )
        source_verdicts = {t: results[(SOURCE_ROW_ID, t)] for t in tests}

    passing = [t for t in tests if source_verdicts[t].is_pass()]
    cells: dict[tuple[str, str], Verdict] = {}
    if passing and mutants:
        if verdict_fn is not None:
            for mutant in mutants:
                for t in passing:
                    cells[(t, mutant.id)] = verdict_fn(mutant.mutated_source, test_module, t)
        else:
            groups = [
                [(mutant.id, mutant.mutated_source, t) for t in passing]
                for mutant in mutants
            ]
            results = _run_job_groups(groups, test_module, limits)
            for (mutant_id, method), verdict in results.items():
                cells[(method, mutant_id)] = verdict

    grid: list[list[Verdict | None]] = [
        [cells.get((t, m)) for m in mutant_ids] for t in tests
    ]
    return KillMatrix(
        tests=tests,
        mutants=mutant_ids,
        source_verdicts=source_verdicts,
        grid=grid,
        weights=weights,
    )


def prefilter_vulnerable(
    source: str,
    mutants: Sequence[Mutant],
    smoke_tests: str | None = None,
    limits: ExecutionLimits | None = None,
    verdict_fn: VerdictFn | None = None,
) -> list[Mutant]:
    """Keep only mutants killed by at least one smoke-test method.

    With no smoke tests configured this is a no-op and returns the input
    unchanged, so callers can wire the optimization in unconditionally.
    """
    if smoke_tests is None:
        return list(mutants)
    matrix = build_kill_matrix(source, mutants, smoke_tests, limits, verdict_fn)
    killed = matrix.killed_by(matrix.tests)
    return [m for m in mutants if m.id in killed]


# ---------------------------------------------------------------------------
# runner pool

_Job = tuple[str, str, str]  # (variant key, code, method)


def _run_job_groups(
    groups: Sequence[Sequence[_Job]],
    tests_source: str,
    limits: ExecutionLimits,
) -> dict[tuple[str, str], Verdict]:
    """Execute job groups on the runner pool.

    Each group runs sequentially on its own runner process; groups run in
    parallel up to the pool size. Results are keyed by (variant key,
    method) so assembly order cannot affect the outcome.
    """
    groups = [g for g in groups if g]
    if not groups:
        return {}
    results: dict[tuple[str, str], Verdict] = {}
    workers = min(limits.pool_size(), len(groups))
    if workers <= 1:
        for group in groups:
            results.update(_run_group(group, tests_source, limits))
        return results
    with ThreadPoolExecutor(max_workers=workers) as pool:
        for group_result in pool.map(
            lambda g: _run_group(g, tests_source, limits), groups
        ):
            results.update(group_result)
    return results


def _run_group(
    group: Sequence[_Job], tests_source: str, limits: ExecutionLimits
) -> dict[tuple[str, str], Verdict]:
    results: dict[tuple[str, str], Verdict] = {}
    runner = _RunnerProcess(limits)
    try:
        for sequence, (key, code, method) in enumerate(group):
            job_id = f"{sequence}"
            payload = {
                "job_id": job_id,
                "code": code,
                "tests": tests_source,
                "method": method,
                "timeout_s": limits.timeout_s,
            }
            started = time.monotonic()
            kind, response = runner.request(payload, limits.timeout_s + GRACE_S)
            elapsed = time.monotonic() - started
            if kind == "ok" and response.get("job_id") == job_id:
                verdict = _verdict_from_response(response)
            elif kind == "ok":
                verdict = Verdict(Status.ERROR, elapsed, "protocol: job_id mismatch")
                kind = "bad"
            elif kind == "timeout":
                verdict = Verdict(
                    Status.TIMEOUT, max(elapsed, limits.timeout_s), "no response from runner"
                )
            else:  # eof / bad
                verdict = Verdict(Status.ERROR, elapsed, "runner process exited during job")
            results[(key, method)] = verdict
            # A runner that timed out or broke protocol cannot be trusted
            # for further jobs; recycle it.
            if kind in ("timeout", "eof", "bad") or verdict.status is Status.TIMEOUT:
                runner.close()
                if sequence + 1 < len(group):
                    runner = _RunnerProcess(limits)
    finally:
        runner.close()
    return results


def _verdict_from_response(response: dict) -> Verdict:
    try:
        status = Status(response["status"])
        duration = max(float(response.get("duration_s", 0.0)), 0.0)
        detail = str(response.get("detail", ""))
    except (KeyError, ValueError, TypeError):
        return Verdict(Status.ERROR, 0.0, "protocol: malformed response")
    if status is Status.PASS:
        detail = ""
    return Verdict(status, duration, detail)


class _RunnerProcess:
    """One runner subprocess plus its line-oriented protocol channel."""

    def __init__(self, limits: ExecutionLimits):
        cmd = limits.runner_cmd or default_runner_command()
        preexec = _memory_limiter(limits.memory_mb)
        try:
            self._proc = subprocess.Popen(
                list(cmd),
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.DEVNULL,
                preexec_fn=preexec,
            )
        except OSError as exc:
            raise InfrastructureError(f"cannot start runner {cmd!r}: {exc}") from exc
        self._buffer = b""
        self._probe(cmd)

    def _probe(self, cmd: tuple[str, ...]) -> None:
        # A runner that cannot answer a trivial job never came up at all
        # (missing module, crashed interpreter); surface that as an
        # infrastructure failure rather than a verdict.
        probe = {"job_id": "__probe__", "code": "", "tests": "", "method": "", "timeout_s": 5.0}
        kind, response = self.request(probe, 10.0)
        if kind != "ok" or response.get("job_id") != "__probe__":
            self.close()
            raise InfrastructureError(
                f"runner {cmd!r} failed protocol probe (kind={kind})"
            )

    def request(self, payload: dict, deadline_s: float) -> tuple[str, dict]:
        """Send one request and await its response line.

        Returns (kind, response) where kind is "ok", "timeout", "eof", or
        "bad".
        """
        data = json.dumps(payload).encode("utf-8") + b"\n"
        try:
            assert self._proc.stdin is not None
            self._proc.stdin.write(data)
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError):
            return "eof", {}
        line = self._read_line(deadline_s)
        if line is None:
            return "timeout", {}
        if line == b"":
            return "eof", {}
        try:
            response = json.loads(line.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError):
            return "bad", {}
        if not isinstance(response, dict):
            return "bad", {}
        return "ok", response

    def _read_line(self, deadline_s: float) -> bytes | None:
        """One protocol line; None on deadline, b"" on closed pipe."""
        assert self._proc.stdout is not None
        fd = self._proc.stdout.fileno()
        deadline = time.monotonic() + deadline_s
        while True:
            newline = self._buffer.find(b"\n")
            if newline >= 0:
                line = self._buffer[:newline]
                self._buffer = self._buffer[newline + 1 :]
                return line
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                return None
            ready, _, _ = select.select([fd], [], [], min(remaining, 0.25))
            if not ready:
                continue
            chunk = os.read(fd, 65536)
            if not chunk:
                return b""
            self._buffer += chunk

    def close(self) -> None:
        proc = self._proc
        try:
            if proc.stdin is not None:
                proc.stdin.close()
        except OSError:
            pass
        try:
            proc.wait(timeout=0.5)
        except subprocess.TimeoutExpired:
            proc.kill()
            proc.wait()


def _memory_limiter(memory_mb: int | None) -> Callable[[], None] | None:
    if memory_mb is None:
        return None

    def set_limit() -> None:
        import resource

        cap = memory_mb * 1024 * 1024
        resource.setrlimit(resource.RLIMIT_AS, (cap, cap))

    return set_limit
