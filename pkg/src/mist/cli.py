"""Command-line entry point wiring the toolkit into shell pipelines.

Every subcommand is files-in/files-out: mutant manifests and reports are
JSON, kill matrices and utility curves are CSV. Exit codes: 0 success,
1 domain error, 2 usage error, 3 infrastructure error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import advantage, execution, mutation, repair, rerank, reward, suites
from .errors import InfrastructureError, MistError

__all__ = ["main", "build_parser"]

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_USAGE = 2
EXIT_INFRA = 3


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        return args.handler(args)
    except InfrastructureError as exc:
        print(f"infrastructure error: {exc}", file=sys.stderr)
        return EXIT_INFRA
    except MistError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except SyntaxError as exc:
        print(f"error: subject does not parse: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mist",
        description="Mutation-testing and test-suite-utility toolkit.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mutate", help="generate a mutant manifest for a subject file")
    p.add_argument("src", type=Path)
    p.add_argument("--categories", nargs="+", metavar="CAT", default=None)
    p.add_argument("--limit", type=int, default=None)
    p.add_argument("--weights", action="store_true", help="assign nesting-depth weights")
    p.add_argument("-o", "--output", type=Path, default=None)
    p.set_defaults(handler=_cmd_mutate)

    p = sub.add_parser("matrix", help="build a kill matrix by running tests")
    p.add_argument("src", type=Path)
    p.add_argument("tests", type=Path)
    p.add_argument("--mutants", type=Path, required=True)
    _add_limit_flags(p)
    p.add_argument("-o", "--output", type=Path, default=None)
    p.set_defaults(handler=_cmd_matrix)

    p = sub.add_parser("score", help="mutation score of a suite from a matrix CSV")
    p.add_argument("matrix", type=Path)
    p.add_argument("--suite", nargs="+", default=None, metavar="TEST_ID")
    p.set_defaults(handler=_cmd_score)

    p = sub.add_parser("reward", help="score a generated suite step by step")
    p.add_argument("src", type=Path)
    p.add_argument("suite", type=Path)
    p.add_argument("--mutants", type=Path, required=True)
    p.add_argument("--config", type=Path, default=None)
    p.add_argument("--show-config", action="store_true")
    p.add_argument(
        "--mock-verdicts",
        type=Path,
        default=None,
        help="JSON verdict fixture instead of live execution",
    )
    p.add_argument("--smoke-tests", type=Path, default=None)
    _add_limit_flags(p)
    p.add_argument("-o", "--output", type=Path, default=None)
    p.set_defaults(handler=_cmd_reward)

    p = sub.add_parser("advantages", help="group-relative advantages of rewards")
    p.add_argument("rewards", nargs="+", type=float)
    p.add_argument("--sigma-eps", type=float, default=advantage.DEFAULT_SIGMA_EPS)
    p.set_defaults(handler=_cmd_advantages)

    p = sub.add_parser("select", help="greedy suite selection from a matrix CSV")
    p.add_argument("matrix", type=Path)
    p.add_argument("-k", type=int, required=True)
    p.add_argument("--mutants", type=Path, default=None, help="manifest supplying weights")
    p.add_argument("-o", "--output", type=Path, default=None)
    p.set_defaults(handler=_cmd_select)

    p = sub.add_parser("minimize", help="drop redundant tests from a suite")
    p.add_argument("matrix", type=Path)
    p.add_argument("--suite", nargs="+", required=True, metavar="TEST_ID")
    p.add_argument("--mutants", type=Path, default=None, help="manifest supplying weights")
    p.add_argument("-o", "--output", type=Path, default=None)
    p.set_defaults(handler=_cmd_minimize)

    p = sub.add_parser("curve", help="utility curve of an ordered suite")
    p.add_argument("matrix", type=Path)
    p.add_argument("--order", nargs="+", required=True, metavar="TEST_ID")
    p.add_argument("--mutants", type=Path, default=None, help="manifest supplying weights")
    p.add_argument("-o", "--output", type=Path, default=None)
    p.set_defaults(handler=_cmd_curve)

    p = sub.add_parser("rerank", help="consensus-vote candidates against suites")
    p.add_argument("manifest", type=Path)
    _add_limit_flags(p)
    p.add_argument("-o", "--output", type=Path, default=None)
    p.set_defaults(handler=_cmd_rerank)

    p = sub.add_parser("repair", help="extract and repair raw generated code")
    p.add_argument("file", type=Path, nargs="?", default=None)
    p.add_argument("--max-backtrack", type=int, default=repair.DEFAULT_MAX_BACKTRACK)
    p.set_defaults(handler=_cmd_repair)

    p = sub.add_parser("prompt", help="render the test-generation prompt")
    p.add_argument("question", type=Path)
    p.add_argument("solution", type=Path)
    p.set_defaults(handler=_cmd_prompt)

    return parser


def _add_limit_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--timeout", type=float, default=None, help="per-job timeout seconds")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--memory-mb", type=int, default=None)


def _resolve_limits(args: argparse.Namespace, extras: dict[str, str] | None = None) -> execution.ExecutionLimits:
    """Flag > environment > config file > default, per setting."""
    extras = extras or {}
    timeout = args.timeout
    if timeout is None and os.environ.get("MIST_TIMEOUT_S"):
        timeout = float(os.environ["MIST_TIMEOUT_S"])
    if timeout is None and "timeout_s" in extras:
        timeout = float(extras["timeout_s"])
    workers = args.workers
    if workers is None and os.environ.get("MIST_WORKERS"):
        workers = int(os.environ["MIST_WORKERS"])
    if workers is None and "workers" in extras:
        workers = int(extras["workers"])
    return execution.ExecutionLimits(
        timeout_s=timeout if timeout is not None else 5.0,
        memory_mb=getattr(args, "memory_mb", None),
        workers=workers,
    )


def _emit(text: str, output: Path | None) -> None:
    if output is None:
        sys.stdout.write(text)
    else:
        output.write_text(text, encoding="utf-8")


def parse_flat_config(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines; blank lines and # comments are skipped."""
    values: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ValueError(f"config line {lineno} is not key = value: {line!r}")
        key, _, value = stripped.partition("=")
        values[key.strip()] = value.strip()
    return values


def _load_reward_config(path: Path | None) -> tuple[reward.RewardConfig, dict[str, str]]:
    if path is None:
        return reward.RewardConfig(), {}
    values = parse_flat_config(path.read_text(encoding="utf-8"))
    extras = {k: values.pop(k) for k in ("timeout_s", "workers") if k in values}
    return reward.RewardConfig.from_mapping(values), extras


def _load_weights(path: Path | None) -> dict[str, float] | None:
    if path is None:
        return None
    mutants = mutation.manifest_to_mutants(path.read_text(encoding="utf-8"))
    return {m.id: m.weight for m in mutants}


# ---------------------------------------------------------------------------
# subcommand handlers


def _cmd_mutate(args: argparse.Namespace) -> int:
    unit = mutation.parse_source(args.src.read_text(encoding="utf-8"))
    mutants = mutation.generate_mutants(
        unit,
        categories=args.categories,
        limit=args.limit,
        weighted=args.weights,
    )
    _emit(mutation.mutants_to_manifest(mutants), args.output)
    return EXIT_OK


def _cmd_matrix(args: argparse.Namespace) -> int:
    mutants = mutation.manifest_to_mutants(args.mutants.read_text(encoding="utf-8"))
    matrix = execution.build_kill_matrix(
        args.src.read_text(encoding="utf-8"),
        mutants,
        args.tests.read_text(encoding="utf-8"),
        limits=_resolve_limits(args),
    )
    _emit(matrix.to_csv(), args.output)
    return EXIT_OK


def _cmd_score(args: argparse.Namespace) -> int:
    matrix = execution.KillMatrix.from_csv(args.matrix.read_text(encoding="utf-8"))
    suite = args.suite if args.suite is not None else list(matrix.tests)
    print(f"{suites.mutation_score(matrix, suite):g}")
    return EXIT_OK


def _cmd_reward(args: argparse.Namespace) -> int:
    cfg, extras = _load_reward_config(args.config)
    if args.show_config:
        lines = [f"{key} = {value}" for key, value in cfg.to_flat_items()]
        limits = _resolve_limits(args, extras)
        lines.append(f"timeout_s = {limits.timeout_s!r}")
        lines.append(f"workers = {limits.pool_size()!r}")
        print("\n".join(lines))
        return EXIT_OK
    source = args.src.read_text(encoding="utf-8")
    mutants = mutation.manifest_to_mutants(args.mutants.read_text(encoding="utf-8"))
    verdict_fn = None
    if args.mock_verdicts is not None:
        verdict_fn = _mock_verdict_fn(
            json.loads(args.mock_verdicts.read_text(encoding="utf-8")), source, mutants
        )
    trace = reward.score_trajectory(
        source,
        mutants,
        args.suite.read_text(encoding="utf-8"),
        cfg=cfg,
        limits=_resolve_limits(args, extras),
        verdict_fn=verdict_fn,
        smoke_tests=(
            args.smoke_tests.read_text(encoding="utf-8") if args.smoke_tests else None
        ),
    )
    _emit(reward.trace_to_json(trace), args.output)
    return EXIT_OK


def _mock_verdict_fn(spec: dict, source: str, mutants) -> execution.VerdictFn:
    """Verdict fixture: {"source": {method: status}, "kills": {method: [ids]}}.

    Unlisted source methods PASS; a mutant job FAILs exactly when the
    mutant id is listed under the method's kills. Durations are fixed at
    zero so repeated runs emit identical bytes.
    """
    source_statuses = {k: str(v) for k, v in spec.get("source", {}).items()}
    kills = {k: set(v) for k, v in spec.get("kills", {}).items()}
    by_source = {m.mutated_source: m.id for m in mutants}

    def fn(code: str, tests: str, method: str) -> execution.Verdict:
        if code == source:
            status = execution.Status(source_statuses.get(method, "PASS"))
            return execution.Verdict(status, 0.0, "" if status is execution.Status.PASS else "mocked")
        mutant_id = by_source.get(code)
        if mutant_id is not None and mutant_id in kills.get(method, set()):
            return execution.Verdict(execution.Status.FAIL, 0.0, "mocked kill")
        return execution.Verdict(execution.Status.PASS, 0.0)

    return fn


def _cmd_advantages(args: argparse.Namespace) -> int:
    for value in advantage.group_advantages(args.rewards, sigma_eps=args.sigma_eps):
        print(f"{value:g}")
    return EXIT_OK


def _cmd_select(args: argparse.Namespace) -> int:
    matrix = execution.KillMatrix.from_csv(
        args.matrix.read_text(encoding="utf-8"), weights=_load_weights(args.mutants)
    )
    result = suites.greedy_select(matrix, args.k)
    score = suites.mutation_score(matrix, result.order) if matrix.mutants else 0.0
    _emit(suites.selection_to_json(result, score), args.output)
    return EXIT_OK


def _cmd_minimize(args: argparse.Namespace) -> int:
    matrix = execution.KillMatrix.from_csv(
        args.matrix.read_text(encoding="utf-8"), weights=_load_weights(args.mutants)
    )
    minimized = suites.minimize_suite(matrix, args.suite)
    points = suites.utility_curve(matrix, minimized) if matrix.mutants else []
    result = suites.SelectionResult(
        order=tuple(minimized),
        gains=tuple(p[2] for p in points),
        covered=frozenset(matrix.killed_by(minimized)),
    )
    score = suites.mutation_score(matrix, minimized) if matrix.mutants else 0.0
    _emit(suites.selection_to_json(result, score), args.output)
    return EXIT_OK


def _cmd_curve(args: argparse.Namespace) -> int:
    matrix = execution.KillMatrix.from_csv(
        args.matrix.read_text(encoding="utf-8"), weights=_load_weights(args.mutants)
    )
    points = suites.utility_curve(matrix, args.order)
    _emit(suites.curve_to_csv(points), args.output)
    return EXIT_OK


def _cmd_rerank(args: argparse.Namespace) -> int:
    manifest = json.loads(args.manifest.read_text(encoding="utf-8"))
    base = args.manifest.parent
    candidate_ids = [entry["id"] for entry in manifest["candidates"]]
    candidates = [
        (base / entry["path"]).read_text(encoding="utf-8")
        for entry in manifest["candidates"]
    ]
    suite_ids = [entry["id"] for entry in manifest["suites"]]
    suite_sources = [
        (base / entry["path"]).read_text(encoding="utf-8") for entry in manifest["suites"]
    ]
    matrix = rerank.build_consensus(
        candidates,
        suite_sources,
        limits=_resolve_limits(args),
        candidate_ids=candidate_ids,
        suite_ids=suite_ids,
    )
    _emit(rerank.consensus_to_json(matrix), args.output)
    return EXIT_OK


def _cmd_repair(args: argparse.Namespace) -> int:
    raw = args.file.read_text(encoding="utf-8") if args.file else sys.stdin.read()
    code = repair.extract_code_block(raw)
    repaired = repair.backtrack_repair(code, max_backtrack=args.max_backtrack)
    sys.stdout.write(repaired if repaired.endswith("\n") else repaired + "\n")
    return EXIT_OK


def _cmd_prompt(args: argparse.Namespace) -> int:
    sys.stdout.write(
        repair.render_prompt(
            args.question.read_text(encoding="utf-8"),
            args.solution.read_text(encoding="utf-8"),
        )
    )
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
