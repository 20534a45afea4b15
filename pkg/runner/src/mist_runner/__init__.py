"""Test-execution worker speaking newline-delimited JSON over stdio.

Each request names one code variant, one test module, and one test method:

    {"job_id": str, "code": str, "tests": str, "method": str,
     "timeout_s": float}

The worker executes the method against the variant in a fresh module
namespace and answers exactly one response per request, in request order:

    {"job_id": str, "status": "PASS"|"FAIL"|"ERROR"|"TIMEOUT",
     "duration_s": float, "detail": str}

The job body runs on a separately joinable thread so a hung or looping
variant maps to TIMEOUT; the orchestrator is expected to recycle the
process after a timeout since the runaway code keeps the interpreter
occupied. File descriptor 1 is reserved for the protocol at startup and
ordinary stdout is rerouted, so nothing the subject code prints can
corrupt the response stream.
"""

from __future__ import annotations

import json
import threading
import time
import traceback
import unittest
from typing import TextIO

__version__ = "0.1.0"

_DETAIL_LIMIT = 300


def execute_method(code: str, tests: str, method: str) -> tuple[str, str]:
    """Run one test method against one code variant in fresh namespaces."""
    subject_namespace: dict = {"__name__": "__mist_subject__"}
    exec(compile(code, "<subject>", "exec"), subject_namespace)
    test_namespace = dict(subject_namespace)
    test_namespace["__name__"] = "__mist_tests__"
    exec(compile(tests, "<tests>", "exec"), test_namespace)

    case_class, method_name = _resolve(test_namespace, method)
    if case_class is None:
        return "ERROR", f"test method not found: {method}"
    case = case_class(method_name)
    result = unittest.TestResult()
    case.run(result)
    if result.errors:
        return "ERROR", _last_line(result.errors[-1][1])
    if result.failures:
        return "FAIL", _last_line(result.failures[-1][1])
    if result.testsRun != 1:
        return "ERROR", f"test did not run: {method}"
    return "PASS", ""


def _resolve(namespace: dict, method: str):
    class_name, _, method_name = method.partition(".")
    if method_name:
        candidate = namespace.get(class_name)
        if _is_case_with(candidate, method_name):
            return candidate, method_name
        return None, method
    # Bare method name: first TestCase subclass (definition order) wins.
    for value in namespace.values():
        if _is_case_with(value, class_name):
            return value, class_name
    return None, method


def _is_case_with(candidate: object, method_name: str) -> bool:
    return (
        isinstance(candidate, type)
        and issubclass(candidate, unittest.TestCase)
        and callable(getattr(candidate, method_name, None))
    )


def _last_line(trace: str) -> str:
    lines = [line for line in trace.strip().splitlines() if line.strip()]
    detail = lines[-1] if lines else ""
    return detail[:_DETAIL_LIMIT]


def handle_request(line: str) -> dict:
    """One response per request line, whatever the line contains."""
    job_id = ""
    try:
        request = json.loads(line)
        job_id = str(request.get("job_id", "")) if isinstance(request, dict) else ""
        code = request["code"]
        tests = request["tests"]
        method = request["method"]
        timeout_s = float(request["timeout_s"])
        if not all(isinstance(value, str) for value in (code, tests, method)):
            raise TypeError("string fields expected")
    except (
        json.JSONDecodeError,
        KeyError,
        TypeError,
        ValueError,
        AttributeError,
    ):
        return {"job_id": job_id, "status": "ERROR", "duration_s": 0.0, "detail": "protocol"}
    return run_job(job_id, code, tests, method, timeout_s)


def run_job(job_id: str, code: str, tests: str, method: str, timeout_s: float) -> dict:
    outcome: dict = {}

    def work() -> None:
        try:
            status, detail = execute_method(code, tests, method)
        except SyntaxError as exc:
            status, detail = "ERROR", f"SyntaxError: {exc}"
        except BaseException as exc:  # noqa: BLE001 - verdict, not crash
            status, detail = "ERROR", _describe_exception(exc)
        outcome["status"] = status
        outcome["detail"] = detail

    started = time.monotonic()
    worker = threading.Thread(target=work, daemon=True)
    worker.start()
    worker.join(timeout_s)
    duration = time.monotonic() - started
    if worker.is_alive():
        return {
            "job_id": job_id,
            "status": "TIMEOUT",
            "duration_s": max(duration, timeout_s),
            "detail": f"exceeded {timeout_s}s",
        }
    return {
        "job_id": job_id,
        "status": outcome.get("status", "ERROR"),
        "duration_s": duration,
        "detail": outcome.get("detail", "worker produced no outcome"),
    }


def _describe_exception(exc: BaseException) -> str:
    summary = traceback.format_exception_only(type(exc), exc)
    return (summary[-1].strip() if summary else repr(exc))[:_DETAIL_LIMIT]


def serve(stdin: TextIO, protocol_out: TextIO) -> int:
    """Request loop: one response line per request line, exit on EOF."""
    for line in stdin:
        if not line.strip():
            continue
        response = handle_request(line)
        protocol_out.write(json.dumps(response) + "\n")
        protocol_out.flush()
    return 0
