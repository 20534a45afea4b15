"""Protocol client for driving the shim over its wire interface."""

from __future__ import annotations

import json
import os
import select
import subprocess
import sys
import time
from pathlib import Path


REPO_ROOT = Path(__file__).resolve().parents[2]
RUNNER_SRC = REPO_ROOT / "runner" / "src"
PRIMARY_SRC = REPO_ROOT / "src"

SHIM_CMD = (sys.executable, "-u", "-m", "mist_runner")


def merged_env() -> dict[str, str]:
    env = os.environ.copy()
    parts = [str(RUNNER_SRC), str(PRIMARY_SRC)]
    if env.get("PYTHONPATH"):
        parts.append(env["PYTHONPATH"])
    env["PYTHONPATH"] = os.pathsep.join(parts)
    return env


class ShimClient:
    """Raw line-protocol client for one shim process."""

    def __init__(self):
        self.proc = subprocess.Popen(
            SHIM_CMD,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            stderr=subprocess.DEVNULL,
            env=merged_env(),
        )
        self._buffer = b""

    def send(self, payload) -> None:
        if isinstance(payload, (dict, list)):
            payload = json.dumps(payload)
        assert self.proc.stdin is not None
        self.proc.stdin.write(payload.encode("utf-8") + b"\n")
        self.proc.stdin.flush()

    def recv(self, deadline_s: float = 10.0) -> dict:
        line = self.read_line(deadline_s)
        if line is None:
            raise TimeoutError("no response line within deadline")
        if line == b"":
            raise EOFError("shim closed its protocol stream")
        return json.loads(line.decode("utf-8"))

    def read_line(self, deadline_s: float):
        assert self.proc.stdout is not None
        fd = self.proc.stdout.fileno()
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
            if ready:
                chunk = os.read(fd, 65536)
                if not chunk:
                    return b""
                self._buffer += chunk

    def round_trip(self, job_id: str, code: str, tests: str, method: str, timeout_s: float = 5.0, deadline_s: float = 10.0) -> dict:
        self.send(
            {
                "job_id": job_id,
                "code": code,
                "tests": tests,
                "method": method,
                "timeout_s": timeout_s,
            }
        )
        return self.recv(deadline_s)

    def close(self) -> None:
        try:
            if self.proc.stdin is not None:
                self.proc.stdin.close()
            self.proc.wait(timeout=2.0)
        except subprocess.TimeoutExpired:
            self.proc.kill()
            self.proc.wait()

