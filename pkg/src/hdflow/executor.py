"""Execution of tool-expert code.

Two executors implement the same contract: :class:`TableExecutor` answers from
a fingerprint-keyed table of canned outcomes (deterministic tests), and
:class:`SubprocessExecutor` hands the code to an out-of-process runner over a
line protocol — one JSON request object on the child's stdin, one JSON
response object on its stdout, embedded newlines escaped.

``execute`` is total over valid requests: interpreter errors, nonzero exits,
and timeouts are encoded in the outcome, never raised. Only a runner that
cannot be started (or that breaks the protocol) raises ExecutorUnavailable.
"""

from __future__ import annotations

import hashlib
import json
import re
import subprocess
import sys
import threading
from dataclasses import dataclass, field
from typing import Mapping, Protocol, Sequence, runtime_checkable

from .errors import HDFlowError


class ExecutorUnavailable(HDFlowError):
    """The runner process cannot be started or violated the wire protocol."""


TIMEOUT_CEILING_S = 60.0
STREAM_CAP_BYTES = 1 << 20  # per-stream capture cap; excess is truncated


@dataclass(frozen=True)
class ExecutionRequest:
    code: str
    timeout_s: float = 10.0
    stdin_data: str = ""

    def __post_init__(self) -> None:
        if not self.code.strip():
            raise ValueError("code must be non-empty")
        if not 0 < self.timeout_s <= TIMEOUT_CEILING_S:
            raise ValueError(f"timeout_s must be in (0, {TIMEOUT_CEILING_S}]")


@dataclass(frozen=True)
class ExecutionOutcome:
    stdout: str
    stderr: str
    exit_code: int
    duration_ms: int
    timed_out: bool
    truncated: bool = False

    def __post_init__(self) -> None:
        if self.timed_out and self.exit_code == 0:
            raise ValueError("a timed-out outcome cannot report exit code 0")
        if self.duration_ms < 0:
            raise ValueError("duration_ms must be non-negative")

    @property
    def succeeded(self) -> bool:
        return self.exit_code == 0 and not self.timed_out


@runtime_checkable
class ToolExecutor(Protocol):
    def execute(self, request: ExecutionRequest) -> ExecutionOutcome: ...


_WHITESPACE = re.compile(r"\s+")


def fingerprint(code: str) -> str:
    """Hash of the code with all whitespace runs collapsed, so table lookups
    survive formatting drift in scripted fixtures."""
    normalized = _WHITESPACE.sub(" ", code).strip()
    return hashlib.sha256(normalized.encode("utf-8")).hexdigest()


MISS_OUTCOME = ExecutionOutcome("", "no fixture", 1, 0, False)


class TableExecutor:
    """Exact-match fake: fingerprint of the request code is looked up in a
    table; unknown code yields a synthetic failure. Calls are logged."""

    def __init__(self, table: Mapping[str, ExecutionOutcome]):
        self._table = dict(table)
        self.calls: list[str] = []
        self._lock = threading.Lock()

    @classmethod
    def from_codes(cls, outcomes: Mapping[str, ExecutionOutcome]) -> "TableExecutor":
        return cls({fingerprint(code): outcome for code, outcome in outcomes.items()})

    def execute(self, request: ExecutionRequest) -> ExecutionOutcome:
        with self._lock:
            self.calls.append(request.code)
        return self._table.get(fingerprint(request.code), MISS_OUTCOME)


def make_table_executor(table: Mapping[str, ExecutionOutcome]) -> TableExecutor:
    """Build the fake from a fingerprint-keyed table (see ``fingerprint``)."""
    return TableExecutor(table)


def _cap(text: str) -> tuple[str, bool]:
    if len(text) > STREAM_CAP_BYTES:
        return text[:STREAM_CAP_BYTES], True
    return text, False


class SubprocessExecutor:
    """Wire-protocol client spawning one isolated runner process per request.

    The default command launches the companion sandbox runner module; any
    program speaking the same line protocol can be substituted. Concurrent
    requests are admitted up to ``pool_size``.
    """

    def __init__(
        self,
        command: Sequence[str] | None = None,
        grace_s: float = 5.0,
        pool_size: int = 4,
    ):
        self.command = tuple(command) if command else (sys.executable, "-m", "hdflow_sandbox")
        self.grace_s = grace_s
        self._slots = threading.BoundedSemaphore(pool_size)

    def execute(self, request: ExecutionRequest) -> ExecutionOutcome:
        line = json.dumps(
            {"code": request.code, "timeout_s": request.timeout_s, "stdin": request.stdin_data}
        )
        with self._slots:
            try:
                child = subprocess.Popen(
                    self.command,
                    stdin=subprocess.PIPE,
                    stdout=subprocess.PIPE,
                    stderr=subprocess.PIPE,
                    text=True,
                )
            except OSError as exc:
                raise ExecutorUnavailable(f"cannot start runner {self.command}: {exc}") from exc
            deadline = request.timeout_s + self.grace_s
            try:
                out, err = child.communicate(line + "\n", timeout=deadline)
            except subprocess.TimeoutExpired:
                child.kill()
                child.wait()
                return ExecutionOutcome(
                    "", "runner deadline exceeded", -1, int(deadline * 1000), True
                )
        first_line = out.splitlines()[0] if out.strip() else ""
        try:
            response = json.loads(first_line)
            stdout, out_cut = _cap(str(response["stdout"]))
            stderr, err_cut = _cap(str(response["stderr"]))
            return ExecutionOutcome(
                stdout=stdout,
                stderr=stderr,
                exit_code=int(response["exit_code"]),
                duration_ms=int(response["duration_ms"]),
                timed_out=bool(response["timed_out"]),
                truncated=out_cut or err_cut,
            )
        except (ValueError, KeyError, TypeError) as exc:
            raise ExecutorUnavailable(
                f"runner returned malformed response {first_line[:200]!r} (stderr: {err[:200]!r})"
            ) from exc
