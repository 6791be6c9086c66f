"""Hybrid routing: try fast thinking first, escalate on failed verification.

A problem is solved with one chain-of-thought call and one self-verification
call; a Yes verdict returns the fast answer with no further cost, anything
else (No or an unparseable verdict, conservatively) hands the problem to the
slow dynamic-workflow solver, whose answer replaces the fast one entirely.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

from .config import DEFAULT_CONFIG, RunConfig
from .executor import ToolExecutor
from .fast import FastSolution, VerificationReport, solve_fast, verify_fast
from .gateway import Backend, TokenUsage
from .trace import TraceSink
from .workflow import AllAttemptsFailed, SlowSolution, solve_slow


class Mode(str, Enum):
    FAST = "Fast"
    SLOW = "Slow"
    HYBRID = "Hybrid"


@dataclass(frozen=True)
class HybridOutcome:
    mode_used: Mode
    answer: str
    fast: FastSolution
    verification: VerificationReport
    slow: Optional[SlowSolution]
    usage: TokenUsage


@dataclass(frozen=True)
class ModeStats:
    fast_count: int
    slow_count: int
    fast_ratio: Optional[float]  # None when there are no outcomes


def solve_hybrid(
    problem: str,
    backend: Backend,
    executor: ToolExecutor,
    config: RunConfig = DEFAULT_CONFIG,
    trace: Optional[TraceSink] = None,
) -> HybridOutcome:
    fast = solve_fast(problem, backend, config, trace)
    verification = verify_fast(problem, fast, backend, config, trace)
    fast_usage = fast.usage + verification.usage
    if verification.verdict.is_yes:
        return HybridOutcome(Mode.FAST, fast.answer, fast, verification, None, fast_usage)
    try:
        slow = solve_slow(problem, backend, executor, config, trace)
    except AllAttemptsFailed as exc:
        exc.fast_solution = fast
        exc.fast_verification = verification
        raise
    return HybridOutcome(
        Mode.SLOW, slow.final_answer, fast, verification, slow, fast_usage + slow.usage
    )


def mode_ratio(outcomes: Sequence[HybridOutcome]) -> ModeStats:
    fast_count = sum(1 for outcome in outcomes if outcome.mode_used is Mode.FAST)
    slow_count = len(outcomes) - fast_count
    total = fast_count + slow_count
    return ModeStats(fast_count, slow_count, fast_count / total if total else None)
