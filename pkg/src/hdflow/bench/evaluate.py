"""Evaluation runs: solve every item in a chosen mode, check answers, and
persist trajectories. A failing item is recorded as incorrect with a note;
the run always continues."""

from __future__ import annotations

import json
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Optional, Sequence

from ..config import DEFAULT_CONFIG, RunConfig
from ..errors import HDFlowError
from ..executor import ToolExecutor
from ..fast import solve_fast
from ..gateway import Backend, TokenUsage
from ..hybrid import Mode, solve_hybrid
from ..synthesis import TrajectoryRecord, record_from_events, record_to_dict
from ..trace import EventCollector
from ..workflow import solve_slow
from .datasets import BenchmarkItem, answers_match


@dataclass(frozen=True)
class EvalRecord:
    item_id: str
    dataset: str
    mode: Mode
    correct: bool
    mode_used: Mode
    usage: TokenUsage
    wall_ms: int
    note: Optional[str] = None


def _solve_item(
    item: BenchmarkItem,
    mode: Mode,
    backend: Backend,
    executor: ToolExecutor,
    config: RunConfig,
    collector: EventCollector,
) -> tuple[str, Mode, bool, int]:
    """Returns (answer, mode_used, verified, attempt)."""
    if mode is Mode.FAST:
        solution = solve_fast(item.problem, backend, config, collector)
        return solution.answer, Mode.FAST, False, 1
    if mode is Mode.SLOW:
        solution = solve_slow(item.problem, backend, executor, config, collector)
        return solution.final_answer, Mode.SLOW, solution.judgment.is_yes, solution.attempt
    outcome = solve_hybrid(item.problem, backend, executor, config, collector)
    verified = (
        outcome.verification.verdict.is_yes
        if outcome.mode_used is Mode.FAST
        else outcome.slow is not None and outcome.slow.judgment.is_yes
    )
    attempt = outcome.slow.attempt if outcome.slow is not None else 1
    return outcome.answer, outcome.mode_used, verified, attempt


def evaluate(
    items: Sequence[BenchmarkItem],
    mode: Mode,
    backend: Backend,
    executor: ToolExecutor,
    config: RunConfig = DEFAULT_CONFIG,
    jobs: int = 1,
    trajectory_sink: Optional[IO[str]] = None,
) -> list[EvalRecord]:
    if not items:
        raise ValueError("items must be non-empty")
    write_lock = threading.Lock()

    def run_one(item: BenchmarkItem) -> EvalRecord:
        collector = EventCollector()
        started = time.perf_counter()
        note = None
        try:
            answer, mode_used, verified, attempt = _solve_item(
                item, mode, backend, executor, config, collector
            )
            correct = answers_match(item, answer)
        except HDFlowError as exc:
            answer, verified, attempt = "", False, 1
            mode_used = Mode.SLOW if mode is Mode.HYBRID else mode
            correct = False
            note = f"{type(exc).__name__}: {exc}"
        wall_ms = int((time.perf_counter() - started) * 1000)
        if trajectory_sink is not None:
            record = record_from_events(
                item.id, mode, collector.events, answer, verified, attempt,
                dataset=item.dataset, mode_used=mode_used,
            )
            with write_lock:
                trajectory_sink.write(
                    json.dumps(record_to_dict(record), ensure_ascii=False) + "\n"
                )
        return EvalRecord(
            item.id, item.dataset, mode, correct, mode_used, collector.usage, wall_ms, note
        )

    if jobs <= 1:
        return [run_one(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(run_one, items))
