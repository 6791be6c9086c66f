"""Stage-level trace of a solve: one event per backend call.

Solvers accept an optional sink; every rendered prompt and its reply flows
through as a :class:`StageEvent`, which is what trajectory records and token
accounting are built from. ``jsonl_sink`` writes events as JSON lines.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, IO, Iterable, Optional

from .gateway import TokenUsage, ZERO_USAGE, sum_usage

# Stage names used across the engines.
STAGE_FAST_COT = "fast_cot"
STAGE_FAST_VERIFY = "fast_verify"
STAGE_REFLECT = "reflect"
STAGE_DESIGN = "design"
STAGE_JUDGE = "judge"
EXPERT_STAGE_PREFIX = "expert:"

# Stages whose (query, answer) pairs are self-verification steps.
VERIFICATION_STAGES = frozenset({STAGE_FAST_VERIFY, STAGE_JUDGE})


@dataclass(frozen=True)
class StageEvent:
    stage: str
    attempt: int
    query: str
    answer: str
    usage: TokenUsage

    def to_dict(self) -> dict:
        return {
            "stage": self.stage,
            "attempt": self.attempt,
            "query": self.query,
            "answer": self.answer,
            "usage": {
                "prompt": self.usage.prompt,
                "completion": self.usage.completion,
                "total": self.usage.total,
            },
        }


TraceSink = Callable[[StageEvent], None]


class EventCollector:
    """List-backed sink, optionally forwarding to a downstream sink."""

    def __init__(self, forward: Optional[TraceSink] = None):
        self.events: list[StageEvent] = []
        self._forward = forward

    def __call__(self, event: StageEvent) -> None:
        self.events.append(event)
        if self._forward is not None:
            self._forward(event)

    @property
    def usage(self) -> TokenUsage:
        return sum_usage(e.usage for e in self.events)


def emit(trace: Optional[TraceSink], event: StageEvent) -> None:
    if trace is not None:
        trace(event)


def jsonl_sink(stream: IO[str]) -> TraceSink:
    def sink(event: StageEvent) -> None:
        stream.write(json.dumps(event.to_dict(), ensure_ascii=False) + "\n")

    return sink


def total_usage(events: Iterable[StageEvent]) -> TokenUsage:
    return sum_usage(e.usage for e in events)
