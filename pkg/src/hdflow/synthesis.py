"""Synthetic reasoning-problem pipeline and trajectory export.

Three generation steps — high-level task descriptions (seed-inspired or
puzzle brainstorming), shingle-based near-duplicate removal, and concrete
problem writing with a validity gate — plus export of solve trajectories as
(query, answer) training rows. Only solution pairs of trajectories that
passed verification are exported; verification pairs are kept for every
trajectory, passed or not.
"""

from __future__ import annotations

import hashlib
import json
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import IO, Iterable, Optional, Sequence

from .config import DEFAULT_CONFIG, RunConfig
from .errors import HDFlowError
from .gateway import Backend, TokenUsage, complete
from .hybrid import Mode
from .parsing import VerdictValue, parse_numbered_blocks, parse_validity
from .prompts import load_template
from .trace import StageEvent, TraceSink, VERIFICATION_STAGES, emit


class SynthesisError(HDFlowError):
    pass


class EmptyGeneration(SynthesisError):
    pass


class SinkWriteFailed(SynthesisError):
    pass


class TaskSource(str, Enum):
    SEED_INSPIRED = "SeedInspired"
    PUZZLE_BRAINSTORM = "PuzzleBrainstorm"


@dataclass(frozen=True)
class TaskDescription:
    id: str
    text: str
    source: TaskSource


class ProblemStatus(str, Enum):
    UNVALIDATED = "Unvalidated"
    VALID = "Valid"
    INVALID = "Invalid"
    REWRITTEN = "Rewritten"

    @property
    def exportable(self) -> bool:
        return self in (ProblemStatus.VALID, ProblemStatus.REWRITTEN)


@dataclass(frozen=True)
class SynthesizedProblem:
    id: str
    task_id: str
    text: str
    status: ProblemStatus


_WORD = re.compile(r"[a-z0-9]+")


def _words(text: str) -> list[str]:
    return _WORD.findall(text.lower())


def _content_id(prefix: str, text: str) -> str:
    digest = hashlib.sha1(" ".join(_words(text)).encode("utf-8")).hexdigest()
    return f"{prefix}-{digest[:10]}"


_NUMBERING_PREFIX = re.compile(r"^\s*(?:\d{1,3}\s*[.)\]:-]|[-*•])\s*")


def _task_lines(reply: str) -> list[str]:
    lines = []
    for raw_line in reply.splitlines():
        line = _NUMBERING_PREFIX.sub("", raw_line.strip()).strip()
        if line:
            lines.append(line)
    return lines


SEEDS_PER_PROMPT = 10
STAGE_TASK_GEN = "task_generation"
STAGE_PROBLEM_GEN = "problem_synthesis"
STAGE_VALIDATE = "problem_validation"


def load_seed_tasks() -> list[TaskDescription]:
    """The bundled set of 10 example task descriptions."""
    text = (resources.files("hdflow") / "data" / "seed_tasks.txt").read_text(encoding="utf-8")
    return [
        TaskDescription(_content_id("seed", line), line.strip(), TaskSource.SEED_INSPIRED)
        for line in text.splitlines()
        if line.strip()
    ]


def generate_tasks(
    seeds: Sequence[TaskDescription],
    backend: Backend,
    config: RunConfig = DEFAULT_CONFIG,
    trace: Optional[TraceSink] = None,
) -> list[TaskDescription]:
    """One seeded generation batch: 10 example tasks in, one task per reply
    line out (numbering stripped, blank lines dropped)."""
    if len(seeds) != SEEDS_PER_PROMPT:
        raise ValueError(f"exactly {SEEDS_PER_PROMPT} seed tasks required, got {len(seeds)}")
    example_tasks = "\n".join(f"{i}. {seed.text}" for i, seed in enumerate(seeds, start=1))
    prompt = load_template("task_synthesis_seeded").render(example_tasks=example_tasks)
    result = complete(
        config.request(prompt, temperature=config.synthesis_temperature), backend, config.retry
    )
    emit(trace, StageEvent(STAGE_TASK_GEN, 1, prompt, result.text, result.usage))
    tasks = [
        TaskDescription(_content_id("task", line), line, TaskSource.SEED_INSPIRED)
        for line in _task_lines(result.text)
    ]
    if not tasks:
        raise EmptyGeneration("no tasks parsed from generation reply")
    return tasks


def brainstorm_puzzles(
    backend: Backend,
    config: RunConfig = DEFAULT_CONFIG,
    trace: Optional[TraceSink] = None,
) -> list[TaskDescription]:
    prompt = load_template("task_synthesis_puzzle").body
    result = complete(
        config.request(prompt, temperature=config.synthesis_temperature), backend, config.retry
    )
    emit(trace, StageEvent(STAGE_TASK_GEN, 1, prompt, result.text, result.usage))
    tasks = [
        TaskDescription(_content_id("task", line), line, TaskSource.PUZZLE_BRAINSTORM)
        for line in _task_lines(result.text)
    ]
    if not tasks:
        raise EmptyGeneration("no tasks parsed from brainstorm reply")
    return tasks


SHINGLE_SIZE = 8
JACCARD_THRESHOLD = 0.7


def _shingles(text: str, size: int = SHINGLE_SIZE) -> frozenset[tuple[str, ...]]:
    words = _words(text)
    if len(words) <= size:
        return frozenset({tuple(words)})
    return frozenset(tuple(words[i : i + size]) for i in range(len(words) - size + 1))


def _jaccard(a: frozenset, b: frozenset) -> float:
    if not a and not b:
        return 1.0
    union = len(a | b)
    return len(a & b) / union if union else 0.0


def dedup_tasks(tasks: Sequence[TaskDescription]) -> list[TaskDescription]:
    """Drop near-duplicate tasks, keeping the earlier of every similar pair.

    Similarity is Jaccard over word 8-shingles at threshold 0.7; candidate
    pairs come from an inverted shingle index so dissimilar tasks never get
    compared. The output is always a subsequence of the input, and the
    operation is idempotent.
    """
    kept: list[TaskDescription] = []
    shingle_sets: list[frozenset] = []
    index: dict[tuple[str, ...], list[int]] = {}
    for task in tasks:
        shingles = _shingles(task.text)
        candidates = {i for shingle in shingles for i in index.get(shingle, ())}
        duplicate = any(
            _jaccard(shingle_sets[i], shingles) >= JACCARD_THRESHOLD for i in candidates
        )
        position = len(shingle_sets)
        shingle_sets.append(shingles)
        for shingle in shingles:
            index.setdefault(shingle, []).append(position)
        if not duplicate:
            kept.append(task)
    return kept


PROBLEMS_PER_TASK = 3


def synthesize_problems(
    task: TaskDescription,
    backend: Backend,
    config: RunConfig = DEFAULT_CONFIG,
    trace: Optional[TraceSink] = None,
) -> list[SynthesizedProblem]:
    """Write up to 3 concrete problems for one task description."""
    prompt = load_template("problem_synthesis").render(task_description=task.text)
    result = complete(
        config.request(prompt, temperature=config.synthesis_temperature), backend, config.retry
    )
    emit(trace, StageEvent(STAGE_PROBLEM_GEN, 1, prompt, result.text, result.usage))
    blocks = parse_numbered_blocks(result.text)[:PROBLEMS_PER_TASK]
    if not blocks:
        raise EmptyGeneration(f"no problems parsed for task {task.id}")
    return [
        SynthesizedProblem(f"{task.id}-p{i}", task.id, text, ProblemStatus.UNVALIDATED)
        for i, text in enumerate(blocks, start=1)
    ]


def validate_problem(
    problem: SynthesizedProblem,
    backend: Backend,
    config: RunConfig = DEFAULT_CONFIG,
    trace: Optional[TraceSink] = None,
) -> SynthesizedProblem:
    """Gate one problem: Valid, Invalid, or Rewritten (text replaced by the
    model's rewrite). An unparseable reply counts as Invalid."""
    if problem.status is not ProblemStatus.UNVALIDATED:
        raise ValueError(f"problem {problem.id} was already validated")
    prompt = load_template("problem_validation").render(problem=problem.text)
    result = complete(config.request(prompt), backend, config.retry)
    emit(trace, StageEvent(STAGE_VALIDATE, 1, prompt, result.text, result.usage))
    verdict = parse_validity(result.text)
    if verdict.value is VerdictValue.YES:
        return replace(problem, status=ProblemStatus.VALID)
    if verdict.value is VerdictValue.NO and verdict.rewrite:
        return replace(problem, status=ProblemStatus.REWRITTEN, text=verdict.rewrite)
    return replace(problem, status=ProblemStatus.INVALID)


def validate_problems(
    problems: Sequence[SynthesizedProblem],
    backend: Backend,
    config: RunConfig = DEFAULT_CONFIG,
    jobs: int = 1,
) -> list[SynthesizedProblem]:
    if jobs <= 1:
        return [validate_problem(p, backend, config) for p in problems]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(lambda p: validate_problem(p, backend, config), problems))


@dataclass(frozen=True)
class QAPair:
    stage: str
    attempt: int
    query: str
    answer: str
    usage: TokenUsage

    @property
    def is_verification(self) -> bool:
        return self.stage in VERIFICATION_STAGES


@dataclass(frozen=True)
class TrajectoryRecord:
    """Record of one solve: its ordered (query, answer) pairs, whether the
    solution passed verification, and which attempt produced it."""

    problem_id: str
    mode: Mode
    pairs: tuple[QAPair, ...]
    final_answer: str
    verified: bool
    attempt: int
    dataset: str = ""
    mode_used: Optional[Mode] = None


def record_from_events(
    problem_id: str,
    mode: Mode,
    events: Iterable[StageEvent],
    final_answer: str,
    verified: bool,
    attempt: int,
    dataset: str = "",
    mode_used: Optional[Mode] = None,
) -> TrajectoryRecord:
    pairs = tuple(QAPair(e.stage, e.attempt, e.query, e.answer, e.usage) for e in events)
    return TrajectoryRecord(
        problem_id, mode, pairs, final_answer, verified, attempt, dataset, mode_used
    )


def export_trajectories(records: Iterable[TrajectoryRecord], sink: IO[str]) -> int:
    """Emit training rows ({problem_id, stage, query, answer} JSON lines).

    Verified records contribute the solution pairs of their verified attempt;
    unverified records contribute their verification pairs only. Verification
    pairs of earlier, failed attempts are kept in both cases.
    """
    rows = 0
    for record in records:
        for pair in record.pairs:
            if record.verified:
                include = pair.attempt == record.attempt or pair.is_verification
            else:
                include = pair.is_verification
            if not include:
                continue
            row = {
                "problem_id": record.problem_id,
                "stage": pair.stage,
                "query": pair.query,
                "answer": pair.answer,
            }
            try:
                sink.write(json.dumps(row, ensure_ascii=False) + "\n")
            except OSError as exc:
                raise SinkWriteFailed(str(exc)) from exc
            rows += 1
    return rows


def _usage_to_dict(usage: TokenUsage) -> dict:
    return {"prompt": usage.prompt, "completion": usage.completion, "total": usage.total}


def record_to_dict(record: TrajectoryRecord) -> dict:
    return {
        "problem_id": record.problem_id,
        "dataset": record.dataset,
        "mode": record.mode.value,
        "mode_used": record.mode_used.value if record.mode_used else None,
        "final_answer": record.final_answer,
        "verified": record.verified,
        "attempt": record.attempt,
        "pairs": [
            {
                "stage": p.stage,
                "attempt": p.attempt,
                "query": p.query,
                "answer": p.answer,
                "usage": _usage_to_dict(p.usage),
            }
            for p in record.pairs
        ],
    }


def record_from_dict(data: dict) -> TrajectoryRecord:
    pairs = tuple(
        QAPair(
            p["stage"],
            int(p["attempt"]),
            p["query"],
            p["answer"],
            TokenUsage(p["usage"]["prompt"], p["usage"]["completion"]),
        )
        for p in data["pairs"]
    )
    mode_used = data.get("mode_used")
    return TrajectoryRecord(
        data["problem_id"],
        Mode(data["mode"]),
        pairs,
        data["final_answer"],
        bool(data["verified"]),
        int(data["attempt"]),
        data.get("dataset", ""),
        Mode(mode_used) if mode_used else None,
    )


def save_records(records: Iterable[TrajectoryRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for record in records:
            handle.write(json.dumps(record_to_dict(record), ensure_ascii=False) + "\n")


def load_records(path: str | Path) -> list[TrajectoryRecord]:
    records = []
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            if line.strip():
                records.append(record_from_dict(json.loads(line)))
    return records
