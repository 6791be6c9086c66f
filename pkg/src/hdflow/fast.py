"""Fast-thinking mode: one-shot chain-of-thought solve plus a single
step-wise self-verification call whose verdict gates escalation."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

from .config import DEFAULT_CONFIG, RunConfig
from .errors import HDFlowError
from .gateway import Backend, TokenUsage, complete
from .parsing import Verdict, VerdictValue, parse_final_evaluation
from .prompts import load_template
from .trace import STAGE_FAST_COT, STAGE_FAST_VERIFY, StageEvent, TraceSink, emit


class EmptyAnswer(HDFlowError):
    """The model reply contained nothing extractable as an answer."""


@dataclass(frozen=True)
class FastSolution:
    rationale: str
    answer: str
    usage: TokenUsage


@dataclass(frozen=True)
class VerificationReport:
    verdict: Verdict
    flagged_steps: tuple[str, ...]
    raw: str
    usage: TokenUsage


_FINAL_ANSWER = re.compile(r"final\s+answer\s*[::]\s*(.*)", re.IGNORECASE)


def _extract_answer(text: str) -> str:
    matches = list(_FINAL_ANSWER.finditer(text))
    if matches:
        last = matches[-1]
        rest_of_line = last.group(1).strip().strip("*").strip()
        if rest_of_line:
            return rest_of_line
        for line in text[last.end() :].splitlines():
            if line.strip():
                return line.strip()
    lines = [line.strip() for line in text.splitlines() if line.strip()]
    if not lines:
        raise EmptyAnswer("reply contains no extractable answer")
    return lines[-1]


def solve_fast(
    problem: str,
    backend: Backend,
    config: RunConfig = DEFAULT_CONFIG,
    trace: Optional[TraceSink] = None,
) -> FastSolution:
    """Single chain-of-thought completion; exactly one backend call."""
    if not problem.strip():
        raise ValueError("problem must be non-empty")
    prompt = load_template("fast_cot").render(task_problem=problem)
    result = complete(config.request(prompt), backend, config.retry)
    emit(trace, StageEvent(STAGE_FAST_COT, 1, prompt, result.text, result.usage))
    answer = _extract_answer(result.text)
    return FastSolution(result.text, answer, result.usage)


_STEP_LINE = re.compile(r"^\s*(?:[-*]\s*)?(?:step\s*)?\d+[.):]|\bstep\s+\d+\b", re.IGNORECASE)
_NEGATIVE_CUE = re.compile(
    r"\b(error|errors|incorrect|wrong|flaw|flawed|inconsistent|inconsistency|invalid|"
    r"mistake|mistaken|fails?|faulty|unjustified|unsupported)\b",
    re.IGNORECASE,
)


def _flagged_steps(text: str) -> tuple[str, ...]:
    # Best effort: lines that reference a step index and speak of it negatively.
    flagged = []
    for line in text.splitlines():
        if _STEP_LINE.search(line) and _NEGATIVE_CUE.search(line):
            flagged.append(line.strip())
    return tuple(flagged)


def verify_fast(
    problem: str,
    solution: FastSolution,
    backend: Backend,
    config: RunConfig = DEFAULT_CONFIG,
    trace: Optional[TraceSink] = None,
) -> VerificationReport:
    """One verification completion examining each reasoning step; the verdict
    comes from the FINAL EVALUATION token and Unparseable is reported as-is."""
    prompt = load_template("fast_verification").render(
        task_problem=problem, solution=solution.rationale
    )
    result = complete(config.request(prompt), backend, config.retry)
    emit(trace, StageEvent(STAGE_FAST_VERIFY, 1, prompt, result.text, result.usage))
    verdict = parse_final_evaluation(result.text)
    flagged = _flagged_steps(result.text) if verdict.value is VerdictValue.NO else ()
    return VerificationReport(verdict, flagged, result.text, result.usage)
