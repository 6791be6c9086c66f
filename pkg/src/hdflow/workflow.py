"""Slow-thinking mode: dynamic workflow construction and execution.

A slow solve runs three stages. Stage 1 reflects on the problem and splits it
into ordered sub-tasks. Stage 2 designs a team of named experts (LLM or Tool)
and arranges them as a sequential chain ending in an LLM reviewer. Stage 3
executes the chain: every expert sees the problem, the reflection, the team
design, and all earlier experts' results; tool experts generate code that is
executed out-of-process, with error-driven repair up to a bound. A final
judgment call evaluates the chain's output, and a failed judgment triggers a
full rerun with a nudge toward a different decomposition, up to a bound of
total attempts.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

from .config import DEFAULT_CONFIG, RunConfig
from .errors import HDFlowError
from .executor import ExecutionOutcome, ExecutionRequest, ToolExecutor
from .gateway import Backend, ChatMessage, TokenUsage, complete
from .parsing import (
    BlockNotFound,
    EmptyCode,
    ExpertCard,
    EXPERT_TYPE_LLM,
    Verdict,
    extract_block,
    extract_code,
    parse_expert_cards_with_spans,
    parse_final_evaluation,
    parse_numbered_blocks,
)
from .prompts import load_template
from .trace import (
    EXPERT_STAGE_PREFIX,
    EventCollector,
    STAGE_DESIGN,
    STAGE_JUDGE,
    STAGE_REFLECT,
    StageEvent,
    TraceSink,
    emit,
)

logger = logging.getLogger(__name__)

OUTPUT_BLOCK = "My Final Output"
REFLECTION_BLOCK = "Problem Reflection"


class WorkflowError(HDFlowError):
    pass


class NoSubtasksParsed(WorkflowError):
    pass


class DuplicateExpertName(WorkflowError):
    pass


class InvalidGraph(WorkflowError):
    def __init__(self, reason: str):
        super().__init__(f"invalid workflow graph: {reason}")
        self.reason = reason


class RepairExhausted(WorkflowError):
    def __init__(self, attempts: int, code_attempts: tuple[tuple[str, ExecutionOutcome], ...]):
        super().__init__(f"tool code still failing after {attempts} attempts")
        self.attempts = attempts
        self.code_attempts = code_attempts


class ExpertFailed(WorkflowError):
    def __init__(self, name: str, cause: Exception):
        super().__init__(f"expert {name!r} failed: {cause}")
        self.name = name
        self.cause = cause


class AllAttemptsFailed(WorkflowError):
    def __init__(self, attempts: int, last: Optional["SlowSolution"], cause: Exception | None = None):
        super().__init__(f"no workflow attempt passed judgment in {attempts} tries")
        self.attempts = attempts
        self.last = last
        self.cause = cause


@dataclass(frozen=True)
class SubTask:
    index: int
    description: str
    tool_suited: bool


@dataclass(frozen=True)
class ProblemReflection:
    restatement: str
    subtasks: tuple[SubTask, ...]
    raw: str
    usage: TokenUsage

    @property
    def prompt_text(self) -> str:
        """Reflection content as embedded in downstream prompts: the marker
        block payload when the model produced one, else the whole reply."""
        try:
            return extract_block(self.raw, REFLECTION_BLOCK).payload.strip()
        except BlockNotFound:
            return self.raw.strip()


@dataclass(frozen=True)
class ExpertSpec:
    card: ExpertCard
    description: str


@dataclass(frozen=True)
class ExpertsDesign:
    """Parsed expert team plus the raw design transcript used in prompts."""

    specs: tuple[ExpertSpec, ...]
    raw: str
    usage: TokenUsage


@dataclass(frozen=True)
class WorkflowGraph:
    experts: tuple[ExpertSpec, ...]
    edges: tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class ExpertResult:
    expert_name: str
    output: str
    raw: str
    usage: TokenUsage
    code_attempts: tuple[tuple[str, ExecutionOutcome], ...] = ()
    output_complete: bool = True


@dataclass(frozen=True)
class SlowSolution:
    final_answer: str
    results: tuple[ExpertResult, ...]
    judgment: Verdict
    attempt: int
    usage: TokenUsage


_TOOL_CUES = (
    "python",
    "code",
    "program",
    "script",
    "implement",
    "function",
    "comput",
    "execut",
    "algorithm",
)


def _is_tool_suited(description: str) -> bool:
    lowered = description.lower()
    return any(cue in lowered for cue in _TOOL_CUES)


def _subtask_section(text: str) -> tuple[str, str]:
    """Split a reflection reply at its sub-task heading.

    Returns (before, after); when no heading line mentioning sub-tasks exists
    the whole text is treated as the sub-task section.
    """
    lines = text.splitlines(keepends=True)
    offset = 0
    for line in lines:
        plain = line.strip()
        if "sub-task" in plain.lower() or "subtask" in plain.lower():
            if ":" in plain or "**" in plain:
                return text[:offset], text[offset + len(line) :]
        offset += len(line)
    return "", text


RERUN_NUDGE = (
    "Note: a previous attempt to solve this problem did not pass the final "
    "verification. Please approach the problem fresh and apply a different "
    "problem decomposition this time — change how the problem is broken into "
    "sub-tasks and, where useful, the kind of experts you would assign."
)


def reflect(
    problem: str,
    backend: Backend,
    config: RunConfig = DEFAULT_CONFIG,
    trace: Optional[TraceSink] = None,
    attempt: int = 1,
    nudge: str | None = None,
) -> ProblemReflection:
    """Stage 1: restate the problem and parse its ordered sub-tasks."""
    if not problem.strip():
        raise ValueError("problem must be non-empty")
    prompt = load_template("problem_reflection").render(task_problem=problem)
    if nudge:
        prompt = f"{prompt}\n{nudge}"
    result = complete(config.request(prompt), backend, config.retry)
    emit(trace, StageEvent(STAGE_REFLECT, attempt, prompt, result.text, result.usage))

    try:
        content = extract_block(result.text, REFLECTION_BLOCK).payload
    except BlockNotFound:
        content = result.text
    before, section = _subtask_section(content)
    items = parse_numbered_blocks(section)
    if not items:
        raise NoSubtasksParsed("reflection reply contains no enumerated sub-tasks")
    subtasks = tuple(
        SubTask(index, description, _is_tool_suited(description))
        for index, description in enumerate(items, start=1)
    )
    restatement = before.strip() or content.strip()
    return ProblemReflection(restatement, subtasks, result.text, result.usage)


DEFAULT_REVIEWER_DESCRIPTION = (
    "Reviews the findings of all previous experts and generates the final "
    "answer to the original problem."
)


def _default_reviewer(taken_names: set[str]) -> ExpertSpec:
    for name in ("Final Review Expert", "Final Review and Conclusion Expert", "Workflow Review Expert"):
        if name not in taken_names:
            return ExpertSpec(
                ExpertCard(name, EXPERT_TYPE_LLM, "str", "str"),
                DEFAULT_REVIEWER_DESCRIPTION,
            )
    raise DuplicateExpertName("cannot derive a unique name for the appended reviewer")


_CARD_LEAD_IN = "Expert card (in JSON format):"


def _clean_description(segment: str) -> str:
    lines = []
    for line in segment.splitlines():
        stripped = line.strip()
        if stripped.startswith("###") or stripped.startswith("====="):
            continue
        lines.append(line)
    text = "\n".join(lines).strip()
    if text.endswith(_CARD_LEAD_IN):
        text = text[: -len(_CARD_LEAD_IN)].strip()
    return text


def design_experts(
    problem: str,
    reflection: ProblemReflection,
    backend: Backend,
    config: RunConfig = DEFAULT_CONFIG,
    trace: Optional[TraceSink] = None,
    attempt: int = 1,
) -> ExpertsDesign:
    """Stage 2: ask for the expert team, parse cards and their descriptions.

    Expert names must be unique, and the chain must end in an LLM reviewer; a
    default reviewer is appended when the design ends with a Tool expert.
    """
    prompt = load_template("experts_design").render(
        task_problem=problem, problem_reflection=reflection.prompt_text
    )
    result = complete(config.request(prompt), backend, config.retry)
    emit(trace, StageEvent(STAGE_DESIGN, attempt, prompt, result.text, result.usage))

    cards = parse_expert_cards_with_spans(result.text)
    specs: list[ExpertSpec] = []
    seen: set[str] = set()
    previous_end = 0
    for card, start, end in cards:
        if card.name in seen:
            raise DuplicateExpertName(f"expert name {card.name!r} appears twice")
        seen.add(card.name)
        description = _clean_description(result.text[previous_end:start]) or card.name
        specs.append(ExpertSpec(card, description))
        previous_end = end
    if not specs[-1].card.is_llm:
        specs.append(_default_reviewer(seen))
    if len(specs) != len(reflection.subtasks):
        logger.warning(
            "expert count %d differs from sub-task count %d",
            len(specs),
            len(reflection.subtasks),
        )
    return ExpertsDesign(tuple(specs), result.text, result.usage)


def build_workflow(experts: Sequence[ExpertSpec]) -> WorkflowGraph:
    """Arrange experts as the chain i -> i+1 and validate its invariants.

    A single-expert chain is allowed only when that expert is LLM-typed (it is
    then its own reviewer); the final expert must always be LLM-typed.
    """
    experts = tuple(experts)
    if not experts:
        raise InvalidGraph("empty expert list")
    names = [spec.card.name for spec in experts]
    if len(set(names)) != len(names):
        raise InvalidGraph("duplicate expert names")
    if not experts[-1].card.is_llm:
        raise InvalidGraph("final expert must be LLM-typed")
    for spec in experts:
        if not spec.description:
            raise InvalidGraph(f"expert {spec.card.name!r} has an empty description")
    edges = tuple((i, i + 1) for i in range(len(experts) - 1))
    return WorkflowGraph(experts, edges)


def _results_text(results: Sequence[ExpertResult], char_budget: int) -> str:
    """Assemble prior experts' results for a prompt.

    Full raw transcripts are included; when the assembly would exceed the
    character budget, the oldest transcripts fall back to extracted output
    only (outputs always stay verbatim).
    """
    if not results:
        return "None"
    bodies = [result.raw for result in results]

    def assemble() -> str:
        sections = [
            f"===== {result.expert_name} =====\n{body}"
            for result, body in zip(results, bodies)
        ]
        return "\n\n".join(sections)

    text = assemble()
    for index, result in enumerate(results):
        if len(text) <= char_budget:
            break
        if bodies[index] != result.output:
            bodies[index] = result.output
            text = assemble()
    return text


def _data_type_instruction(card: ExpertCard) -> str:
    input_type = card.input_type.strip()
    output_type = card.output_type.strip()
    if not input_type and not output_type:
        return ""
    return (
        f" Note that your sub-task takes input in {input_type or 'plain text'} "
        f"and must produce output in {output_type or 'plain text'}."
    )


HOW_TO_READ_INPUT = (
    "All input values you need are shown in the Experts' Results above. Embed "
    "them directly in the code as literal values; do not read from files or "
    "from standard input."
)


def _repair_message(error_text: str) -> str:
    return (
        "The code above failed when executed. Error message:\n\n"
        f"{error_text}\n\n"
        "Please use the error message to repair the code and provide the "
        "complete corrected code. The code needs to be self-contained, and "
        "executable as-is. Output only code, without any explanations or "
        "comments."
    )


def run_tool_expert(
    spec: ExpertSpec,
    context: Sequence[ExpertResult],
    backend: Backend,
    executor: ToolExecutor,
    config: RunConfig = DEFAULT_CONFIG,
    trace: Optional[TraceSink] = None,
    attempt: int = 1,
    *,
    problem: str,
    reflection_text: str,
    design_text: str,
) -> ExpertResult:
    """Ask a Tool expert for code and execute it, repairing on failure.

    Each failed execution re-prompts with the error text appended, up to the
    configured repair bound; success takes the last run's stdout as output.
    """
    if not spec.card.is_tool:
        raise ValueError(f"{spec.card.name!r} is not a Tool expert")
    stage = EXPERT_STAGE_PREFIX + spec.card.name
    prompt = load_template("tool_expert").render(
        original_problem=problem,
        problem_reflection=reflection_text,
        name=spec.card.name,
        role=spec.description,
        experts_design=design_text,
        input_data=_results_text(context, config.context_char_budget),
        input_type=spec.card.input_type or "plain text",
        output_type=spec.card.output_type or "plain text",
        how_to_read_input=HOW_TO_READ_INPUT,
    )
    history: tuple[ChatMessage, ...] = ()
    content = prompt
    attempts: list[tuple[str, ExecutionOutcome]] = []
    usage = TokenUsage()
    last_reply = ""
    for _ in range(max(1, config.max_code_repairs)):
        result = complete(config.request(content, history=history), backend, config.retry)
        usage = usage + result.usage
        emit(trace, StageEvent(stage, attempt, content, result.text, result.usage))
        last_reply = result.text
        try:
            code = extract_code(result.text)
        except EmptyCode as exc:
            raise ExpertFailed(spec.card.name, exc) from exc
        outcome = executor.execute(ExecutionRequest(code, timeout_s=config.tool_timeout_s))
        attempts.append((code, outcome))
        if outcome.succeeded:
            return ExpertResult(
                spec.card.name,
                outcome.stdout.rstrip("\n"),
                last_reply,
                usage,
                tuple(attempts),
            )
        if outcome.timed_out:
            error_text = f"execution timed out after {config.tool_timeout_s} seconds"
        else:
            error_text = outcome.stderr.strip() or f"exited with code {outcome.exit_code}"
        history = history + (
            ChatMessage("user", content),
            ChatMessage("assistant", result.text),
        )
        content = _repair_message(error_text)
    raise ExpertFailed(
        spec.card.name, RepairExhausted(config.max_code_repairs, tuple(attempts))
    )


def _run_llm_expert(
    spec: ExpertSpec,
    context: Sequence[ExpertResult],
    backend: Backend,
    config: RunConfig,
    trace: Optional[TraceSink],
    attempt: int,
    *,
    problem: str,
    reflection_text: str,
    design_text: str,
) -> ExpertResult:
    prompt = load_template("llm_expert").render(
        original_problem=problem,
        problem_reflection=reflection_text,
        name=spec.card.name,
        role=spec.description,
        experts_design=design_text,
        data_type_instruction=_data_type_instruction(spec.card),
        input_data=_results_text(context, config.context_char_budget),
    )
    result = complete(config.request(prompt), backend, config.retry)
    emit(trace, StageEvent(EXPERT_STAGE_PREFIX + spec.card.name, attempt, prompt, result.text, result.usage))
    try:
        block = extract_block(result.text, OUTPUT_BLOCK)
        output, complete_flag = block.payload.strip(), block.complete
    except BlockNotFound:
        # No output markers at all: take the whole reply, flagged incomplete.
        output, complete_flag = result.text.strip(), False
    return ExpertResult(spec.card.name, output, result.text, result.usage, (), complete_flag)


def execute_workflow(
    graph: WorkflowGraph,
    problem: str,
    reflection: ProblemReflection,
    design_text: str,
    backend: Backend,
    executor: ToolExecutor,
    config: RunConfig = DEFAULT_CONFIG,
    trace: Optional[TraceSink] = None,
    attempt: int = 1,
) -> list[ExpertResult]:
    """Stage 3: run the chain in order, threading all prior results into each
    expert's prompt. A failing expert aborts the run via ExpertFailed."""
    reflection_text = reflection.prompt_text
    results: list[ExpertResult] = []
    for spec in graph.experts:
        if spec.card.is_tool:
            result = run_tool_expert(
                spec,
                results,
                backend,
                executor,
                config,
                trace,
                attempt,
                problem=problem,
                reflection_text=reflection_text,
                design_text=design_text,
            )
        else:
            result = _run_llm_expert(
                spec,
                results,
                backend,
                config,
                trace,
                attempt,
                problem=problem,
                reflection_text=reflection_text,
                design_text=design_text,
            )
        results.append(result)
    return results


def judge(
    problem: str,
    reflection: ProblemReflection,
    design_text: str,
    results: Sequence[ExpertResult],
    backend: Backend,
    config: RunConfig = DEFAULT_CONFIG,
    trace: Optional[TraceSink] = None,
    attempt: int = 1,
) -> Verdict:
    """Final judgment over the assembled expert results."""
    if not results:
        raise ValueError("judge requires at least one expert result")
    prompt = load_template("final_judgment").render(
        task_problem=problem,
        problem_reflection=reflection.prompt_text,
        experts_design=design_text,
        experts_results=_results_text(results, config.context_char_budget),
        final_expert=results[-1].expert_name,
    )
    result = complete(config.request(prompt), backend, config.retry)
    emit(trace, StageEvent(STAGE_JUDGE, attempt, prompt, result.text, result.usage))
    return parse_final_evaluation(result.text)


def solve_slow(
    problem: str,
    backend: Backend,
    executor: ToolExecutor,
    config: RunConfig = DEFAULT_CONFIG,
    trace: Optional[TraceSink] = None,
) -> SlowSolution:
    """Full slow-thinking solve: reflect, design, execute, judge; rerun the
    whole pipeline (nudged toward a different decomposition) while judgment
    is not Yes, up to the configured attempt bound.

    The returned solution is the first one judged Yes; its usage covers every
    backend call made during the solve, failed attempts included. When no
    attempt passes, AllAttemptsFailed carries the last completed solution.
    """
    if not problem.strip():
        raise ValueError("problem must be non-empty")
    collector = EventCollector(forward=trace)
    last_solution: SlowSolution | None = None
    last_failure: Exception | None = None
    for attempt in range(1, max(1, config.max_workflow_attempts) + 1):
        nudge = RERUN_NUDGE if attempt > 1 else None
        try:
            reflection = reflect(problem, backend, config, collector, attempt, nudge)
            design = design_experts(problem, reflection, backend, config, collector, attempt)
            graph = build_workflow(design.specs)
            results = execute_workflow(
                graph, problem, reflection, design.raw, backend, executor,
                config, collector, attempt,
            )
            verdict = judge(
                problem, reflection, design.raw, results, backend, config, collector, attempt
            )
        except ExpertFailed as exc:
            last_failure = exc
            continue
        solution = SlowSolution(
            final_answer=results[-1].output.strip(),
            results=tuple(results),
            judgment=verdict,
            attempt=attempt,
            usage=collector.usage,
        )
        if verdict.is_yes:
            return solution
        last_solution = solution
    raise AllAttemptsFailed(config.max_workflow_attempts, last_solution, last_failure)
