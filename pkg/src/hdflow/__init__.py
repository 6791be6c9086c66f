"""Hybrid fast/slow reasoning orchestration for LLM problem-solving."""

from .config import DEFAULT_CONFIG, RunConfig
from .errors import HDFlowError
from .executor import (
    ExecutionOutcome,
    ExecutionRequest,
    ExecutorUnavailable,
    SubprocessExecutor,
    TableExecutor,
    ToolExecutor,
    fingerprint,
    make_table_executor,
)
from .fast import EmptyAnswer, FastSolution, VerificationReport, solve_fast, verify_fast
from .gateway import (
    AuthMissing,
    Backend,
    BackendError,
    BackendUnavailable,
    ChatMessage,
    CompletionRequest,
    CompletionResult,
    HttpBackend,
    InvalidRequest,
    NoScriptMatch,
    RetryPolicy,
    ScriptedBackend,
    ScriptEntry,
    TokenUsage,
    TransientBackendError,
    accumulate,
    complete,
    contains_all,
    make_scripted_backend,
    sum_usage,
)
from .hybrid import HybridOutcome, Mode, ModeStats, mode_ratio, solve_hybrid
from .parsing import (
    BlockNotFound,
    EmptyCode,
    ExpertCard,
    MalformedCard,
    NoCardsFound,
    ParsedBlock,
    Verdict,
    VerdictValue,
    extract_block,
    extract_code,
    parse_expert_cards,
    parse_final_evaluation,
    parse_validity,
)
from .prompts import PromptTemplate, MissingBinding, catalog, load_template, render
from .synthesis import (
    EmptyGeneration,
    ProblemStatus,
    QAPair,
    SinkWriteFailed,
    SynthesizedProblem,
    TaskDescription,
    TaskSource,
    TrajectoryRecord,
    brainstorm_puzzles,
    dedup_tasks,
    export_trajectories,
    generate_tasks,
    load_seed_tasks,
    record_from_events,
    synthesize_problems,
    validate_problem,
)
from .trace import EventCollector, StageEvent, TraceSink, jsonl_sink
from .workflow import (
    AllAttemptsFailed,
    DuplicateExpertName,
    ExpertFailed,
    ExpertResult,
    ExpertSpec,
    ExpertsDesign,
    InvalidGraph,
    NoSubtasksParsed,
    ProblemReflection,
    RepairExhausted,
    SlowSolution,
    SubTask,
    WorkflowGraph,
    build_workflow,
    design_experts,
    execute_workflow,
    judge,
    reflect,
    run_tool_expert,
    solve_slow,
)

__version__ = "0.1.0"
