from .datasets import (
    BenchmarkItem,
    Checker,
    DatasetError,
    ParseError,
    UnknownChecker,
    answers_match,
    load_dataset,
    normalize_answer,
    reference_numbers,
)
from .evaluate import EvalRecord, evaluate
from .game24 import check_game24, gen_game24, solve_game24
from .report import (
    DatasetReport,
    EvalReport,
    build_report,
    render_figures,
    render_text,
    report_to_dict,
    summarize_trajectories,
    trajectory_summary_to_report,
)

__all__ = [
    "BenchmarkItem",
    "Checker",
    "DatasetError",
    "ParseError",
    "UnknownChecker",
    "answers_match",
    "load_dataset",
    "normalize_answer",
    "reference_numbers",
    "EvalRecord",
    "evaluate",
    "check_game24",
    "gen_game24",
    "solve_game24",
    "DatasetReport",
    "EvalReport",
    "build_report",
    "render_figures",
    "render_text",
    "report_to_dict",
    "summarize_trajectories",
    "trajectory_summary_to_report",
]
