"""Accuracy/token/mode reports over evaluation records and trajectories.

``build_report`` folds evaluation records into per-dataset accuracy, average
token, and fast-ratio figures; the result renders as JSON, as an aligned text
table, and — on the CLI report path — as PNG charts written next to the
delimited output.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from ..hybrid import Mode
from ..synthesis import TrajectoryRecord
from .evaluate import EvalRecord


@dataclass(frozen=True)
class DatasetReport:
    dataset: str
    n: int
    correct: int
    accuracy: float
    avg_tokens: float
    fast_count: int
    slow_count: int
    fast_ratio: Optional[float]


@dataclass(frozen=True)
class EvalReport:
    datasets: tuple[DatasetReport, ...]
    overall: DatasetReport


def _fold(dataset: str, records: Sequence[EvalRecord]) -> DatasetReport:
    n = len(records)
    correct = sum(1 for r in records if r.correct)
    tokens = sum(r.usage.total for r in records)
    fast = sum(1 for r in records if r.mode_used is Mode.FAST)
    slow = n - fast
    return DatasetReport(
        dataset=dataset,
        n=n,
        correct=correct,
        accuracy=correct / n if n else 0.0,
        avg_tokens=tokens / n if n else 0.0,
        fast_count=fast,
        slow_count=slow,
        fast_ratio=fast / n if n else None,
    )


def build_report(records: Sequence[EvalRecord]) -> EvalReport:
    by_dataset: dict[str, list[EvalRecord]] = {}
    for record in records:
        by_dataset.setdefault(record.dataset, []).append(record)
    datasets = tuple(_fold(name, rows) for name, rows in sorted(by_dataset.items()))
    return EvalReport(datasets, _fold("overall", list(records)))


def report_to_dict(report: EvalReport) -> dict:
    def row(d: DatasetReport) -> dict:
        return {
            "dataset": d.dataset,
            "n": d.n,
            "correct": d.correct,
            "accuracy": d.accuracy,
            "avg_tokens": d.avg_tokens,
            "fast_count": d.fast_count,
            "slow_count": d.slow_count,
            "fast_ratio": d.fast_ratio,
        }

    return {"datasets": [row(d) for d in report.datasets], "overall": row(report.overall)}


_COLUMNS = ("dataset", "n", "accuracy", "avg tokens", "fast/slow")


def render_text(report: EvalReport) -> str:
    rows = []
    for d in (*report.datasets, report.overall):
        ratio = "-" if d.fast_ratio is None else f"{d.fast_ratio:.2f}/{1 - d.fast_ratio:.2f}"
        rows.append(
            (d.dataset, str(d.n), f"{d.accuracy * 100:.1f}", f"{d.avg_tokens:.1f}", ratio)
        )
    widths = [max(len(col), *(len(row[i]) for row in rows)) for i, col in enumerate(_COLUMNS)]
    lines = [
        "  ".join(col.ljust(widths[i]) for i, col in enumerate(_COLUMNS)),
        "  ".join("-" * widths[i] for i in range(len(_COLUMNS))),
    ]
    for row in rows[:-1]:
        lines.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)))
    lines.append("  ".join("-" * widths[i] for i in range(len(_COLUMNS))))
    lines.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(rows[-1])))
    return "\n".join(lines)


def render_figures(report: EvalReport, out_dir: str | Path) -> list[Path]:
    """Write accuracy, token-cost, and fast/slow-proportion charts as PNGs."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    names = [d.dataset for d in report.datasets]
    written: list[Path] = []

    def save(fig, filename: str) -> None:
        path = out_dir / filename
        fig.tight_layout()
        fig.savefig(path, dpi=150)
        plt.close(fig)
        written.append(path)

    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.bar(names, [d.accuracy * 100 for d in report.datasets], color="#4c72b0")
    ax.set_ylabel("accuracy (%)")
    ax.set_ylim(0, 100)
    ax.set_title("Accuracy per dataset")
    save(fig, "accuracy.png")

    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.bar(names, [d.avg_tokens for d in report.datasets], color="#55a868")
    ax.set_ylabel("avg inference tokens")
    ax.set_title("Average token cost per dataset")
    save(fig, "avg_tokens.png")

    fig, ax = plt.subplots(figsize=(6, 3.5))
    fast = [d.fast_ratio or 0.0 for d in report.datasets]
    slow = [1 - f for f in fast]
    ax.bar(names, fast, label="fast", color="#4c72b0")
    ax.bar(names, slow, bottom=fast, label="slow", color="#dd8452")
    ax.set_ylabel("proportion")
    ax.set_ylim(0, 1)
    ax.set_title("Fast vs. slow thinking share")
    ax.legend()
    save(fig, "mode_split.png")
    return written


@dataclass(frozen=True)
class TrajectorySummary:
    dataset: str
    n: int
    verified: int
    avg_tokens: float
    fast_count: int
    slow_count: int
    fast_ratio: Optional[float]


def summarize_trajectories(records: Sequence[TrajectoryRecord]) -> list[TrajectorySummary]:
    """Per-dataset roll-up of persisted trajectories (no ground truth, so
    verification rate stands in for accuracy)."""
    by_dataset: dict[str, list[TrajectoryRecord]] = {}
    for record in records:
        by_dataset.setdefault(record.dataset or "unknown", []).append(record)
    summaries = []
    for name, rows in sorted(by_dataset.items()):
        n = len(rows)
        tokens = sum(sum(p.usage.total for p in r.pairs) for r in rows)
        fast = sum(1 for r in rows if (r.mode_used or r.mode) is Mode.FAST)
        slow = sum(1 for r in rows if (r.mode_used or r.mode) is Mode.SLOW)
        routed = fast + slow
        summaries.append(
            TrajectorySummary(
                dataset=name,
                n=n,
                verified=sum(1 for r in rows if r.verified),
                avg_tokens=tokens / n if n else 0.0,
                fast_count=fast,
                slow_count=slow,
                fast_ratio=fast / routed if routed else None,
            )
        )
    return summaries


def trajectory_summary_to_report(summaries: Sequence[TrajectorySummary]) -> EvalReport:
    """Shape trajectory summaries like an EvalReport so the same table and
    figure renderers apply; 'accuracy' holds the verified rate."""
    datasets = tuple(
        DatasetReport(
            dataset=s.dataset,
            n=s.n,
            correct=s.verified,
            accuracy=s.verified / s.n if s.n else 0.0,
            avg_tokens=s.avg_tokens,
            fast_count=s.fast_count,
            slow_count=s.slow_count,
            fast_ratio=s.fast_ratio,
        )
        for s in summaries
    )
    total_n = sum(s.n for s in summaries)
    total_verified = sum(s.verified for s in summaries)
    total_tokens = sum(s.avg_tokens * s.n for s in summaries)
    total_fast = sum(s.fast_count for s in summaries)
    total_slow = sum(s.slow_count for s in summaries)
    routed = total_fast + total_slow
    overall = DatasetReport(
        "overall",
        total_n,
        total_verified,
        total_verified / total_n if total_n else 0.0,
        total_tokens / total_n if total_n else 0.0,
        total_fast,
        total_slow,
        total_fast / routed if routed else None,
    )
    return EvalReport(datasets, overall)
