"""Command-line interface.

Subcommands: ``solve`` (one problem through fast/slow/hybrid), ``eval``
(dataset run with report and trajectory persistence), ``synth`` (task
generation, problem writing, validation, trajectory export), and ``report``
(tables plus PNG charts from a trajectory file). Exit codes: 0 success,
1 usage error, 2 run-level failure.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .config import backend_from, load_config_file, run_config_from
from .errors import HDFlowError
from .executor import SubprocessExecutor, ToolExecutor
from .fast import solve_fast
from .gateway import Backend
from .hybrid import Mode, solve_hybrid
from .synthesis import (
    ProblemStatus,
    SynthesizedProblem,
    TaskDescription,
    TaskSource,
    brainstorm_puzzles,
    dedup_tasks,
    export_trajectories,
    generate_tasks,
    load_records,
    load_seed_tasks,
    record_from_events,
    record_to_dict,
    synthesize_problems,
    validate_problems,
)
from .trace import EventCollector
from .workflow import solve_slow
from .bench import (
    build_report,
    evaluate,
    gen_game24,
    load_dataset,
    render_figures,
    render_text,
    report_to_dict,
    summarize_trajectories,
    trajectory_summary_to_report,
)

_MODES = {"fast": Mode.FAST, "slow": Mode.SLOW, "hybrid": Mode.HYBRID}


def _load_setup(config_path: str | None, backend_kind: str | None):
    data = load_config_file(config_path) if config_path else {}
    run = run_config_from(data)
    backend = backend_from(data, kind_override=backend_kind)
    executor_cfg = data.get("executor", {})
    executor = SubprocessExecutor(command=executor_cfg.get("command"))
    return run, backend, executor


def _read_problem(source: str) -> str:
    if source == "-":
        return sys.stdin.read()
    return Path(source).read_text(encoding="utf-8")


@click.group()
def cli() -> None:
    """Hybrid fast/slow reasoning over LLM backends."""


@cli.command()
@click.option("--mode", type=click.Choice(sorted(_MODES)), default="hybrid", show_default=True)
@click.option("--problem", required=True, help="Problem file path, or '-' for stdin.")
@click.option("--backend", "backend_kind", type=click.Choice(["mock", "http"]), default=None)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--trajectories", type=click.Path(), default=None, help="Append the solve trajectory to this JSONL file.")
def solve(mode: str, problem: str, backend_kind: str | None, config_path: str | None, trajectories: str | None) -> None:
    """Solve a single problem and print the result as JSON."""
    run, backend, executor = _load_setup(config_path, backend_kind)
    text = _read_problem(problem).strip()
    collector = EventCollector()
    selected = _MODES[mode]
    if selected is Mode.FAST:
        solution = solve_fast(text, backend, run, collector)
        answer, mode_used, verified, attempt = solution.answer, Mode.FAST, False, 1
    elif selected is Mode.SLOW:
        slow = solve_slow(text, backend, executor, run, collector)
        answer, mode_used, verified, attempt = (
            slow.final_answer, Mode.SLOW, slow.judgment.is_yes, slow.attempt,
        )
    else:
        outcome = solve_hybrid(text, backend, executor, run, collector)
        answer, mode_used, attempt = outcome.answer, outcome.mode_used, (
            outcome.slow.attempt if outcome.slow else 1
        )
        verified = (
            outcome.verification.verdict.is_yes
            if outcome.mode_used is Mode.FAST
            else outcome.slow is not None and outcome.slow.judgment.is_yes
        )
    usage = collector.usage
    if trajectories:
        record = record_from_events(
            f"cli-{abs(hash(text)) % 10**10}", selected, collector.events,
            answer, verified, attempt, mode_used=mode_used,
        )
        with open(trajectories, "a", encoding="utf-8") as handle:
            handle.write(json.dumps(record_to_dict(record), ensure_ascii=False) + "\n")
    click.echo(
        json.dumps(
            {
                "mode": selected.value,
                "mode_used": mode_used.value,
                "answer": answer,
                "verified": verified,
                "attempt": attempt,
                "usage": {"prompt": usage.prompt, "completion": usage.completion, "total": usage.total},
                "backend_calls": len(collector.events),
            },
            ensure_ascii=False,
            indent=2,
        )
    )


def _load_items(spec: str):
    if spec.startswith("game24:"):
        try:
            seed_text, count_text = spec.split(":", 1)[1].split(",", 1)
            return gen_game24(int(seed_text), int(count_text))
        except ValueError as exc:
            raise click.UsageError(f"--dataset game24 spec must be game24:<seed>,<n>: {exc}")
    return load_dataset(spec)


@cli.command("eval")
@click.option("--dataset", required=True, help="JSONL dataset path or game24:<seed>,<n>.")
@click.option("--mode", type=click.Choice(sorted(_MODES)), default="hybrid", show_default=True)
@click.option("--backend", "backend_kind", type=click.Choice(["mock", "http"]), default=None)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--out", "out_path", type=click.Path(), default=None, help="Write the JSON report here.")
@click.option("--trajectories", type=click.Path(), default=None, help="Write solve trajectories (JSONL) here.")
@click.option("--jobs", type=int, default=1, show_default=True)
def eval_command(dataset, mode, backend_kind, config_path, out_path, trajectories, jobs):
    """Evaluate a dataset in one reasoning mode and print the report table."""
    run, backend, executor = _load_setup(config_path, backend_kind)
    items = _load_items(dataset)
    sink = open(trajectories, "w", encoding="utf-8") if trajectories else None
    try:
        records = evaluate(items, _MODES[mode], backend, executor, run, jobs=jobs, trajectory_sink=sink)
    finally:
        if sink is not None:
            sink.close()
    report = build_report(records)
    if out_path:
        Path(out_path).write_text(
            json.dumps(report_to_dict(report), indent=2) + "\n", encoding="utf-8"
        )
    click.echo(render_text(report))


@cli.group()
def synth() -> None:
    """Synthetic reasoning-problem pipeline."""


@synth.command("tasks")
@click.option("--backend", "backend_kind", type=click.Choice(["mock", "http"]), default=None)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.option("--batches", type=int, default=1, show_default=True)
@click.option("--source", type=click.Choice(["seeded", "puzzle", "both"]), default="both", show_default=True)
@click.option("--no-dedup", is_flag=True, default=False, help="Skip near-duplicate removal.")
def synth_tasks(backend_kind, config_path, out_path, batches, source, no_dedup):
    """Generate task descriptions and write them as JSONL."""
    run, backend, _ = _load_setup(config_path, backend_kind)
    seeds = load_seed_tasks()
    tasks: list[TaskDescription] = []
    for _ in range(batches):
        if source in ("seeded", "both"):
            tasks.extend(generate_tasks(seeds, backend, run))
        if source in ("puzzle", "both"):
            tasks.extend(brainstorm_puzzles(backend, run))
    if not no_dedup:
        tasks = dedup_tasks(tasks)
    with open(out_path, "w", encoding="utf-8") as handle:
        for task in tasks:
            handle.write(
                json.dumps({"id": task.id, "text": task.text, "source": task.source.value}) + "\n"
            )
    click.echo(f"wrote {len(tasks)} tasks to {out_path}")


def _read_tasks(path: str) -> list[TaskDescription]:
    tasks = []
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            if line.strip():
                row = json.loads(line)
                tasks.append(TaskDescription(row["id"], row["text"], TaskSource(row["source"])))
    return tasks


@synth.command("problems")
@click.option("--backend", "backend_kind", type=click.Choice(["mock", "http"]), default=None)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--tasks", "tasks_path", type=click.Path(exists=True), required=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
def synth_problems(backend_kind, config_path, tasks_path, out_path):
    """Write concrete problems (status Unvalidated) for each task."""
    run, backend, _ = _load_setup(config_path, backend_kind)
    count = 0
    with open(out_path, "w", encoding="utf-8") as handle:
        for task in _read_tasks(tasks_path):
            for problem in synthesize_problems(task, backend, run):
                handle.write(
                    json.dumps(
                        {
                            "id": problem.id,
                            "task_id": problem.task_id,
                            "text": problem.text,
                            "status": problem.status.value,
                        }
                    )
                    + "\n"
                )
                count += 1
    click.echo(f"wrote {count} problems to {out_path}")


def _read_problems(path: str) -> list[SynthesizedProblem]:
    problems = []
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            if line.strip():
                row = json.loads(line)
                problems.append(
                    SynthesizedProblem(
                        row["id"], row["task_id"], row["text"], ProblemStatus(row["status"])
                    )
                )
    return problems


@synth.command("validate")
@click.option("--backend", "backend_kind", type=click.Choice(["mock", "http"]), default=None)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--problems", "problems_path", type=click.Path(exists=True), required=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.option("--jobs", type=int, default=1, show_default=True)
def synth_validate(backend_kind, config_path, problems_path, out_path, jobs):
    """Run the validity gate over unvalidated problems."""
    run, backend, _ = _load_setup(config_path, backend_kind)
    problems = _read_problems(problems_path)
    validated = validate_problems(problems, backend, run, jobs=jobs)
    exportable = 0
    with open(out_path, "w", encoding="utf-8") as handle:
        for problem in validated:
            exportable += problem.status.exportable
            handle.write(
                json.dumps(
                    {
                        "id": problem.id,
                        "task_id": problem.task_id,
                        "text": problem.text,
                        "status": problem.status.value,
                    }
                )
                + "\n"
            )
    click.echo(f"validated {len(validated)} problems ({exportable} exportable) to {out_path}")


@synth.command("export")
@click.option("--trajectories", "traj_path", type=click.Path(exists=True), required=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
def synth_export(traj_path, out_path):
    """Export training rows from persisted trajectories."""
    records = load_records(traj_path)
    with open(out_path, "w", encoding="utf-8") as handle:
        rows = export_trajectories(records, handle)
    click.echo(f"exported {rows} training rows to {out_path}")


@cli.command("report")
@click.option("--in", "in_path", type=click.Path(exists=True), required=True, help="Trajectory JSONL file.")
@click.option("--out-dir", type=click.Path(), default=None, help="Write report.json, report.txt, and PNG charts here.")
def report_command(in_path, out_dir):
    """Summarize a trajectory file as a table, JSON, and figures."""
    records = load_records(in_path)
    report = trajectory_summary_to_report(summarize_trajectories(records))
    text = render_text(report)
    click.echo(text)
    if out_dir:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(
            json.dumps(report_to_dict(report), indent=2) + "\n", encoding="utf-8"
        )
        (out / "report.txt").write_text(text + "\n", encoding="utf-8")
        figures = render_figures(report, out)
        click.echo(f"wrote {', '.join(p.name for p in figures)} to {out}")


def main(argv: list[str] | None = None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.UsageError as exc:
        click.echo(f"usage error: {exc.format_message()}", err=True)
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except click.Abort:
        return 1
    except (HDFlowError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
