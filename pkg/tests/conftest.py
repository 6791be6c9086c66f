from __future__ import annotations

from pathlib import Path

import pytest

from hdflow.executor import ExecutionOutcome, TableExecutor
from hdflow.gateway import ScriptedBackend, ScriptEntry, contains_all
from hdflow.parsing import extract_code

FIXTURES = Path(__file__).parent / "fixtures"


def morse_fixture(name: str) -> str:
    return (FIXTURES / "morse" / f"{name}.txt").read_text(encoding="utf-8")


# Distinctive phrases identifying each stage's rendered prompt.
REFLECT_MARKER = 'conduct the "Problem Reflection"'
DESIGN_MARKER = '"Specialized Experts Design"'
JUDGE_MARKER = "conclude your evaluation by stating"
VERIFY_MARKER = "Proposed Solution Start"


def morse_script() -> list[ScriptEntry]:
    """Scripted replies replaying the Morse-decoding transcript."""
    return [
        ScriptEntry(contains_all(REFLECT_MARKER), morse_fixture("reflection")),
        ScriptEntry(contains_all(DESIGN_MARKER), morse_fixture("design")),
        ScriptEntry(
            contains_all("Please act as Morse Code Dictionary Creation Expert"),
            morse_fixture("expert_dictionary"),
        ),
        ScriptEntry(
            contains_all("Please act as Morse Code Parsing Expert"),
            morse_fixture("expert_parsing"),
        ),
        ScriptEntry(
            contains_all("Please act as Python Expert of Translation"),
            morse_fixture("expert_translation"),
        ),
        ScriptEntry(
            contains_all("Please act as Message Reconstruction Expert"),
            morse_fixture("expert_reconstruction"),
        ),
        ScriptEntry(
            contains_all("Please act as Final Review and Presentation Expert"),
            morse_fixture("expert_review"),
        ),
        ScriptEntry(contains_all(JUDGE_MARKER), morse_fixture("judgment")),
    ]


def morse_tool_code() -> str:
    return extract_code(morse_fixture("expert_translation"))


def morse_executor() -> TableExecutor:
    return TableExecutor.from_codes(
        {morse_tool_code(): ExecutionOutcome("['TEA', 'COFFEE', 'SUGAR']\n", "", 0, 12, False)}
    )


@pytest.fixture
def morse_backend() -> ScriptedBackend:
    return ScriptedBackend(morse_script())


@pytest.fixture
def morse_table_executor() -> TableExecutor:
    return morse_executor()


@pytest.fixture
def morse_problem() -> str:
    return morse_fixture("problem").strip()


def pytest_runtest_logreport(report):
    # One visible line per acceptance criterion.
    if report.when == "call" and "test_acceptance" in report.nodeid:
        name = report.nodeid.split("::")[-1]
        print(f"\nACCEPTANCE {name}: {report.outcome.upper()}", flush=True)
