"""Benchmark items, JSON-lines dataset loading, and answer checking."""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from ..errors import HDFlowError


class DatasetError(HDFlowError):
    pass


class ParseError(DatasetError):
    def __init__(self, line_no: int, reason: str):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no


class UnknownChecker(DatasetError):
    pass


class Checker(str, Enum):
    EXACT = "Exact"
    NUMERIC = "Numeric"
    GAME24 = "GameOf24"


_INTS = re.compile(r"\d+")


def reference_numbers(reference: str) -> tuple[int, ...]:
    return tuple(int(token) for token in _INTS.findall(reference))


@dataclass(frozen=True)
class BenchmarkItem:
    id: str
    dataset: str
    problem: str
    reference: str
    checker: Checker

    def __post_init__(self) -> None:
        if self.checker is Checker.GAME24:
            numbers = reference_numbers(self.reference)
            if len(numbers) != 4 or any(n <= 0 for n in numbers):
                raise ValueError(
                    f"item {self.id}: GameOf24 reference must hold exactly 4 positive integers"
                )


_REQUIRED_FIELDS = ("id", "problem", "reference", "checker")


def load_dataset(path: str | Path) -> list[BenchmarkItem]:
    """Load one JSON object per line with fields id/problem/reference/checker
    (optional ``dataset``, defaulting to the file stem)."""
    path = Path(path)
    default_dataset = path.stem
    items: list[BenchmarkItem] = []
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
            except ValueError as exc:
                raise ParseError(line_no, f"invalid JSON: {exc}") from exc
            if not isinstance(row, dict):
                raise ParseError(line_no, "row is not a JSON object")
            missing = [key for key in _REQUIRED_FIELDS if key not in row]
            if missing:
                raise ParseError(line_no, f"missing fields: {missing}")
            try:
                checker = Checker(row["checker"])
            except ValueError:
                raise UnknownChecker(f"line {line_no}: unknown checker {row['checker']!r}") from None
            try:
                items.append(
                    BenchmarkItem(
                        str(row["id"]),
                        str(row.get("dataset", default_dataset)),
                        str(row["problem"]),
                        str(row["reference"]),
                        checker,
                    )
                )
            except ValueError as exc:
                raise ParseError(line_no, str(exc)) from exc
    return items


_QUOTES = ('"', "'", "“", "”", "‘", "’")


def normalize_answer(raw: str) -> str:
    """Canonical answer form: trimmed, unquoted, one trailing period removed,
    internal whitespace collapsed, lowercased."""
    text = raw.strip()
    while len(text) >= 2 and text[0] in _QUOTES and text[-1] in _QUOTES:
        text = text[1:-1].strip()
    if text.endswith("."):
        text = text[:-1]
    text = re.sub(r"\s+", " ", text)
    return text.strip().lower()


_NUMBER = re.compile(r"[-+]?\d*\.?\d+(?:[eE][-+]?\d+)?")


def _last_number(text: str) -> float | None:
    matches = _NUMBER.findall(text)
    if not matches:
        return None
    try:
        return float(matches[-1])
    except ValueError:
        return None


NUMERIC_REL_TOL = 1e-6


def answers_match(item: BenchmarkItem, answer: str) -> bool:
    """Checker dispatch over normalized answers."""
    from .game24 import check_game24  # local import to avoid a cycle

    normalized = normalize_answer(answer)
    if item.checker is Checker.GAME24:
        return check_game24(reference_numbers(item.reference), normalized)
    reference = normalize_answer(item.reference)
    if item.checker is Checker.NUMERIC:
        expected, got = _last_number(reference), _last_number(normalized)
        if expected is not None and got is not None:
            return math.isclose(expected, got, rel_tol=NUMERIC_REL_TOL)
    return normalized == reference
