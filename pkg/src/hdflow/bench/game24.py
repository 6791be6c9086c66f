"""Game of 24: exact expression checking, solving, and item generation.

The checker parses an arithmetic expression over +, -, *, / and parentheses,
evaluates it in exact rational arithmetic, and accepts iff the expression's
literal multiset equals the given four numbers and its value is exactly 24.
Malformed expressions and division by zero make the expression false, never
an error.
"""

from __future__ import annotations

import itertools
import random
from fractions import Fraction
from typing import Sequence

from .datasets import BenchmarkItem, Checker

TARGET = Fraction(24)


class _Parser:
    """Recursive-descent parser returning (value, literal list) exactly."""

    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.literals: list[int] = []

    def _skip_ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def _peek(self) -> str:
        self._skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def parse(self) -> Fraction | None:
        try:
            value = self._expr()
        except (_ParseFailure, ZeroDivisionError):
            return None
        self._skip_ws()
        if self.pos != len(self.text):
            return None  # trailing garbage
        return value

    def _expr(self) -> Fraction:
        value = self._term()
        while True:
            op = self._peek()
            if op not in "+-":
                return value
            self.pos += 1
            right = self._term()
            value = value + right if op == "+" else value - right

    def _term(self) -> Fraction:
        value = self._factor()
        while True:
            op = self._peek()
            if op not in "*/":
                return value
            self.pos += 1
            right = self._factor()
            value = value * right if op == "*" else value / right

    def _factor(self) -> Fraction:
        char = self._peek()
        if char == "(":
            self.pos += 1
            value = self._expr()
            if self._peek() != ")":
                raise _ParseFailure
            self.pos += 1
            return value
        if char.isdigit():
            start = self.pos
            while self.pos < len(self.text) and self.text[self.pos].isdigit():
                self.pos += 1
            literal = int(self.text[start : self.pos])
            self.literals.append(literal)
            return Fraction(literal)
        raise _ParseFailure


class _ParseFailure(Exception):
    pass


def check_game24(numbers: Sequence[int], expression: str) -> bool:
    """True iff ``expression`` uses exactly the given numbers and equals 24."""
    parser = _Parser(expression)
    value = parser.parse()
    if value is None:
        return False
    return sorted(parser.literals) == sorted(numbers) and value == TARGET


# The five parenthesizations of four operands.
_SHAPES = (
    "(({a}{o1}{b}){o2}{c}){o3}{d}",
    "({a}{o1}({b}{o2}{c})){o3}{d}",
    "({a}{o1}{b}){o2}({c}{o3}{d})",
    "{a}{o1}(({b}{o2}{c}){o3}{d})",
    "{a}{o1}({b}{o2}({c}{o3}{d}))",
)
_OPS = "+-*/"


def _apply(op: str, left: Fraction, right: Fraction) -> Fraction:
    if op == "+":
        return left + right
    if op == "-":
        return left - right
    if op == "*":
        return left * right
    return left / right


def solve_game24(numbers: Sequence[int]) -> str | None:
    """Expression over the four numbers that equals exactly 24, or None."""
    for a, b, c, d in set(itertools.permutations(numbers)):
        fa, fb, fc, fd = (Fraction(n) for n in (a, b, c, d))
        for o1, o2, o3 in itertools.product(_OPS, repeat=3):
            for shape_index, shape in enumerate(_SHAPES):
                try:
                    if shape_index == 0:
                        value = _apply(o3, _apply(o2, _apply(o1, fa, fb), fc), fd)
                    elif shape_index == 1:
                        value = _apply(o3, _apply(o1, fa, _apply(o2, fb, fc)), fd)
                    elif shape_index == 2:
                        value = _apply(o2, _apply(o1, fa, fb), _apply(o3, fc, fd))
                    elif shape_index == 3:
                        value = _apply(o1, fa, _apply(o3, _apply(o2, fb, fc), fd))
                    else:
                        value = _apply(o1, fa, _apply(o2, fb, _apply(o3, fc, fd)))
                except ZeroDivisionError:
                    continue
                if value == TARGET:
                    return shape.format(a=a, b=b, c=c, d=d, o1=o1, o2=o2, o3=o3)
    return None


GAME24_MIN = 1
GAME24_MAX = 13


def _problem_text(numbers: tuple[int, int, int, int]) -> str:
    a, b, c, d = numbers
    return (
        f"Use the four numbers {a}, {b}, {c}, and {d}, each exactly once, with "
        "the basic arithmetic operations (+ - * /) and parentheses to obtain "
        "exactly 24. Reply with the bare arithmetic expression only."
    )


def gen_game24(seed: int, n: int) -> list[BenchmarkItem]:
    """Deterministically generate ``n`` solvable four-number items.

    Numbers are drawn uniformly from 1..13 with a seeded generator; unsolvable
    quadruples are discarded, so every emitted item has a solution.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = random.Random(seed)
    items: list[BenchmarkItem] = []
    while len(items) < n:
        numbers = tuple(rng.randint(GAME24_MIN, GAME24_MAX) for _ in range(4))
        if solve_game24(numbers) is None:
            continue
        items.append(
            BenchmarkItem(
                id=f"game24-{seed}-{len(items)}",
                dataset="game24",
                problem=_problem_text(numbers),
                reference=" ".join(str(n) for n in numbers),
                checker=Checker.GAME24,
            )
        )
    return items
