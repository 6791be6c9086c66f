"""Parsers for structured model output.

Model replies in this system carry four kinds of structure: marker-delimited
blocks (``### <name> Start ###`` ... ``### <name> End ###``), JSON expert name
cards, fenced code, and literal verdict tokens. Replies drift — marker casing
varies, keywords get misspelled, JSON arrives single-quoted — so every parser
here is deliberately tolerant:

* markers match case-insensitively and ignore surrounding whitespace;
* the verdict keyword is matched within edit distance 1 (adjacent
  transpositions count as one edit), which absorbs e.g. ``EVALAUTION``;
* card objects are re-parsed after quote normalization when strict JSON fails.

The verdict parsers never raise; their codomain is the closed three-value set
{Yes, No, Unparseable}.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from enum import Enum
from typing import Iterator

from .errors import HDFlowError


class ParsingError(HDFlowError):
    pass


class BlockNotFound(ParsingError):
    pass


class NoCardsFound(ParsingError):
    pass


class MalformedCard(ParsingError):
    def __init__(self, position: int, reason: str):
        super().__init__(f"malformed expert card at offset {position}: {reason}")
        self.position = position


class EmptyCode(ParsingError):
    pass


@dataclass(frozen=True)
class ParsedBlock:
    name: str
    payload: str
    complete: bool


def _marker_pattern(name: str) -> re.Pattern:
    flexible = r"\s+".join(re.escape(word) for word in name.split())
    return re.compile(
        rf"^[ \t]*#+[ \t]*{flexible}[ \t]+(start|end)[ \t]*#+[ \t]*$",
        re.IGNORECASE | re.MULTILINE,
    )


def extract_block(text: str, name: str) -> ParsedBlock:
    """Extract the payload of the last ``name`` block in ``text``.

    The payload is the text between the last start marker and the following
    end marker, marker lines excluded. A start marker without an end marker
    yields the trailing text with ``complete=False``. Wrapping a payload that
    contains no marker lines and extracting it again is an exact round trip.
    """
    markers = [(m.start(), m.end(), m.group(1).lower()) for m in _marker_pattern(name).finditer(text)]
    starts = [m for m in markers if m[2] == "start"]
    if not starts:
        raise BlockNotFound(f"no '{name}' start marker in text")
    _, start_end, _ = starts[-1]
    begin = start_end + 1 if text[start_end : start_end + 1] == "\n" else start_end
    end_marker = next((m for m in markers if m[2] == "end" and m[0] >= start_end), None)
    if end_marker is None:
        return ParsedBlock(name, text[begin:], False)
    payload = text[begin : end_marker[0]]
    if payload.endswith("\n"):
        payload = payload[:-1]
    return ParsedBlock(name, payload, True)


def wrap_block(payload: str, name: str) -> str:
    return f"### {name} Start ###\n{payload}\n### {name} End ###"


EXPERT_TYPE_LLM = "LLM"
EXPERT_TYPE_TOOL = "Tool"
_EXPERT_TYPES = {"llm": EXPERT_TYPE_LLM, "tool": EXPERT_TYPE_TOOL}


@dataclass(frozen=True)
class ExpertCard:
    """The JSON name card identifying an expert: name, LLM-or-Tool type, and
    declared input/output types."""

    name: str
    expert_type: str
    input_type: str = ""
    output_type: str = ""

    @property
    def is_tool(self) -> bool:
        return self.expert_type == EXPERT_TYPE_TOOL

    @property
    def is_llm(self) -> bool:
        return self.expert_type == EXPERT_TYPE_LLM


def _balanced_objects(text: str) -> Iterator[tuple[int, str]]:
    """Yield (offset, snippet) for each top-level brace-balanced region.

    Quotes are tracked so braces inside string values do not break balance.
    """
    depth = 0
    start = -1
    quote: str | None = None
    escaped = False
    for index, char in enumerate(text):
        if quote is not None:
            if escaped:
                escaped = False
            elif char == "\\":
                escaped = True
            elif char == quote:
                quote = None
            continue
        if char in "\"'" and depth > 0:
            quote = char
        elif char == "{":
            if depth == 0:
                start = index
            depth += 1
        elif char == "}" and depth > 0:
            depth -= 1
            if depth == 0:
                yield start, text[start : index + 1]
    # An unterminated object (depth never returns to 0) is ignored.


def _parse_json_object(snippet: str) -> dict | None:
    for candidate in (snippet, snippet.replace("'", '"')):
        try:
            obj = json.loads(candidate)
        except ValueError:
            continue
        if isinstance(obj, dict):
            return obj
    return None


def _iter_cards_with_spans(text: str) -> Iterator[tuple[ExpertCard, int, int]]:
    for offset, snippet in _balanced_objects(text):
        obj = _parse_json_object(snippet)
        if obj is None:
            continue
        fields = {str(k).lower(): v for k, v in obj.items()}
        has_name = "name" in fields
        has_type = "expert_type" in fields
        if not has_name and not has_type:
            continue  # ordinary JSON in a reply, not a name card
        if not has_name:
            raise MalformedCard(offset, "missing Name")
        name = str(fields["name"]).strip()
        if not name:
            raise MalformedCard(offset, "empty Name")
        raw_type = str(fields.get("expert_type", "")).strip().lower()
        expert_type = _EXPERT_TYPES.get(raw_type)
        if expert_type is None:
            raise MalformedCard(offset, f"unknown expert type {fields.get('expert_type')!r}")
        card = ExpertCard(
            name,
            expert_type,
            str(fields.get("input_type", "") or ""),
            str(fields.get("output_type", "") or ""),
        )
        yield card, offset, offset + len(snippet)


def parse_expert_cards_with_spans(text: str) -> list[tuple[ExpertCard, int, int]]:
    cards = list(_iter_cards_with_spans(text))
    if not cards:
        raise NoCardsFound("no expert name cards in text")
    return cards


def parse_expert_cards(text: str) -> list[ExpertCard]:
    """All expert name cards in ``text``, in document order."""
    return [card for card, _, _ in parse_expert_cards_with_spans(text)]


class VerdictValue(str, Enum):
    YES = "Yes"
    NO = "No"
    UNPARSEABLE = "Unparseable"


@dataclass(frozen=True)
class Verdict:
    value: VerdictValue
    raw: str
    rewrite: str | None = None

    @property
    def is_yes(self) -> bool:
        return self.value is VerdictValue.YES

    @property
    def is_no(self) -> bool:
        return self.value is VerdictValue.NO


def _osa_distance(a: str, b: str) -> int:
    """Optimal string alignment distance (Levenshtein plus adjacent
    transposition as a single edit)."""
    rows, cols = len(a) + 1, len(b) + 1
    dist = [[0] * cols for _ in range(rows)]
    for i in range(rows):
        dist[i][0] = i
    for j in range(cols):
        dist[0][j] = j
    for i in range(1, rows):
        for j in range(1, cols):
            cost = 0 if a[i - 1] == b[j - 1] else 1
            dist[i][j] = min(
                dist[i - 1][j] + 1,
                dist[i][j - 1] + 1,
                dist[i - 1][j - 1] + cost,
            )
            if i > 1 and j > 1 and a[i - 1] == b[j - 2] and a[i - 2] == b[j - 1]:
                dist[i][j] = min(dist[i][j], dist[i - 2][j - 2] + 1)
    return dist[-1][-1]


_FINAL_EVAL = re.compile(r"\bfinal[ \t]+([A-Za-z]+)[ \t]*:", re.IGNORECASE)
_YES_NO = re.compile(r"[\s*_\"'`]*\b(yes|no)\b", re.IGNORECASE)


def parse_final_evaluation(text: str) -> Verdict:
    """Read the trailing YES/NO of the last ``FINAL EVALUATION:`` line.

    The keyword is matched within edit distance 1; a missing keyword or a
    keyword without a trailing YES/NO token yields Unparseable.
    """
    last = None
    for match in _FINAL_EVAL.finditer(text):
        if _osa_distance(match.group(1).upper(), "EVALUATION") <= 1:
            last = match
    if last is None:
        return Verdict(VerdictValue.UNPARSEABLE, text)
    token = _YES_NO.match(text, last.end())
    if token is None:
        return Verdict(VerdictValue.UNPARSEABLE, text)
    value = VerdictValue.YES if token.group(1).lower() == "yes" else VerdictValue.NO
    return Verdict(value, text)


_INVALID_TOKEN = re.compile(r"##[ \t]*INVALID[ \t]*##", re.IGNORECASE)
_VALID_TOKEN = re.compile(r"##[ \t]*VALID[ \t]*##", re.IGNORECASE)
REWRITE_BLOCK = "New Valid Problem"


def parse_validity(text: str) -> Verdict:
    """Detect the ## VALID ## / ## INVALID ## tokens.

    Tokens are matched whole, so the VALID inside INVALID never counts; when
    both whole tokens appear, INVALID wins. An invalid verdict may carry the
    rewritten problem extracted from its dedicated block.
    """
    rewrite: str | None = None
    try:
        payload = extract_block(text, REWRITE_BLOCK).payload.strip()
        rewrite = payload or None
    except BlockNotFound:
        pass
    if _INVALID_TOKEN.search(text):
        return Verdict(VerdictValue.NO, text, rewrite)
    if _VALID_TOKEN.search(text):
        return Verdict(VerdictValue.YES, text, rewrite)
    return Verdict(VerdictValue.UNPARSEABLE, text, rewrite)


_FENCE = re.compile(r"```[^\n]*\n(.*?)```", re.DOTALL)
CODE_BLOCK = "Python Code"


def extract_code(text: str) -> str:
    """Pull executable code out of a tool-expert reply.

    Preference order: payload of a ``Python Code`` marker block, then the
    first fenced code block (language tag stripped), then the whole reply —
    the prompt instructs bare code, so an unfenced reply is taken as-is.
    """
    candidate = text
    try:
        candidate = extract_block(text, CODE_BLOCK).payload
    except BlockNotFound:
        pass
    fenced = _FENCE.search(candidate)
    if fenced is not None:
        code = fenced.group(1)
    else:
        code = candidate.strip()
        if code.startswith("```"):
            # Unterminated fence: drop the opening line and any dangling close.
            _, _, code = code.partition("\n")
            code = code.removesuffix("```")
    code = code.strip()
    if not code:
        raise EmptyCode("reply contains no code")
    return code


_NUMBERED_ITEM = re.compile(r"^[ \t]*(\d{1,3})[.)\]:][ \t]*(.*)$")
_SECTION_BREAK = re.compile(r"^[ \t]*(?:#{2,}|={3,}|\*\*[^*]+\*\*:?[ \t]*$)")


def parse_numbered_blocks(text: str) -> list[str]:
    """Split ``text`` into numbered items ("1. ..." style).

    An item runs until the next numbered line or a section break (marker
    lines, ``=====`` banners, whole-line bold headings). Blank lines inside an
    item are allowed so multi-paragraph items survive.
    """
    items: list[list[str]] = []
    active = False
    for line in text.splitlines():
        match = _NUMBERED_ITEM.match(line)
        if match:
            head = match.group(2).strip()
            items.append([head] if head else [])
            active = True
            continue
        if not active:
            continue
        if _SECTION_BREAK.match(line):
            active = False
            continue
        if line.strip():
            items[-1].append(line.strip())
    return ["\n".join(parts).strip() for parts in items if any(parts)]
