"""Prompt template catalog and rendering.

Templates are plain-text files under ``templates/``. A placeholder is a
single-brace ``{name}`` token; rendering substitutes every placeholder exactly
once and performs no other transformation, so replacement values containing
braces stay literal.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Mapping

from .errors import HDFlowError

_PLACEHOLDER = re.compile(r"\{([A-Za-z_][A-Za-z0-9_]*)\}")


class PromptError(HDFlowError):
    pass


class MissingBinding(PromptError):
    def __init__(self, name: str):
        super().__init__(f"no binding supplied for placeholder {{{name}}}")
        self.name = name


class UnknownTemplate(PromptError):
    pass


@dataclass(frozen=True)
class PromptTemplate:
    name: str
    body: str

    @property
    def placeholders(self) -> frozenset[str]:
        return frozenset(m.group(1) for m in _PLACEHOLDER.finditer(self.body))

    def render(self, **bindings: str) -> str:
        return render(self, bindings)


def render(template: PromptTemplate, bindings: Mapping[str, str]) -> str:
    """Substitute all placeholders; raises MissingBinding for uncovered ones."""

    def substitute(match: re.Match) -> str:
        name = match.group(1)
        if name not in bindings:
            raise MissingBinding(name)
        return bindings[name]

    return _PLACEHOLDER.sub(substitute, template.body)


# The ten core prompts driving solving, judging, and data synthesis, plus the
# problem-writing prompt used when expanding task descriptions into problems.
CORE_TEMPLATE_NAMES = (
    "problem_reflection",
    "experts_design",
    "llm_expert",
    "tool_expert",
    "final_judgment",
    "fast_cot",
    "fast_verification",
    "task_synthesis_seeded",
    "task_synthesis_puzzle",
    "problem_validation",
)

TEMPLATE_NAMES = CORE_TEMPLATE_NAMES + ("problem_synthesis",)


@lru_cache(maxsize=None)
def load_template(name: str) -> PromptTemplate:
    if name not in TEMPLATE_NAMES:
        raise UnknownTemplate(f"unknown template {name!r}")
    path = resources.files("hdflow") / "templates" / f"{name}.txt"
    return PromptTemplate(name, path.read_text(encoding="utf-8"))


def catalog() -> dict[str, PromptTemplate]:
    return {name: load_template(name) for name in TEMPLATE_NAMES}
