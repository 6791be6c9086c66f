from __future__ import annotations

import pytest

from hdflow.prompts import (
    CORE_TEMPLATE_NAMES,
    MissingBinding,
    PromptTemplate,
    TEMPLATE_NAMES,
    UnknownTemplate,
    catalog,
    load_template,
    render,
)


def sentinel_bindings(template: PromptTemplate) -> dict[str, str]:
    return {name: f"<{name}>" for name in template.placeholders}


def test_direct_substitution():
    template = PromptTemplate("t", "solve {x}")
    assert render(template, {"x": "24"}) == "solve 24"


def test_missing_binding_names_placeholder():
    template = PromptTemplate("t", "{a}{b}")
    with pytest.raises(MissingBinding) as error:
        render(template, {"a": "1"})
    assert error.value.name == "b"


def test_substitution_is_single_pass():
    template = PromptTemplate("t", "{a}")
    assert render(template, {"a": "{b}"}) == "{b}"


def test_extra_bindings_ignored():
    template = PromptTemplate("t", "just text")
    assert render(template, {"unused": "x"}) == "just text"


def test_catalog_has_ten_core_templates():
    assert len(CORE_TEMPLATE_NAMES) == 10
    assert set(CORE_TEMPLATE_NAMES) <= set(catalog())


def test_unknown_template_rejected():
    with pytest.raises(UnknownTemplate):
        load_template("nonexistent")


@pytest.mark.parametrize("name", TEMPLATE_NAMES)
def test_every_template_renders_fully(name):
    template = load_template(name)
    rendered = render(template, sentinel_bindings(template))
    for placeholder in template.placeholders:
        assert f"<{placeholder}>" in rendered
        assert f"{{{placeholder}}}" not in rendered


def test_reflection_template_contains_signature_phrase():
    rendered = load_template("problem_reflection").render(task_problem="decide 24")
    assert 'conduct the "Problem Reflection"' in rendered
    assert "decide 24" in rendered


EXPECTED_PHRASES = {
    "problem_reflection": 'conduct the "Problem Reflection"',
    "experts_design": 'you are to do "Specialized Experts Design"',
    "llm_expert": "### My Final Output Start ###",
    "tool_expert": "Output only code, without any explanations or comments.",
    "final_judgment": "stating 'FINAL EVALUATION: YES' or 'FINAL EVALUATION: NO'",
    "fast_cot": "Final Answer:",
    "fast_verification": "FINAL EVALUATION: YES",
    "task_synthesis_seeded": "develop 10 new and diverse reasoning tasks",
    "task_synthesis_puzzle": "develop 10 new and diverse puzzle tasks",
    "problem_validation": "output '## VALID ##' or '## INVALID ##'",
}


@pytest.mark.parametrize("name", sorted(EXPECTED_PHRASES))
def test_template_bodies_carry_their_grammar(name):
    assert EXPECTED_PHRASES[name] in load_template(name).body


EXPECTED_PLACEHOLDERS = {
    "problem_reflection": {"task_problem"},
    "experts_design": {"task_problem", "problem_reflection"},
    "llm_expert": {
        "original_problem",
        "problem_reflection",
        "name",
        "role",
        "experts_design",
        "data_type_instruction",
        "input_data",
    },
    "tool_expert": {
        "original_problem",
        "problem_reflection",
        "name",
        "role",
        "experts_design",
        "input_data",
        "input_type",
        "output_type",
        "how_to_read_input",
    },
    "final_judgment": {
        "task_problem",
        "problem_reflection",
        "experts_design",
        "experts_results",
        "final_expert",
    },
    "problem_validation": {"problem"},
    "task_synthesis_seeded": {"example_tasks"},
    "task_synthesis_puzzle": set(),
}


@pytest.mark.parametrize("name", sorted(EXPECTED_PLACEHOLDERS))
def test_placeholder_inventory(name):
    assert load_template(name).placeholders == frozenset(EXPECTED_PLACEHOLDERS[name])
