from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from hdflow.parsing import (
    BlockNotFound,
    EmptyCode,
    MalformedCard,
    NoCardsFound,
    VerdictValue,
    extract_block,
    extract_code,
    parse_expert_cards,
    parse_final_evaluation,
    parse_numbered_blocks,
    parse_validity,
    wrap_block,
)
from tests.conftest import morse_fixture


class TestExtractBlock:
    def test_minimal_block(self):
        block = extract_block("### X Start ###\nhi\n### X End ###", "X")
        assert (block.payload, block.complete) == ("hi", True)

    def test_start_without_end(self):
        block = extract_block("### X Start ###\ntrailing text", "X")
        assert block.payload == "trailing text"
        assert not block.complete

    def test_missing_start_marker(self):
        with pytest.raises(BlockNotFound):
            extract_block("no markers here", "X")

    def test_case_and_whitespace_tolerant(self):
        text = "  ###  problem reflection start  ###  \nbody\n### Problem Reflection END ###"
        assert extract_block(text, "Problem Reflection").payload == "body"

    def test_last_block_wins(self):
        text = (
            "### X Start ###\nfirst\n### X End ###\n"
            "noise\n"
            "### X Start ###\nsecond\n### X End ###"
        )
        assert extract_block(text, "X").payload == "second"

    def test_final_expert_message_yields_answer(self):
        block = extract_block(morse_fixture("expert_review"), "My Final Output")
        assert block.payload.strip() == "Tea, coffee, and sugar"
        assert block.complete

    @given(st.text(alphabet=st.characters(blacklist_characters="#"), max_size=300))
    def test_round_trip(self, payload):
        assert extract_block(wrap_block(payload, "Payload"), "Payload").payload == payload

    def test_round_trip_preserves_trailing_newline(self):
        payload = "line one\nline two\n"
        assert extract_block(wrap_block(payload, "X"), "X").payload == payload


class TestParseExpertCards:
    def test_morse_design_yields_five_cards(self):
        cards = parse_expert_cards(morse_fixture("design"))
        assert len(cards) == 5
        assert cards[0].name == "Morse Code Dictionary Creation Expert"
        assert cards[0].is_llm
        assert cards[2].name == "Python Expert of Translation"
        assert cards[2].is_tool
        assert cards[-1].name == "Final Review and Presentation Expert"

    def test_order_preserved_and_count_matches(self):
        text = (
            'first {"Name": "A", "Expert_Type": "LLM"} then '
            '{"Name": "B", "Expert_Type": "Tool", "Input_Type": "str", "Output_Type": "str"}'
        )
        cards = parse_expert_cards(text)
        assert [card.name for card in cards] == ["A", "B"]
        assert cards[1].input_type == "str"

    def test_no_json_objects(self):
        with pytest.raises(NoCardsFound):
            parse_expert_cards("plain prose without any braces")

    def test_non_card_json_ignored(self):
        text = '{"A": ".-", "B": "-..."} and {"Name": "X", "Expert_Type": "LLM"}'
        cards = parse_expert_cards(text)
        assert [card.name for card in cards] == ["X"]

    def test_card_missing_name_is_malformed(self):
        with pytest.raises(MalformedCard):
            parse_expert_cards('{"Expert_Type": "LLM"}')

    def test_unknown_expert_type_is_malformed(self):
        with pytest.raises(MalformedCard):
            parse_expert_cards('{"Name": "X", "Expert_Type": "Robot"}')

    def test_case_insensitive_keys(self):
        cards = parse_expert_cards('{"name": "X", "expert_type": "tool"}')
        assert cards[0].is_tool

    def test_single_quoted_card_normalized(self):
        cards = parse_expert_cards("{'Name': 'X', 'Expert_Type': 'LLM'}")
        assert cards[0].name == "X"

    def test_braces_inside_strings_do_not_break_balance(self):
        cards = parse_expert_cards('{"Name": "curly {guy}", "Expert_Type": "LLM"}')
        assert cards[0].name == "curly {guy}"


class TestParseFinalEvaluation:
    def test_literal_yes(self):
        assert parse_final_evaluation("all good\nFINAL EVALUATION: YES").value is VerdictValue.YES

    def test_literal_no(self):
        assert parse_final_evaluation("FINAL EVALUATION: NO").value is VerdictValue.NO

    def test_token_absent(self):
        assert parse_final_evaluation("great job").value is VerdictValue.UNPARSEABLE

    def test_misspelled_keyword_within_one_edit(self):
        verdict = parse_final_evaluation(morse_fixture("judgment"))
        assert verdict.value is VerdictValue.YES

    def test_two_edits_away_not_matched(self):
        assert parse_final_evaluation("FINAL EVALAUTOIN: YES").value is VerdictValue.UNPARSEABLE

    def test_last_occurrence_wins(self):
        text = "FINAL EVALUATION: YES\n... reconsidering ...\nFINAL EVALUATION: NO"
        assert parse_final_evaluation(text).value is VerdictValue.NO

    def test_keyword_without_token(self):
        assert parse_final_evaluation("FINAL EVALUATION: maybe?").value is VerdictValue.UNPARSEABLE

    def test_case_insensitive_with_markdown(self):
        assert parse_final_evaluation("final evaluation: **yes**").value is VerdictValue.YES

    @given(st.text(max_size=400))
    def test_total_and_closed(self, text):
        assert parse_final_evaluation(text).value in set(VerdictValue)


class TestParseValidity:
    def test_valid_token(self):
        assert parse_validity("analysis... ## VALID ##").value is VerdictValue.YES

    def test_invalid_with_rewrite(self):
        text = (
            "## INVALID ##\n"
            "### New Valid Problem Start ###\n"
            "A sharper problem statement.\n"
            "### New Valid Problem End ###"
        )
        verdict = parse_validity(text)
        assert verdict.value is VerdictValue.NO
        assert verdict.rewrite == "A sharper problem statement."

    def test_token_absent(self):
        assert parse_validity("looks fine to me").value is VerdictValue.UNPARSEABLE

    def test_invalid_alone_does_not_read_as_valid(self):
        assert parse_validity("## INVALID ##").value is VerdictValue.NO

    def test_invalid_precedence_when_both_present(self):
        assert parse_validity("## VALID ## ... wait ## INVALID ##").value is VerdictValue.NO

    @given(st.text(max_size=400))
    def test_total_and_closed(self, text):
        assert parse_validity(text).value in set(VerdictValue)


class TestExtractCode:
    def test_fence_stripped(self):
        assert extract_code("```\nprint(1)\n```") == "print(1)"

    def test_language_tag_stripped(self):
        assert extract_code("```python\nprint(2)\n```") == "print(2)"

    def test_marker_block_preferred(self):
        code = extract_code(morse_fixture("expert_translation"))
        assert code.startswith("def translate_morse_code")
        assert code.endswith("print(translated)")

    def test_bare_code_taken_whole(self):
        assert extract_code("print(3)\n") == "print(3)"

    def test_unterminated_fence(self):
        assert extract_code("```python\nprint(4)") == "print(4)"

    def test_whitespace_only_raises(self):
        with pytest.raises(EmptyCode):
            extract_code("   \n\t ")


class TestParseNumberedBlocks:
    def test_simple_items(self):
        assert parse_numbered_blocks("1. parse\n2. compute") == ["parse", "compute"]

    def test_marker_line_terminates(self):
        text = "1. only item\n### Section End ###\nstray prose"
        assert parse_numbered_blocks(text) == ["only item"]

    def test_multiline_item(self):
        text = "1. first line\ncontinuation\n2. second"
        assert parse_numbered_blocks(text) == ["first line\ncontinuation", "second"]

    def test_no_items(self):
        assert parse_numbered_blocks("prose without enumeration") == []

    def test_bold_heading_terminates(self):
        text = "1. item\n**Next Section**:\nmore prose"
        assert parse_numbered_blocks(text) == ["item"]
