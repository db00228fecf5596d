from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from ccloop.extraction import detect_language, extract_code
from helpers import EXTRACTION_FIXTURES, LANGUAGE_FIXTURES


@pytest.mark.parametrize(
    "raw,code,had_fences,fence_info,block_count", EXTRACTION_FIXTURES
)
def test_extraction_fixtures(raw, code, had_fences, fence_info, block_count):
    result = extract_code(raw)
    assert result.code == code
    assert result.had_fences == had_fences
    assert result.fence_info == fence_info
    assert result.block_count == block_count


def test_first_block_wins():
    result = extract_code("```c\nA\n```\ntext\n```c\nB\n```")
    assert result.code == "A"
    assert result.block_count == 2
    assert result.prose_present


def test_whole_output_fallback():
    result = extract_code("int main(){}")
    assert result.code == "int main(){}"
    assert not result.had_fences
    assert result.block_count == 0
    assert not result.prose_present


def test_unterminated_fence_is_no_fence():
    raw = "```c\nint main(){}"
    result = extract_code(raw)
    assert not result.had_fences
    assert result.code == raw


def test_prose_present_only_outside_blocks():
    assert not extract_code("```c\nint x;\n```").prose_present
    assert extract_code("hello\n```c\nint x;\n```").prose_present
    assert extract_code("```c\nint x;\n```\nbye").prose_present


fence_free = st.text(max_size=300).filter(
    lambda t: not any(line.startswith("```") for line in t.split("\n"))
)


@given(fence_free)
def test_round_trip(text):
    wrapped = "```c\n" + text + "\n```"
    assert extract_code(wrapped).code == text


@given(st.text(max_size=300))
def test_code_is_contiguous_substring(text):
    result = extract_code(text)
    assert result.code in text
    assert (result.block_count >= 1) == result.had_fences
    if not result.had_fences:
        assert result.code == text


@given(st.text(max_size=300))
def test_no_nested_extraction(text):
    result = extract_code(text)
    if result.had_fences:
        assert not extract_code(result.code).had_fences


@pytest.mark.parametrize("raw,language,confidence", LANGUAGE_FIXTURES)
def test_language_fixtures(raw, language, confidence):
    guess = detect_language(extract_code(raw))
    assert guess.language == language
    assert guess.confidence == confidence


def test_fence_tag_wins_over_content():
    # tagged python even though the body smells like C
    guess = detect_language(extract_code("```python\nint main(){}\n```"))
    assert guess.language == "python"
    assert guess.confidence == "fence_tag"


def test_unrecognized_tag_falls_back_to_heuristics():
    guess = detect_language(extract_code("```source\ndef main():\n    pass\n```"))
    assert guess.language == "python"
    assert guess.confidence == "heuristic"


def test_no_alphanumeric_content_is_unknown():
    guess = detect_language(extract_code("...\n---"))
    assert guess.language == "unknown"
    assert guess.confidence == "default"
