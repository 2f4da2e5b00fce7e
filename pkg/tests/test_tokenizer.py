"""Lexer behavior: hand-checked streams, totality, and join round-trips."""

import string

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from covrl.tokenizer import (
    KIND_IDENTIFIER,
    KIND_KEYWORD,
    KIND_NUMBER,
    KIND_PUNCTUATOR,
    KIND_REGEX,
    KIND_STRING,
    MAX_REGEX_BODY,
    detokenize,
    is_sentinel,
    sentinel_token,
    tokenize,
)

# hand-lexed reference stream, written down before running the lexer
HAND_SOURCE = 'let u = decodeURI ( "%41%42" ) ; // tail\nprint ( len ( u ) >= 2 ) ;'
HAND_TOKENS = [
    "let", "u", "=", "decodeURI", "(", '"%41%42"', ")", ";",
    "print", "(", "len", "(", "u", ")", ">=", "2", ")", ";",
]
HAND_KINDS = [
    KIND_KEYWORD, KIND_IDENTIFIER, KIND_PUNCTUATOR, KIND_IDENTIFIER,
    KIND_PUNCTUATOR, KIND_STRING, KIND_PUNCTUATOR, KIND_PUNCTUATOR,
    KIND_IDENTIFIER, KIND_PUNCTUATOR, KIND_IDENTIFIER, KIND_PUNCTUATOR,
    KIND_IDENTIFIER, KIND_PUNCTUATOR, KIND_PUNCTUATOR, KIND_NUMBER,
    KIND_PUNCTUATOR, KIND_PUNCTUATOR,
]


def test_hand_lexed_stream():
    ts = tokenize(HAND_SOURCE)
    assert ts.tokens == HAND_TOKENS
    assert ts.kinds == HAND_KINDS


def test_comments_and_whitespace_dropped():
    ts = tokenize("a /* x heavy\n comment */ = 1 // trailing\n")
    assert ts.tokens == ["a", "=", "1"]


def test_number_forms():
    src = "0x1F 0b10 0o7 1.5e3 .25 42n"
    ts = tokenize(src)
    assert ts.tokens == src.split()
    assert all(k == KIND_NUMBER for k in ts.kinds)


def test_keywords_vs_identifiers():
    ts = tokenize("while whiles let letx")
    assert ts.kinds == [KIND_KEYWORD, KIND_IDENTIFIER, KIND_KEYWORD, KIND_IDENTIFIER]


def test_regex_after_operator_but_division_after_value():
    ts = tokenize("a = /ab[cd]/g ; b = a / 2 ; c = ( a ) / 3")
    assert "/ab[cd]/g" in ts.tokens
    assert ts.kinds[ts.tokens.index("/ab[cd]/g")] == KIND_REGEX
    # both later slashes sit after value-ending tokens, so plain division
    assert ts.tokens.count("/") == 2
    for i, tok in enumerate(ts.tokens):
        if tok == "/":
            assert ts.kinds[i] == KIND_PUNCTUATOR


def test_overlong_regex_falls_back_to_division():
    body = "x" * (MAX_REGEX_BODY + 8)
    ts = tokenize(f"a = /{body}/ ;")
    assert KIND_REGEX not in ts.kinds


def test_multichar_punctuators_lex_greedily():
    ts = tokenize("a===b>>>=c?.d")
    assert "===" in ts.tokens and ">>>=" in ts.tokens and "?." in ts.tokens


def test_totality_on_unmatchable_bytes():
    ts = tokenize(b"\x00\xff@#`unterminated")
    assert len(ts) > 0
    assert len(ts.tokens) == len(ts.kinds)


def test_sentinel_helpers():
    assert sentinel_token(3) == "<extra_id_3>"
    assert is_sentinel("<extra_id_0>")
    assert is_sentinel("<extra_id_17>")
    assert not is_sentinel("<extra_id_>")
    assert not is_sentinel("x<extra_id_1>")


def test_copy_is_independent():
    ts = tokenize("a b")
    dup = ts.copy()
    dup.tokens[0] = "z"
    assert ts.tokens[0] == "a"


_quote_free_alphabet = string.ascii_letters + string.digits + " \n\t+-*/%=<>!&|(){}[];,.$_#?:~^"
_source_alphabet = _quote_free_alphabet + "\"'`\\"


@settings(max_examples=200)
@given(st.text(alphabet=_quote_free_alphabet, max_size=120))
def test_join_round_trip_is_exact_without_quotes(src):
    """Without quote characters, tokenize-join-tokenize is a fixed point."""
    once = tokenize(src)
    twice = tokenize(detokenize(once))
    assert twice.tokens == once.tokens
    assert twice.kinds == once.kinds


@settings(max_examples=200)
@given(st.text(alphabet=_source_alphabet, max_size=120))
def test_join_round_trip_converges_after_one_pass(src):
    """Unpaired quotes may merge across the join once, then stabilize."""
    once = tokenize(detokenize(tokenize(src)))
    again = tokenize(detokenize(once))
    assert again.tokens == once.tokens
    assert again.kinds == once.kinds


@settings(max_examples=200)
@given(st.binary(max_size=80))
def test_lexing_is_total_on_arbitrary_bytes(data):
    ts = tokenize(data)
    assert len(ts.tokens) == len(ts.kinds)
    for tok in ts.tokens:
        assert isinstance(tok, str) and tok


def test_bytes_input_decodes_with_replacement():
    ts = tokenize(b"let \xff x")
    assert "let" in ts.tokens and "x" in ts.tokens


@pytest.mark.parametrize("src", ["", "   ", "// only a comment", "/* block */"])
def test_empty_inputs_yield_empty_streams(src):
    assert len(tokenize(src)) == 0
