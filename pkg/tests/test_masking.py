"""Masking strategies: slot numbering, run merging, splice, and fill splicing."""

from random import Random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from covrl.masking import (
    DEFAULT_MAX_SLOTS,
    FillResult,
    mask_insert,
    mask_overwrite,
    mask_splice,
    sample_mask_positions,
    splice_fills,
    statement_boundaries,
)
from covrl.tokenizer import is_sentinel, tokenize

SRC = "let x = 1 ; print ( x ) ;"
# tokens: let x = 1 ; print ( x ) ;   (10 tokens)


def test_insert_places_numbered_sentinels():
    ts = tokenize(SRC)
    mc = mask_insert(ts, [0, 5, 10])
    assert mc.mask_slot_count == 3
    assert mc.masked.tokens[0] == "<extra_id_0>"
    assert mc.masked.tokens[6] == "<extra_id_1>"  # shifted by the first sentinel
    assert mc.masked.tokens[-1] == "<extra_id_2>"  # position len(ts) appends
    # nothing removed
    assert [t for t in mc.masked.tokens if not is_sentinel(t)] == ts.tokens


def test_overwrite_merges_adjacent_runs():
    ts = tokenize(SRC)
    mc = mask_overwrite(ts, [1, 2, 3, 7])
    assert mc.mask_slot_count == 2
    assert mc.masked.tokens == [
        "let", "<extra_id_0>", ";", "print", "(", "<extra_id_1>", ")", ";",
    ]


def test_overwrite_requires_positions_and_tokens():
    with pytest.raises(ValueError):
        mask_overwrite(tokenize(SRC), [])
    with pytest.raises(ValueError):
        mask_overwrite(tokenize(""), [0])
    with pytest.raises(ValueError):
        mask_overwrite(tokenize(SRC), [99])


def test_statement_boundaries_at_top_level_only():
    ts = tokenize("a = 1 ; while ( a ) { b = 2 ; } c = 3 ;")
    bounds = statement_boundaries(ts)
    # after the first ';' and after the closing '}' and the final ';'
    assert ts.tokens[bounds[0] - 1] == ";"
    assert ts.tokens[bounds[1] - 1] == "}"
    assert bounds[-1] == len(ts)
    inner = ts.tokens.index("b") + 3  # the ';' inside the braces
    assert ts.tokens[inner] == ";"
    assert (inner + 1) not in bounds


def test_splice_always_two_slots():
    rng = Random(7)
    target = tokenize("a = 1 ; b = 2 ; c = 3 ;")
    donor = tokenize("print ( 9 ) ; d = 4 ;")
    for _ in range(20):
        mc = mask_splice(target, donor, rng)
        assert mc.mask_slot_count == 2
        assert mc.strategy == "splice"
        donor_part = [
            t for t in mc.masked.tokens
            if t in ("print", "9", "d", "4") and not is_sentinel(t)
        ]
        assert donor_part  # some donor run was inserted


def test_splice_without_boundaries_falls_back():
    rng = Random(3)
    target = tokenize("a + b + c")  # no ';' or '}' anywhere
    mc = mask_splice(target, tokenize("x = 1 ;"), rng)
    assert mc.strategy == "splice"
    assert 1 <= mc.mask_slot_count <= 1 or mc.mask_slot_count == 1


def test_splice_fills_replaces_each_slot():
    ts = tokenize(SRC)
    mc = mask_overwrite(ts, [3])
    out = splice_fills(mc, FillResult([["42"]]))
    assert out.tokens == ["let", "x", "=", "42", ";", "print", "(", "x", ")", ";"]


def test_splice_fills_relexes_multitoken_strings():
    ts = tokenize("a ;")
    mc = mask_overwrite(ts, [0])
    out = splice_fills(mc, FillResult([["x + 1"]]))
    assert out.tokens == ["x", "+", "1", ";"]
    assert len(out.tokens) == len(out.kinds)


def test_splice_fills_drops_sentinel_lookalikes_and_nonstrings():
    ts = tokenize("a ;")
    mc = mask_overwrite(ts, [0])
    out = splice_fills(mc, FillResult([["<extra_id_5>", None, "b"]]))
    assert out.tokens == ["b", ";"]
    assert not any(is_sentinel(t) for t in out.tokens)


def test_splice_fills_count_mismatch_rejected():
    mc = mask_overwrite(tokenize(SRC), [1])
    with pytest.raises(ValueError):
        splice_fills(mc, FillResult([["a"], ["b"]]))


def test_insert_with_empty_fills_is_identity():
    ts = tokenize(SRC)
    mc = mask_insert(ts, [2, 7])
    out = splice_fills(mc, FillResult([[], []]))
    assert out.tokens == ts.tokens


@settings(max_examples=150)
@given(
    n=st.integers(1, 200),
    rate=st.floats(0.01, 1.0),
    max_slots=st.integers(1, 12),
    insert=st.booleans(),
    seed=st.integers(0, 2**16),
)
def test_sampled_positions_within_bounds(n, rate, max_slots, insert, seed):
    pos = sample_mask_positions(n, Random(seed), rate, max_slots, insert)
    assert 1 <= len(pos) <= max_slots
    assert pos == sorted(set(pos))
    upper = n if insert else n - 1
    assert all(0 <= p <= upper for p in pos)


@settings(max_examples=100)
@given(
    src=st.text(alphabet="abx=1;(){} ", min_size=1, max_size=40),
    seed=st.integers(0, 2**16),
)
def test_masked_then_filled_streams_never_leak_sentinels(src, seed):
    ts = tokenize(src)
    if len(ts) == 0:
        return
    rng = Random(seed)
    pos = sample_mask_positions(len(ts), rng, 0.3, DEFAULT_MAX_SLOTS)
    mc = mask_overwrite(ts, pos)
    fills = [["z"] for _ in range(mc.mask_slot_count)]
    out = splice_fills(mc, FillResult(fills))
    assert not any(is_sentinel(t) for t in out.tokens)
    assert "sentinel" not in out.kinds
