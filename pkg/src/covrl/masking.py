"""Sentinel masking of token streams and splice-in of returned fills.

Three strategies produce a masked case from a seed's tokens:

  insert    sentinels placed between tokens, nothing removed
  overwrite runs of existing tokens replaced by one sentinel per run
  splice    one top-level statement segment replaced by
            <sentinel, donor statement run, sentinel>

Sentinels are numbered left to right as <extra_id_0>, <extra_id_1>, ...
Filling replaces sentinel i with the i-th fill; any sentinel-looking token
inside a fill is dropped, so a filled stream never contains sentinels.
"""

from __future__ import annotations

from dataclasses import dataclass
from random import Random

from .tokenizer import (
    KIND_SENTINEL,
    TokenStream,
    is_sentinel,
    sentinel_token,
    tokenize,
)

STRATEGY_INSERT = "insert"
STRATEGY_OVERWRITE = "overwrite"
STRATEGY_SPLICE = "splice"
STRATEGIES = (STRATEGY_INSERT, STRATEGY_OVERWRITE, STRATEGY_SPLICE)

DEFAULT_MASK_RATE = 0.15
DEFAULT_MAX_SLOTS = 8


@dataclass
class MaskedCase:
    """A seed's tokens with numbered sentinel slots punched in."""

    masked: TokenStream
    mask_slot_count: int
    strategy: str
    seed_id: int | None = None
    donor_id: int | None = None


@dataclass
class FillResult:
    """Mutator answer: one token list per sentinel slot."""

    fills: list[list[str]]


def _normalize_positions(positions, upper: int) -> list[int]:
    uniq = sorted(set(int(p) for p in positions))
    if uniq and (uniq[0] < 0 or uniq[-1] > upper):
        raise ValueError(f"mask position out of range 0..{upper}: {uniq}")
    return uniq


def mask_insert(ts: TokenStream, positions) -> MaskedCase:
    """Insert one sentinel before each position; position len(ts) appends."""
    pos = _normalize_positions(positions, len(ts))
    tokens: list[str] = []
    kinds: list[str] = []
    slot = 0
    nxt = 0
    for p in pos:
        tokens.extend(ts.tokens[nxt:p])
        kinds.extend(ts.kinds[nxt:p])
        tokens.append(sentinel_token(slot))
        kinds.append(KIND_SENTINEL)
        slot += 1
        nxt = p
    tokens.extend(ts.tokens[nxt:])
    kinds.extend(ts.kinds[nxt:])
    return MaskedCase(TokenStream(tokens, kinds), slot, STRATEGY_INSERT)


def mask_overwrite(ts: TokenStream, positions) -> MaskedCase:
    """Replace the tokens at positions; consecutive runs share a sentinel."""
    if len(ts) == 0:
        raise ValueError("cannot overwrite in an empty stream")
    pos = _normalize_positions(positions, len(ts) - 1)
    if not pos:
        raise ValueError("overwrite needs at least one position")
    marked = set(pos)
    tokens: list[str] = []
    kinds: list[str] = []
    slot = 0
    i = 0
    n = len(ts)
    while i < n:
        if i in marked:
            tokens.append(sentinel_token(slot))
            kinds.append(KIND_SENTINEL)
            slot += 1
            while i in marked:
                i += 1
        else:
            tokens.append(ts.tokens[i])
            kinds.append(ts.kinds[i])
            i += 1
    return MaskedCase(TokenStream(tokens, kinds), slot, STRATEGY_OVERWRITE)


def statement_boundaries(ts: TokenStream) -> list[int]:
    """Positions just after a ';' or '}' sitting at brace depth zero."""
    bounds: list[int] = []
    depth = 0
    for i, tok in enumerate(ts.tokens):
        if tok == "{":
            depth += 1
        elif tok == "}":
            depth -= 1
        if depth <= 0 and (tok == ";" or tok == "}"):
            bounds.append(i + 1)
    return bounds


def _segments(ts: TokenStream) -> list[tuple[int, int]]:
    bounds = statement_boundaries(ts)
    segs: list[tuple[int, int]] = []
    start = 0
    for b in bounds:
        segs.append((start, b))
        start = b
    if start < len(ts):
        segs.append((start, len(ts)))
    return segs


def mask_splice(target: TokenStream, donor: TokenStream, rng: Random) -> MaskedCase:
    """Swap one target statement segment for a sentinel-wrapped donor run.

    Falls back to overwrite on a random short run when the target has no
    statement boundary.  The spliced form always has exactly two slots.
    """
    bounds = statement_boundaries(target)
    if not bounds or len(donor) == 0:
        if len(target) == 0:
            raise ValueError("cannot splice into an empty stream")
        start = rng.randrange(len(target))
        length = rng.randint(1, min(4, len(target) - start))
        mc = mask_overwrite(target, range(start, start + length))
        return MaskedCase(mc.masked, mc.mask_slot_count, STRATEGY_SPLICE)

    segs = _segments(target)
    seg_start, seg_end = segs[rng.randrange(len(segs))]

    donor_segs = _segments(donor)
    i = rng.randrange(len(donor_segs))
    j = rng.randint(i, len(donor_segs) - 1)
    d_start = donor_segs[i][0]
    d_end = donor_segs[j][1]

    tokens = list(target.tokens[:seg_start])
    kinds = list(target.kinds[:seg_start])
    tokens.append(sentinel_token(0))
    kinds.append(KIND_SENTINEL)
    tokens.extend(donor.tokens[d_start:d_end])
    kinds.extend(donor.kinds[d_start:d_end])
    tokens.append(sentinel_token(1))
    kinds.append(KIND_SENTINEL)
    tokens.extend(target.tokens[seg_end:])
    kinds.extend(target.kinds[seg_end:])
    return MaskedCase(TokenStream(tokens, kinds), 2, STRATEGY_SPLICE)


def sample_mask_positions(
    n_tokens: int,
    rng: Random,
    rate: float = DEFAULT_MASK_RATE,
    max_slots: int = DEFAULT_MAX_SLOTS,
    insert: bool = False,
) -> list[int]:
    """Draw mask positions covering about `rate` of the stream, <= max_slots."""
    pool = n_tokens + 1 if insert else n_tokens
    if pool <= 0:
        raise ValueError("empty token stream")
    k = max(1, min(max_slots, int(rate * pool + 0.5), pool))
    return sorted(rng.sample(range(pool), k))


def splice_fills(mc: MaskedCase, fill: FillResult) -> TokenStream:
    """Replace each sentinel with its fill; fills are re-lexed into tokens.

    Re-lexing keeps the result a well-formed stream even when a mutator
    returns multi-token strings, and silently drops sentinel look-alikes.
    """
    if len(fill.fills) != mc.mask_slot_count:
        raise ValueError(
            f"expected {mc.mask_slot_count} fills, got {len(fill.fills)}"
        )
    tokens: list[str] = []
    kinds: list[str] = []
    slot = 0
    for tok, kind in zip(mc.masked.tokens, mc.masked.kinds):
        if kind == KIND_SENTINEL:
            for piece in fill.fills[slot]:
                if not isinstance(piece, str) or is_sentinel(piece):
                    continue
                sub = tokenize(piece)
                tokens.extend(sub.tokens)
                kinds.extend(sub.kinds)
            slot += 1
        else:
            tokens.append(tok)
            kinds.append(kind)
    return TokenStream(tokens, kinds)
