"""Mutator wire protocol, in-process mock mutator, and endpoints.

Frame format (shared contract for any mutator service):

    4-byte big-endian unsigned payload length, then that many bytes of
    UTF-8 JSON.  Payloads are encoded canonically: sorted keys, separators
    ("," and ":"), ASCII escapes, no NaN/Infinity.  Frames above 16 MiB are
    rejected.

Request payloads:

    {"type": "ping"}
    {"type": "echo", "payload": <any JSON>}
    {"type": "infill", "id": <int>, "masked_tokens": [...], "slots": <int>,
     "decode": {"top_k": 32, "contrastive_alpha": 0.6}}
    {"type": "finetune", "cycle": <int>, "epochs": <int>,
     "records": [{"masked_tokens": [...], "fill_tokens": [[...], ...],
                  "reward": <float>}, ...]}

Responses mirror the request: pong carries a model identifier, echo returns
the payload unchanged, infill returns "fills" (one token list per slot, in
slot order), finetune returns loss_before/loss_after.  Malformed input gets
{"type": "error", "error": {"code": ..., "message": ...}} and the
connection stays open.  Error codes and messages are part of the contract:

    bad_json      "payload is not valid JSON"
    bad_request   "request must be a JSON object with a type field"
    unknown_type  "unknown request type: <type>"
    missing_field "missing or invalid field: <name>"
    empty_batch   "finetune needs at least one record"
"""

from __future__ import annotations

import json
import math
import socket
import struct
from bisect import bisect_right
from dataclasses import dataclass, field
from itertools import accumulate
from random import Random

from .masking import FillResult, MaskedCase
from .tokenizer import KEYWORDS, is_sentinel

PROTOCOL_VERSION = 1
MAX_FRAME_BYTES = 1 << 24
_LEN = struct.Struct(">I")

DEFAULT_TOP_K = 32
DEFAULT_CONTRASTIVE_ALPHA = 0.6


class ProtocolError(Exception):
    """The peer violated the wire contract (bad frame, wrong fill count)."""


class TransportError(Exception):
    """The connection died and one reconnect attempt did not revive it."""


def encode_payload(obj) -> bytes:
    return json.dumps(
        obj, sort_keys=True, separators=(",", ":"), allow_nan=False
    ).encode("utf-8")


def frame(payload: bytes) -> bytes:
    if len(payload) > MAX_FRAME_BYTES:
        raise ProtocolError(f"frame too large: {len(payload)} bytes")
    return _LEN.pack(len(payload)) + payload


def write_frame(stream, obj) -> None:
    stream.write(frame(encode_payload(obj)))
    stream.flush()


def read_frame(stream) -> bytes | None:
    """Read one length-prefixed payload; None on clean EOF."""
    head = stream.read(_LEN.size)
    if not head:
        return None
    if len(head) < _LEN.size:
        raise ProtocolError("truncated frame header")
    (length,) = _LEN.unpack(head)
    if length > MAX_FRAME_BYTES:
        raise ProtocolError(f"frame too large: {length} bytes")
    payload = stream.read(length)
    if len(payload) < length:
        raise ProtocolError("truncated frame payload")
    return payload


def error_response(code: str, message: str) -> dict:
    return {"type": "error", "error": {"code": code, "message": message}}


@dataclass(frozen=True)
class DecodeParams:
    """Decoding knobs forwarded to the mutator."""

    top_k: int = DEFAULT_TOP_K
    contrastive_alpha: float = DEFAULT_CONTRASTIVE_ALPHA

    def as_dict(self) -> dict:
        return {"top_k": self.top_k, "contrastive_alpha": self.contrastive_alpha}


def build_infill_request(request_id: int, mc: MaskedCase, decode: DecodeParams) -> dict:
    return {
        "type": "infill",
        "id": request_id,
        "masked_tokens": list(mc.masked.tokens),
        "slots": mc.mask_slot_count,
        "decode": decode.as_dict(),
    }


def build_finetune_request(cycle: int, records: list[dict], epochs: int = 1) -> dict:
    return {"type": "finetune", "cycle": cycle, "records": records, "epochs": epochs}


# ----------------------------------------------------------------------
# mock mutator
# ----------------------------------------------------------------------

MOCK_MODEL_ID = "mock-dict-1"

# base sampling pool: enough structure to assemble runnable statements,
# plus the names of every toy-target builtin
BASE_TOKENS = (
    # the full lexer keyword set, not just what the toy target accepts:
    # a realistic dictionary carries keywords most targets reject, and
    # pruning them is part of what feedback is for
    sorted(KEYWORDS)
    + list(";,(){}[]=") + "+ - * / % < > <= >= == != ! && ||".split()
    + "0 1 2 3 5 10 13 42 100".split()
    + ['"a"', '"b"', '"ab"', '"x"', '""', '"%41"', '"%00"', '"a%00b"', '"%0"']
    + ['"%31"', '"%7a"', '"%e9"']
    + "a b c x y z i n s t arr f g".split()
    + "print len abs min max sqrt floor parseInt str push pop charAt repeat decodeURI encodeURI".split()
)

MOCK_LEARN_RATE = 0.4
# the floor must sit well under 1.0 so dead dictionary entries can be
# priced out, while the explore share below still keeps them reachable
MOCK_MIN_WEIGHT = 0.25
MOCK_MAX_WEIGHT = 2.0
# per-cycle decay toward uniform.  A token whose advantage stays at a
# steady s settles near exp(lr*s / (1-pull)), so pull sets how hard a
# persistent signal can concentrate the sampler: 0.7 caps the equilibrium
# at about e for s=1 instead of running away to the clamp.
MOCK_UNIFORM_PULL = 0.7
# step scale for the parse-survival statistic.  Survival deltas are
# clamped to [-0.5, 0.5]; against the uniform pull, a token whose every
# appearance breaks parsing settles near the weight floor within a few
# cycles of evidence
MOCK_VALID_RATE = 2.5
# fraction of draws taken uniformly, ignoring learned weights: preference
# may bias sampling but never extinguish an option, or twenty cycles of
# drift would silence exactly the rare draws that late cycles need
MOCK_EXPLORE = 0.2

# starting probability that an identifier leaf is copied from the masked
# context instead of the dictionary.  Context names are usually declared
# in the program being filled, so this is the one context-conditioned
# behavior the mock can learn; the logit is nudged by finetune feedback
# and decays toward this prior.
MOCK_CTX_PRIOR = 0.3
MOCK_CTX_MIN = 0.15
MOCK_CTX_MAX = 0.85

# Theme preferences move whole families of tokens at once.  Per-token
# weights tell good values from bad ones too slowly: when one percent
# escape first pays off, every sibling escape should become likelier in
# the very next cycle.  Two low-dimensional knobs carry that: the chance
# that a string leaf is a percent-escape string, and a weight per builtin
# family for call fills.
MOCK_URI_PRIOR = 0.35
MOCK_URI_MIN = 0.10
MOCK_URI_MAX = 0.85
CALL_FAMILIES = ("strfn", "numfn", "arrfn", "anyname")
MOCK_CALL_MIN = 0.40
MOCK_CALL_MAX = 3.00
# Themes learn from coverage wins only, and fast.  A mined family pays in
# bursts: one retained decode seed must tilt the very next cycle toward
# more escapes or the trail goes cold before a second hit confirms it.
# Error records say nothing about which family to mine, so they are
# excluded rather than letting the daily noise wash the pulse out.
THEME_LEARN_RATE = 1.2
THEME_PULL = 0.9

_STR_BUILTINS = frozenset("len str parseInt charAt repeat decodeURI encodeURI".split())
_NUM_BUILTINS = frozenset("abs min max sqrt floor".split())
_ARR_BUILTINS = frozenset("push pop".split())
_FAMILY_BUILTINS = {
    "strfn": _STR_BUILTINS,
    "numfn": _NUM_BUILTINS,
    "arrfn": _ARR_BUILTINS,
}


def _call_family(name: str) -> str:
    if name in _STR_BUILTINS:
        return "strfn"
    if name in _NUM_BUILTINS:
        return "numfn"
    if name in _ARR_BUILTINS:
        return "arrfn"
    return "anyname"


def _is_uri_string(tok: str) -> bool:
    return len(tok) >= 2 and tok[0] == '"' and "%" in tok

# fill shapes: how a slot's token sequence is assembled.  The mix is itself
# a learned distribution; structural exploration (nesting, calls) compounds
# through it in a way single-token credit cannot.  Every shape emits at
# least one token: a fill of nothing would let reward flow to idleness.
SHAPE_LONE = "lone"
SHAPE_ATOM = "atom"
SHAPE_EXPR = "expr"
SHAPE_STMT = "stmt"
SHAPE_WRAP = "wrap"
SHAPE_CALL = "call"
SHAPE_OP = "op"
MOCK_SHAPES = (
    SHAPE_LONE,
    SHAPE_ATOM,
    SHAPE_EXPR,
    SHAPE_STMT,
    SHAPE_WRAP,
    SHAPE_CALL,
    SHAPE_OP,
)
# relative mass per shape before any feedback (mean 1.0)
MOCK_SHAPE_PRIOR = (1.45, 1.45, 0.75, 0.75, 0.70, 0.60, 1.30)
MOCK_SHAPE_MIN = 0.50
MOCK_SHAPE_MAX = 2.00

# operators eligible for the two-operand fill shape
_FILL_OPS = frozenset("+ - * / % < > <= >= == != && ||".split())

# An infilling model conditions on the tokens around a slot; the mock gets
# the same signal in a cheap form.  The token left of a slot sorts it into
# one of three grammatical positions, and each position gates the shape
# distribution so that, say, a slot right after `;` mostly grows statements
# while a slot after `(` mostly grows operands.  The gate is static shared
# knowledge, not feedback: both the adaptive and the frozen mutator use it,
# so reward learning is measured on top of it, not confounded with it.
_POS_STMT = "at-stmt"
_POS_EXPR = "at-expr"
_POS_CONT = "after-value"

_EXPR_LEFT = frozenset({"(", ",", "=", "[", "return", "!"}) | _FILL_OPS

_POS_SHAPE_GATE = {
    _POS_STMT: {
        SHAPE_LONE: 0.30,
        SHAPE_ATOM: 0.15,
        SHAPE_EXPR: 0.05,
        SHAPE_STMT: 4.00,
        SHAPE_WRAP: 0.05,
        SHAPE_CALL: 0.30,
        SHAPE_OP: 0.05,
    },
    _POS_EXPR: {
        SHAPE_LONE: 0.60,
        SHAPE_ATOM: 3.00,
        SHAPE_EXPR: 1.00,
        SHAPE_STMT: 0.05,
        SHAPE_WRAP: 1.20,
        SHAPE_CALL: 1.00,
        SHAPE_OP: 0.05,
    },
    _POS_CONT: {
        SHAPE_LONE: 0.80,
        SHAPE_ATOM: 0.20,
        SHAPE_EXPR: 0.15,
        SHAPE_STMT: 0.30,
        SHAPE_WRAP: 0.60,
        SHAPE_CALL: 0.10,
        SHAPE_OP: 3.00,
    },
}


def _position_class(prev: str | None) -> str:
    """Grammatical position of a slot given the token to its left."""
    if prev is None or prev in (";", "{", "}"):
        return _POS_STMT
    if prev in _EXPR_LEFT:
        return _POS_EXPR
    return _POS_CONT

_ATOM_KIND_NUM = "num"
_ATOM_KIND_STR = "str"
_ATOM_KIND_NAME = "name"
_ATOM_KIND_OTHER = "other"

_KEYWORDISH = frozenset(
    "let var const if else while function return new typeof true false null".split()
)


def _token_shape(tok: str) -> str:
    """Coarse lexical class used when a fill shape wants a typed leaf."""
    if not tok:
        return _ATOM_KIND_OTHER
    c = tok[0]
    if c.isdigit() or (c == "." and len(tok) > 1 and tok[1].isdigit()):
        return _ATOM_KIND_NUM
    if c in "\"'":
        return _ATOM_KIND_STR
    if (c.isalpha() or c in "_$") and tok not in _KEYWORDISH:
        return _ATOM_KIND_NAME
    return _ATOM_KIND_OTHER


class MockMutator:
    """Dictionary sampler standing in for a real infilling model.

    Each slot gets a small token sequence built from one of a few fixed
    shapes (lone token, atom, binary expression, statement, bracketed
    atom, call).  The leaves are drawn from a weighted token pool that grows
    as the campaign harvests tokens from retained seeds.  When adaptive, a
    finetune batch multiplies each fill token's weight by
    exp(learn_rate * advantage), advantage being the record reward minus
    the batch mean, clamped to [min_weight, max_weight]; the shape mix and
    the context-name bias are nudged the same way.  Context conditioning is
    deliberately thin: the only thing read from the masked tokens is the
    set of identifiers available for reuse.
    """

    def __init__(
        self,
        rng: Random,
        adaptive: bool = True,
        base_tokens=BASE_TOKENS,
        learn_rate: float = MOCK_LEARN_RATE,
        min_weight: float = MOCK_MIN_WEIGHT,
        max_weight: float = MOCK_MAX_WEIGHT,
    ):
        self.rng = rng
        self.adaptive = adaptive
        self.learn_rate = learn_rate
        self.min_weight = min_weight
        self.max_weight = max_weight
        self.weights: dict[str, float] = {tok: 1.0 for tok in base_tokens}
        self.shape_weights: dict[str, float] = dict(zip(MOCK_SHAPES, MOCK_SHAPE_PRIOR))
        self.ctx_bias = MOCK_CTX_PRIOR
        self.uri_bias = MOCK_URI_PRIOR
        self.call_weights: dict[str, float] = {f: 1.0 for f in CALL_FAMILIES}
        self._ctx_names: list[str] = []
        self._stale = True
        self._tokens: list[str] = []
        self._cum: list[float] = []

    def add_tokens(self, tokens) -> None:
        added = False
        for tok in tokens:
            # dictionary entries stay short; oversized lexemes are noise
            if tok and len(tok) <= 24 and tok not in self.weights:
                self.weights[tok] = 1.0
                added = True
        if added:
            self._stale = True

    def _rebuild(self) -> None:
        self._tokens = sorted(self.weights)
        self._cum = list(accumulate(self.weights[t] for t in self._tokens))
        self._uri_strs = [t for t in self._tokens if _is_uri_string(t)]
        self._plain_strs = [
            t
            for t in self._tokens
            if _token_shape(t) == _ATOM_KIND_STR and not _is_uri_string(t)
        ]
        self._fam_pools = {
            fam: [t for t in self._tokens if _call_family(t) == fam]
            for fam in ("strfn", "numfn", "arrfn")
        }
        self._stale = False

    def _draw_from(self, pool: list[str]) -> str:
        if not pool:
            return self._draw()
        if len(pool) == 1:
            return pool[0]
        cum = list(accumulate(self.weights.get(t, 1.0) for t in pool))
        i = bisect_right(cum, self.rng.random() * cum[-1])
        return pool[min(i, len(pool) - 1)]

    def _draw(self) -> str:
        if self._stale:
            self._rebuild()
        if self.rng.random() < MOCK_EXPLORE:
            return self.rng.choice(self._tokens)
        total = self._cum[-1]
        i = bisect_right(self._cum, self.rng.random() * total)
        return self._tokens[min(i, len(self._tokens) - 1)]

    def _draw_shaped(self, wanted: str, tries: int = 8) -> str:
        if (
            wanted == _ATOM_KIND_NAME
            and self._ctx_names
            and self.rng.random() < self.ctx_bias
        ):
            return self.rng.choice(self._ctx_names)
        if wanted == _ATOM_KIND_STR:
            if self._stale:
                self._rebuild()
            pool = (
                self._uri_strs
                if self.rng.random() < self.uri_bias
                else self._plain_strs
            )
            return self._draw_from(pool)
        tok = self._draw()
        for _ in range(tries):
            if _token_shape(tok) == wanted:
                return tok
            tok = self._draw()
        # fall back to something safe of the right class
        return {"num": "1", "str": '"a"', "name": "x"}.get(wanted, tok)

    def _call_name(self) -> str:
        if self._stale:
            self._rebuild()
        if self.rng.random() < MOCK_EXPLORE:
            fam = self.rng.choice(CALL_FAMILIES)
        else:
            total = 0.0
            r = self.rng.random() * sum(self.call_weights[f] for f in CALL_FAMILIES)
            fam = CALL_FAMILIES[-1]
            for f in CALL_FAMILIES:
                total += self.call_weights[f]
                if r < total:
                    fam = f
                    break
        if fam == "anyname":
            return self._draw_shaped(_ATOM_KIND_NAME)
        return self._draw_from(self._fam_pools[fam])

    def _atom(self) -> str:
        # value-like leaf: number, string, or identifier
        kind = self.rng.choice((_ATOM_KIND_NUM, _ATOM_KIND_STR, _ATOM_KIND_NAME))
        return self._draw_shaped(kind)

    def _op(self, tries: int = 8) -> str:
        tok = self._draw()
        for _ in range(tries):
            if tok in _FILL_OPS:
                return tok
            tok = self._draw()
        return "+"

    def _draw_shape(self, pos: str) -> str:
        gate = _POS_SHAPE_GATE[pos]
        if self.rng.random() < MOCK_EXPLORE:
            # explore over shapes but inside the grammar gate: a statement
            # dropped mid-expression teaches nothing except "syntax error"
            weights = [gate[s] for s in MOCK_SHAPES]
        else:
            weights = [gate[s] * self.shape_weights[s] for s in MOCK_SHAPES]
        total = 0.0
        r = self.rng.random() * sum(weights)
        for shape, w in zip(MOCK_SHAPES, weights):
            total += w
            if r < total:
                return shape
        return MOCK_SHAPES[-1]

    def _fill_one(self, pos: str) -> list[str]:
        shape = self._draw_shape(pos)
        if shape == SHAPE_LONE:
            return [self._draw()]
        if shape == SHAPE_ATOM:
            return [self._atom()]
        if shape == SHAPE_EXPR:
            return [self._atom(), self._op(), self._atom()]
        if shape == SHAPE_OP:
            if self.rng.random() < 0.25:
                return [self._op(), self._atom(), self._op(), self._atom()]
            return [self._op(), self._atom()]
        if shape == SHAPE_STMT:
            roll = self.rng.random()
            if roll < 0.4:
                return ["print", "(", self._atom(), ")", ";"]
            if roll < 0.7:
                return [self._atom(), ";"]
            return ["let", self._draw_shaped(_ATOM_KIND_NAME), "=", self._atom(), ";"]
        if shape == SHAPE_WRAP:
            wrap = "[]" if self.rng.random() < 0.5 else "()"
            inner = (
                self._fill_one(_POS_EXPR)
                if self.rng.random() < 0.25
                else [self._atom()]
            )
            return [wrap[0], *inner, wrap[1]]
        name = self._call_name()
        if self.rng.random() < 0.5:
            return [name, "(", self._atom(), ")"]
        return [name, "(", self._atom(), ",", self._atom(), ")"]

    def fill(self, masked_tokens, slots: int) -> list[list[str]]:
        self._ctx_names = list(
            dict.fromkeys(
                t for t in masked_tokens if _token_shape(t) == _ATOM_KIND_NAME
            )
        )
        # left neighbor of each slot, in slot order
        prevs: list[str | None] = []
        prev: str | None = None
        for tok in masked_tokens:
            if is_sentinel(tok):
                prevs.append(prev)
            else:
                prev = tok
        while len(prevs) < slots:
            prevs.append(None)
        try:
            return [self._fill_one(_position_class(prevs[i])) for i in range(slots)]
        finally:
            self._ctx_names = []

    @staticmethod
    def classify_fill(fill) -> str | None:
        """Recover the shape a fill most plausibly came from (for credit)."""
        n = len(fill)
        if n == 0:
            return None
        if n == 1:
            leaf = _token_shape(fill[0])
            return SHAPE_ATOM if leaf in (_ATOM_KIND_NUM, _ATOM_KIND_STR, _ATOM_KIND_NAME) else SHAPE_LONE
        if fill[-1] == ";":
            return SHAPE_STMT
        if fill[0] in _FILL_OPS:
            return SHAPE_OP
        if fill[0] in "([" and fill[-1] in ")]":
            return SHAPE_WRAP
        if n == 3 and fill[1] in _FILL_OPS:
            return SHAPE_EXPR
        if n >= 3 and fill[1] == "(" and fill[-1] == ")":
            return SHAPE_CALL
        return SHAPE_LONE

    def _log_prob(self, token: str) -> float:
        if self._stale:
            self._rebuild()
        w = self.weights.get(token)
        if w is None:
            return math.log(self.min_weight / self._cum[-1])
        return math.log(w / self._cum[-1])

    def _batch_loss(self, records) -> float:
        total = 0.0
        for rec in records:
            toks = [t for fill in rec["fill_tokens"] for t in fill]
            if not toks:
                continue
            mean_lp = sum(self._log_prob(t) for t in toks) / len(toks)
            total -= rec["reward"] * mean_lp
        return total / len(records)

    def finetune(self, records, epochs: int = 1) -> tuple[float, float]:
        loss_before = self._batch_loss(records)
        if self.adaptive:
            baseline = sum(float(r["reward"]) for r in records) / len(records)
            for _ in range(max(1, epochs)):
                # Two ledgers.  Every record carries one dense fact, whether
                # the case still parsed, and feeds per-choice survival rates.
                # Only records that earned coverage (positive reward, above
                # the batch mean) carry direction and feed the advantage
                # scores.  Mixing the two lets comfortable errors masquerade
                # as progress, which is how a sampler talks itself into
                # emitting nothing but safe scaffolding.
                score: dict[str, float] = {}
                shape_score: dict[str, float] = {}
                ctx_score = 0.0
                uri_score = 0.0
                call_score: dict[str, float] = {}
                # advantage mass over credited tokens / fills; the centering
                # below subtracts each choice's expected share of it
                token_mass = 0.0
                shape_mass = 0.0
                call_mass = 0.0
                uri_mass = 0.0
                tok_occ: dict[str, float] = {}
                tok_ok: dict[str, float] = {}
                shp_occ: dict[str, float] = {}
                shp_ok: dict[str, float] = {}
                occ_total = 0.0
                ok_total = 0.0
                for rec in records:
                    reward = float(rec["reward"])
                    adv = reward - baseline
                    themed = adv > 0 and reward > 0
                    # syntax penalty is -1.0, every other outcome is above it
                    parsed = reward > -0.75
                    ctx = {
                        t
                        for t in rec.get("masked_tokens", ())
                        if _token_shape(t) == _ATOM_KIND_NAME
                    }
                    for fill in rec["fill_tokens"]:
                        shape = self.classify_fill(fill)
                        if shape is not None:
                            shp_occ[shape] = shp_occ.get(shape, 0.0) + 1.0
                            if parsed:
                                shp_ok[shape] = shp_ok.get(shape, 0.0) + 1.0
                            if themed:
                                shape_score[shape] = shape_score.get(shape, 0.0) + adv
                                shape_mass += adv
                        if shape == SHAPE_CALL and themed:
                            fam = _call_family(fill[0])
                            call_score[fam] = call_score.get(fam, 0.0) + adv
                            call_mass += adv
                        if themed:
                            for t in fill:
                                if _token_shape(t) == _ATOM_KIND_STR:
                                    # centered on the current rate: winners
                                    # using escapes above it raise the bias,
                                    # at it they leave it alone
                                    hit = 1.0 if _is_uri_string(t) else 0.0
                                    uri_score += adv * (hit - self.uri_bias)
                                    uri_mass += adv
                            names = [
                                t for t in fill if _token_shape(t) == _ATOM_KIND_NAME
                            ]
                            if names and ctx:
                                # credit flows toward reusing surrounding
                                # identifiers when that pays off, away otherwise
                                if all(t in ctx for t in names):
                                    ctx_score += adv
                                else:
                                    ctx_score -= adv
                        for tok in fill:
                            tok_occ[tok] = tok_occ.get(tok, 0.0) + 1.0
                            occ_total += 1.0
                            if parsed:
                                tok_ok[tok] = tok_ok.get(tok, 0.0) + 1.0
                                ok_total += 1.0
                            if themed:
                                score[tok] = score.get(tok, 0.0) + adv
                                token_mass += adv
                    if themed and ctx:
                        # a winning mutation anywhere inside a program that
                        # already calls into a builtin family marks the whole
                        # family as live ground, whichever slot the fill hit
                        for fam, members in _FAMILY_BUILTINS.items():
                            if not ctx.isdisjoint(members):
                                call_score[fam] = call_score.get(fam, 0.0) + adv
                                call_mass += adv
                # score-function centering: a token drawn at its current
                # sampling rate in an average winning batch nets zero, so
                # only above-rate co-occurrence with wins moves a weight
                if token_mass:
                    pool = sum(self.weights.values())
                    for tok, w in self.weights.items():
                        expected = token_mass * w / pool
                        score[tok] = score.get(tok, 0.0) - expected
                if shape_mass:
                    pool = sum(self.shape_weights.values())
                    for shape, w in self.shape_weights.items():
                        expected = shape_mass * w / pool
                        shape_score[shape] = shape_score.get(shape, 0.0) - expected
                batch_rate = ok_total / occ_total if occ_total else None
                for tok, w in self.weights.items():
                    # pull toward uniform first so no token can lock the
                    # sampler into one safe choice, then take the steps
                    w = w ** MOCK_UNIFORM_PULL
                    w *= self._survival_factor(
                        tok_occ.get(tok), tok_ok.get(tok, 0.0), batch_rate
                    )
                    s = score.get(tok)
                    if s is not None:
                        s = max(-4.0, min(4.0, s))
                        w *= math.exp(self.learn_rate * s)
                    self.weights[tok] = w
                # renormalize to mean 1 (the sampler only sees ratios), then
                # clamp so no token vanishes or dominates outright
                mean = sum(self.weights.values()) / len(self.weights)
                for tok, w in self.weights.items():
                    w /= mean
                    self.weights[tok] = min(self.max_weight, max(self.min_weight, w))
                if call_mass:
                    pool = sum(self.call_weights.values())
                    for fam, w in self.call_weights.items():
                        expected = call_mass * w / pool
                        call_score[fam] = call_score.get(fam, 0.0) - expected
                self._update_shapes(shape_score, shp_occ, shp_ok, batch_rate)
                self._update_ctx_bias(ctx_score)
                # theme knobs move only on cycles that produced evidence;
                # quiet stretches late in a campaign must not erase a lock-in
                if uri_mass:
                    self._update_uri_bias(uri_score)
                if call_mass:
                    self._update_call(call_score)
            self._stale = True
        loss_after = self._batch_loss(records)
        return loss_before, loss_after

    @staticmethod
    def _survival_factor(occ, ok: float, batch_rate) -> float:
        """Multiplicative step from a choice's parse-survival rate.

        Add-two smoothing toward the batch rate keeps a single unlucky
        appearance from condemning a rare choice; the delta is clamped so
        one cycle can at most halve or 1.5x a weight.
        """
        if batch_rate is None or not occ:
            return 1.0
        rate = (ok + 2.0 * batch_rate) / (occ + 2.0)
        delta = max(-0.5, min(0.5, rate - batch_rate))
        return math.exp(MOCK_VALID_RATE * delta)

    def _update_shapes(self, shape_score, shp_occ, shp_ok, batch_rate) -> None:
        for shape, w in self.shape_weights.items():
            w = w ** MOCK_UNIFORM_PULL
            w *= self._survival_factor(
                shp_occ.get(shape), shp_ok.get(shape, 0.0), batch_rate
            )
            s = shape_score.get(shape)
            if s is not None:
                s = max(-4.0, min(4.0, s))
                w *= math.exp(self.learn_rate * s)
            self.shape_weights[shape] = w
        mean = sum(self.shape_weights.values()) / len(self.shape_weights)
        for shape, w in self.shape_weights.items():
            w /= mean
            self.shape_weights[shape] = min(MOCK_SHAPE_MAX, max(MOCK_SHAPE_MIN, w))

    def _update_ctx_bias(self, ctx_score: float) -> None:
        z0 = math.log(MOCK_CTX_PRIOR / (1.0 - MOCK_CTX_PRIOR))
        z = math.log(self.ctx_bias / (1.0 - self.ctx_bias))
        z = z0 + MOCK_UNIFORM_PULL * (z - z0)
        z += self.learn_rate * max(-4.0, min(4.0, ctx_score))
        b = 1.0 / (1.0 + math.exp(-z))
        self.ctx_bias = min(MOCK_CTX_MAX, max(MOCK_CTX_MIN, b))

    def _update_uri_bias(self, uri_score: float) -> None:
        z0 = math.log(MOCK_URI_PRIOR / (1.0 - MOCK_URI_PRIOR))
        z = math.log(self.uri_bias / (1.0 - self.uri_bias))
        z = z0 + THEME_PULL * (z - z0)
        z += THEME_LEARN_RATE * max(-4.0, min(4.0, uri_score))
        b = 1.0 / (1.0 + math.exp(-z))
        self.uri_bias = min(MOCK_URI_MAX, max(MOCK_URI_MIN, b))

    def _update_call(self, call_score: dict[str, float]) -> None:
        for fam, w in self.call_weights.items():
            w = w ** THEME_PULL
            s = call_score.get(fam)
            if s is not None:
                s = max(-4.0, min(4.0, s))
                w *= math.exp(THEME_LEARN_RATE * s)
            self.call_weights[fam] = w
        mean = sum(self.call_weights.values()) / len(self.call_weights)
        for fam, w in self.call_weights.items():
            w /= mean
            self.call_weights[fam] = min(MOCK_CALL_MAX, max(MOCK_CALL_MIN, w))

    # -- request dispatch (shared by in-process and TCP serving) --------

    def handle(self, request) -> dict:
        if not isinstance(request, dict) or not isinstance(request.get("type"), str):
            return error_response("bad_request", "request must be a JSON object with a type field")
        rtype = request["type"]
        if rtype == "ping":
            return {"type": "pong", "model": MOCK_MODEL_ID}
        if rtype == "echo":
            return {"type": "echo", "payload": request.get("payload")}
        if rtype == "infill":
            rid = request.get("id")
            slots = request.get("slots")
            masked = request.get("masked_tokens")
            if not isinstance(rid, int):
                return error_response("missing_field", "missing or invalid field: id")
            if not isinstance(slots, int) or slots < 0:
                return error_response("missing_field", "missing or invalid field: slots")
            if not isinstance(masked, list):
                return error_response("missing_field", "missing or invalid field: masked_tokens")
            return {"type": "infill", "id": rid, "fills": self.fill(masked, slots)}
        if rtype == "finetune":
            cycle = request.get("cycle")
            records = request.get("records")
            if not isinstance(cycle, int):
                return error_response("missing_field", "missing or invalid field: cycle")
            if not isinstance(records, list):
                return error_response("missing_field", "missing or invalid field: records")
            if not records:
                return error_response("empty_batch", "finetune needs at least one record")
            for rec in records:
                if (
                    not isinstance(rec, dict)
                    or not isinstance(rec.get("fill_tokens"), list)
                    or not isinstance(rec.get("reward"), (int, float))
                ):
                    return error_response("missing_field", "missing or invalid field: records")
            epochs = request.get("epochs", 1)
            if not isinstance(epochs, int) or epochs < 1:
                epochs = 1
            before, after = self.finetune(records, epochs)
            return {
                "type": "finetune",
                "cycle": cycle,
                "loss_before": before,
                "loss_after": after,
            }
        return error_response("unknown_type", f"unknown request type: {rtype}")

    # -- checkpoint support ---------------------------------------------

    def state_dict(self) -> dict:
        return {
            "adaptive": self.adaptive,
            "weights": {t: self.weights[t] for t in sorted(self.weights)},
            "shape_weights": {s: self.shape_weights[s] for s in MOCK_SHAPES},
            "ctx_bias": self.ctx_bias,
            "uri_bias": self.uri_bias,
            "call_weights": {f: self.call_weights[f] for f in CALL_FAMILIES},
        }

    def load_state_dict(self, state: dict) -> None:
        self.adaptive = bool(state["adaptive"])
        self.weights = {str(t): float(w) for t, w in state["weights"].items()}
        shapes = state.get("shape_weights", {})
        self.shape_weights = {
            s: float(shapes.get(s, p)) for s, p in zip(MOCK_SHAPES, MOCK_SHAPE_PRIOR)
        }
        self.ctx_bias = float(state.get("ctx_bias", MOCK_CTX_PRIOR))
        self.uri_bias = float(state.get("uri_bias", MOCK_URI_PRIOR))
        calls = state.get("call_weights", {})
        self.call_weights = {f: float(calls.get(f, 1.0)) for f in CALL_FAMILIES}
        self._stale = True


# ----------------------------------------------------------------------
# endpoints
# ----------------------------------------------------------------------


class InProcessEndpoint:
    """Directly dispatches requests to a handler, no serialization."""

    def __init__(self, handler):
        self._handler = handler

    def request(self, obj: dict) -> dict:
        return self._handler.handle(obj)

    def close(self) -> None:
        pass


class TcpEndpoint:
    """Framed JSON client with a single reconnect-and-retry on loss."""

    def __init__(self, host: str, port: int, timeout: float = 30.0):
        self.host = host
        self.port = port
        self.timeout = timeout
        self._stream = None

    def _connect(self):
        sock = socket.create_connection((self.host, self.port), timeout=self.timeout)
        self._stream = sock.makefile("rwb")

    def _round_trip(self, obj: dict) -> dict:
        if self._stream is None:
            self._connect()
        write_frame(self._stream, obj)
        payload = read_frame(self._stream)
        if payload is None:
            raise ConnectionError("server closed the connection")
        return json.loads(payload)

    def request(self, obj: dict) -> dict:
        try:
            return self._round_trip(obj)
        except (OSError, ConnectionError, ValueError):
            self.close()
            try:
                return self._round_trip(obj)
            except (OSError, ConnectionError, ValueError) as exc:
                self.close()
                raise TransportError(f"mutator endpoint lost: {exc}") from exc

    def close(self) -> None:
        if self._stream is not None:
            try:
                self._stream.close()
            except OSError:
                pass
            self._stream = None


def request_fill(
    mc: MaskedCase,
    endpoint,
    decode: DecodeParams = DecodeParams(),
    request_id: int = 0,
) -> FillResult:
    """Ask the endpoint to fill a masked case; validates the slot count."""
    resp = endpoint.request(build_infill_request(request_id, mc, decode))
    if not isinstance(resp, dict) or resp.get("type") != "infill":
        raise ProtocolError(f"unexpected infill response: {resp!r}")
    fills = resp.get("fills")
    if not isinstance(fills, list) or len(fills) != mc.mask_slot_count:
        raise ProtocolError(
            f"expected {mc.mask_slot_count} fills, got "
            f"{len(fills) if isinstance(fills, list) else fills!r}"
        )
    clean = []
    for f in fills:
        if not isinstance(f, list):
            raise ProtocolError("each fill must be a list of tokens")
        clean.append([str(t) for t in f])
    return FillResult(clean)


# ----------------------------------------------------------------------
# serving (used by tests and by the standalone mock server script)
# ----------------------------------------------------------------------


def serve_connection(handler, conn: socket.socket) -> None:
    """Answer framed requests on one connection until EOF."""
    stream = conn.makefile("rwb")
    try:
        while True:
            try:
                payload = read_frame(stream)
            except ProtocolError:
                break
            if payload is None:
                break
            try:
                request = json.loads(payload)
            except ValueError:
                write_frame(stream, error_response("bad_json", "payload is not valid JSON"))
                continue
            write_frame(stream, handler.handle(request))
    except (BrokenPipeError, ConnectionResetError):
        pass
    finally:
        try:
            stream.close()
        except OSError:
            pass


def serve_once(handler, host: str = "127.0.0.1", port: int = 0):
    """Bind a listening socket; returns (socket, bound_port)."""
    srv = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    srv.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    srv.bind((host, port))
    srv.listen(4)
    return srv, srv.getsockname()[1]
