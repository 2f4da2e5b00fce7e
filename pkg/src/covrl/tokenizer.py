"""Token-level lexer for JavaScript-flavored source.

Lexing is total: any byte sequence yields a token stream, with bytes that
fit no rule emitted as single-character punctuators.  Comments and
whitespace are dropped.  Detokenization is a single-space join.  Re-lexing
a join is stable after one pass; unpaired quote characters from the first
lex can merge across the inserted spaces, so the very first round trip may
coarsen a stream once.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

KIND_IDENTIFIER = "identifier"
KIND_NUMBER = "number"
KIND_STRING = "string"
KIND_PUNCTUATOR = "punctuator"
KIND_KEYWORD = "keyword"
KIND_TEMPLATE = "template"
KIND_REGEX = "regex"
KIND_SENTINEL = "sentinel"

KEYWORDS = frozenset(
    """async await break case catch class const continue debugger default
    delete do else enum export extends false finally for function get if
    import in instanceof let new null of return set static super switch this
    throw true try typeof var void while with yield""".split()
)

_TOKEN_RE = re.compile(
    r"""
      (?P<ws> \s+ )
    | (?P<comment> //[^\n]* | /\*(?:[^*]|\*(?!/))*\*/ )
    | (?P<name> [A-Za-z_$][A-Za-z0-9_$]* )
    | (?P<number> 0[xX][0-9a-fA-F]+n?
                | 0[bB][01]+n?
                | 0[oO][0-7]+n?
                | (?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?n? )
    | (?P<string> "(?:\\.|[^"\\\n])*" | '(?:\\.|[^'\\\n])*' )
    | (?P<template> `(?:\\.|[^`\\])*` )
    | (?P<punct> >>>=|\.\.\.|===|!==|\*\*=|<<=|>>=|>>>|&&=|\|\|=|\?\?=
               | =>|\+\+|--|\*\*|==|!=|<=|>=|&&|\|\||\?\?|\?\.|<<|>>
               | \+=|-=|\*=|/=|%=|&=|\|=|\^=
               | [+\-*/%&|^=<>!~?:;,.(){}\[\]@\#] )
    | (?P<other> . )
    """,
    re.VERBOSE | re.DOTALL,
)

# regex bodies longer than this are treated as division instead; an
# unbounded scan would let a stray '/' swallow half a program as one token
MAX_REGEX_BODY = 64

# no whitespace inside regex bodies: detokenization joins tokens with
# spaces, so a token with an embedded space could never round-trip
_REGEX_RE = re.compile(r"/(?:\\\S|\[(?:\\\S|[^\]\\\s])*\]|[^/\\\s\[])+/[A-Za-z]*")

# a '/' starts a regex literal unless the previous token looks like the end
# of a value expression
_NO_REGEX_AFTER_KIND = frozenset(
    (KIND_IDENTIFIER, KIND_NUMBER, KIND_STRING, KIND_TEMPLATE, KIND_REGEX)
)
_NO_REGEX_AFTER_TOKEN = frozenset((")", "]", "}", "++", "--", "this", "true", "false", "null"))

_SENTINEL_RE = re.compile(r"<extra_id_(\d+)>")


@dataclass
class TokenStream:
    """Parallel token strings and kinds for one source."""

    tokens: list[str] = field(default_factory=list)
    kinds: list[str] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.tokens)

    def copy(self) -> "TokenStream":
        return TokenStream(list(self.tokens), list(self.kinds))


def tokenize(source) -> TokenStream:
    """Lex source (str or utf-8 bytes) into a TokenStream."""
    if isinstance(source, (bytes, bytearray)):
        source = source.decode("utf-8", "replace")
    tokens: list[str] = []
    kinds: list[str] = []
    append_tok = tokens.append
    append_kind = kinds.append
    pos = 0
    end = len(source)
    prev_kind = None
    prev_tok = None
    while pos < end:
        m = _TOKEN_RE.match(source, pos)
        group = m.lastgroup
        text = m.group()
        if group == "ws" or group == "comment":
            pos = m.end()
            continue
        if group == "name":
            kind = KIND_KEYWORD if text in KEYWORDS else KIND_IDENTIFIER
        elif group == "number":
            kind = KIND_NUMBER
        elif group == "string":
            kind = KIND_STRING
        elif group == "template":
            kind = KIND_TEMPLATE
        elif group == "punct":
            if text[0] == "/" and text in ("/", "/="):
                if prev_kind not in _NO_REGEX_AFTER_KIND and prev_tok not in _NO_REGEX_AFTER_TOKEN:
                    rm = _REGEX_RE.match(source, pos)
                    if rm and rm.end() - pos <= MAX_REGEX_BODY:
                        text = rm.group()
                        append_tok(text)
                        append_kind(KIND_REGEX)
                        prev_kind, prev_tok = KIND_REGEX, text
                        pos = rm.end()
                        continue
            kind = KIND_PUNCTUATOR
        else:
            kind = KIND_PUNCTUATOR
        append_tok(text)
        append_kind(kind)
        prev_kind, prev_tok = kind, text
        pos = m.end()
    return TokenStream(tokens, kinds)


def detokenize(ts: TokenStream) -> str:
    """Render a stream back to source text (single-space join)."""
    return " ".join(ts.tokens)


def is_sentinel(token: str) -> bool:
    return _SENTINEL_RE.fullmatch(token) is not None


def sentinel_token(index: int) -> str:
    return f"<extra_id_{index}>"
