"""Execution outcome taxonomy and reward dispatch.

Rewards follow a fixed dispatch: syntax errors score -1.0, semantic errors
-0.5, and everything that ran to completion earns a coverage-based reward.
The default scheme sums idf weights over the case's unique edges,

    S = sum(idf[i] for i in unique_coverage(case)),

and squashes log(S) through a logistic when log(S) > 0, otherwise it pays a
flat +0.5 floor.  Crashes and timeouts are scored like passes so inputs near
a crash are not penalized, but they are flagged separately for triage and
never enter the finetuning dataset.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .coverage import CoverageMap, VirginMap, WeightMap, unique_coverage

SYNTAX_PENALTY = -1.0
SEMANTIC_PENALTY = -0.5
FLOOR_REWARD = 0.5


class OutcomeClass(Enum):
    SYNTAX_ERROR = "syntax_error"
    SEMANTIC_ERROR = "semantic_error"
    PASS = "pass"
    CRASH = "crash"
    TIMEOUT = "timeout"


class SemanticKind(Enum):
    TYPE = "type"
    REFERENCE = "reference"
    RANGE = "range"
    URI = "uri"
    INTERNAL = "internal"


@dataclass(frozen=True)
class Outcome:
    """Classified result of one target execution."""

    cls: OutcomeClass
    semantic_kind: SemanticKind | None = None
    signal: int | None = None

    def __post_init__(self):
        if (self.semantic_kind is not None) != (self.cls is OutcomeClass.SEMANTIC_ERROR):
            raise ValueError("semantic_kind is set iff the outcome is a semantic error")
        if (self.signal is not None) != (self.cls is OutcomeClass.CRASH):
            raise ValueError("signal is set iff the outcome is a crash")

    def encode(self) -> str:
        """Stable string form used in dataset records and reports."""
        if self.cls is OutcomeClass.SEMANTIC_ERROR:
            return f"semantic_error:{self.semantic_kind.value}"
        if self.cls is OutcomeClass.CRASH:
            return f"crash:{self.signal}"
        return self.cls.value


class RewardSource(Enum):
    SYNTAX_PENALTY = "syntax_penalty"
    SEMANTIC_PENALTY = "semantic_penalty"
    FLOOR = "floor"
    WEIGHTED = "weighted"
    CRR_RATIO = "crr_ratio"
    BINARY_NEW = "binary_new"


@dataclass(frozen=True)
class Reward:
    value: float
    source: RewardSource

    def __post_init__(self):
        if not -1.0 <= self.value <= 1.0:
            raise ValueError(f"reward out of range: {self.value}")


def weighted_sum(cov: CoverageMap, weights: WeightMap) -> float:
    """S: sum of stored idf weights over the case's unique edges."""
    return float(weights.idf[unique_coverage(cov)].sum())


def tfidf_score(s: float) -> float:
    """log(S), with -inf standing in for the undefined S <= 0 region."""
    return math.log(s) if s > 0.0 else float("-inf")


def cwr_reward(cov: CoverageMap, weights: WeightMap) -> Reward:
    """Coverage-weighted reward: logistic(log S) when positive, else +0.5.

    logistic(log S) simplifies to S / (1 + S), so the weighted branch is
    computed in that closed form; it only applies when S > 1, which keeps
    the value strictly inside (0.5, 1).
    """
    s = weighted_sum(cov, weights)
    if s > 1.0:
        return Reward(s / (1.0 + s), RewardSource.WEIGHTED)
    return Reward(FLOOR_REWARD, RewardSource.FLOOR)


def crr_reward(cov: CoverageMap, virgin: VirginMap) -> Reward:
    """Coverage-ratio reward: |unique edges of case| / N.

    The virgin map must already include this execution's coverage, so the
    ratio is at most 1.  N == 0 is undefined; returns 0.0 as a floor.
    """
    n = virgin.unique_count
    if n == 0:
        return Reward(0.0, RewardSource.CRR_RATIO)
    count = len(unique_coverage(cov))
    return Reward(count / n, RewardSource.CRR_RATIO)


def cr_binary_reward(newly_seen: int) -> Reward:
    """Binary scheme used for ablations: 1 for new coverage, else 0."""
    return Reward(1.0 if newly_seen > 0 else 0.0, RewardSource.BINARY_NEW)


SCHEME_CWR = "cwr"
SCHEME_CRR = "crr"
SCHEME_CR_BINARY = "cr-binary"
REWARD_SCHEMES = (SCHEME_CWR, SCHEME_CRR, SCHEME_CR_BINARY)


def dispatch_reward(
    outcome: Outcome,
    cov: CoverageMap,
    weights: WeightMap,
    virgin: VirginMap,
    scheme: str = SCHEME_CWR,
    newly_seen: int = 0,
) -> Reward:
    """Route an outcome to its reward: -1.0 / -0.5 / coverage-based."""
    if outcome.cls is OutcomeClass.SYNTAX_ERROR:
        return Reward(SYNTAX_PENALTY, RewardSource.SYNTAX_PENALTY)
    if outcome.cls is OutcomeClass.SEMANTIC_ERROR:
        return Reward(SEMANTIC_PENALTY, RewardSource.SEMANTIC_PENALTY)
    if scheme == SCHEME_CWR:
        return cwr_reward(cov, weights)
    if scheme == SCHEME_CRR:
        return crr_reward(cov, virgin)
    if scheme == SCHEME_CR_BINARY:
        return cr_binary_reward(newly_seen)
    raise ValueError(f"unknown reward scheme {scheme!r}")


@dataclass(frozen=True)
class ExitStatus:
    """How the target process (or in-process run) ended."""

    code: int | None = None
    signal: int | None = None
    timed_out: bool = False


# pattern -> outcome, ordered; the match closest to the start of stderr wins,
# ties broken by this order.
DEFAULT_ERROR_PATTERNS: tuple[tuple[bytes, OutcomeClass, SemanticKind | None], ...] = (
    (b"SyntaxError", OutcomeClass.SYNTAX_ERROR, None),
    (b"TypeError", OutcomeClass.SEMANTIC_ERROR, SemanticKind.TYPE),
    (b"ReferenceError", OutcomeClass.SEMANTIC_ERROR, SemanticKind.REFERENCE),
    (b"RangeError", OutcomeClass.SEMANTIC_ERROR, SemanticKind.RANGE),
    (b"URIError", OutcomeClass.SEMANTIC_ERROR, SemanticKind.URI),
    (b"InternalError", OutcomeClass.SEMANTIC_ERROR, SemanticKind.INTERNAL),
)


def classify_stderr(
    stderr: bytes,
    exit: ExitStatus,
    patterns=DEFAULT_ERROR_PATTERNS,
) -> Outcome:
    """Map a finished execution to the outcome taxonomy.

    Timeouts (executor-initiated kills) win over everything, then crash
    signals, then the earliest matching error pattern in stderr.  A clean
    exit with no pattern is a pass; an unexplained nonzero exit counts as an
    internal semantic error.
    """
    if exit.timed_out:
        return Outcome(OutcomeClass.TIMEOUT)
    if exit.signal is not None:
        return Outcome(OutcomeClass.CRASH, signal=exit.signal)
    if isinstance(stderr, str):
        stderr = stderr.encode("utf-8", "replace")
    best = None
    best_pos = len(stderr) + 1
    for pattern, cls, kind in patterns:
        pos = stderr.find(pattern)
        if pos != -1 and pos < best_pos:
            best = (cls, kind)
            best_pos = pos
    if best is not None:
        cls, kind = best
        return Outcome(cls, semantic_kind=kind)
    if exit.code == 0:
        return Outcome(OutcomeClass.PASS)
    return Outcome(OutcomeClass.SEMANTIC_ERROR, semantic_kind=SemanticKind.INTERNAL)
