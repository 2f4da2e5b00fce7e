"""Reward dispatch, the logistic coverage reward, and stderr classification.

CWR reference: with idf weights 2.0 and 1.0 on the covered edges,
S = 3.0 and logistic(log S) = S / (1 + S) = 0.75 exactly.
"""

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from covrl.coverage import CoverageMap, VirginMap, WeightMap, accumulate
from covrl.reward import (
    FLOOR_REWARD,
    SEMANTIC_PENALTY,
    SYNTAX_PENALTY,
    ExitStatus,
    Outcome,
    OutcomeClass,
    Reward,
    RewardSource,
    SemanticKind,
    classify_stderr,
    cr_binary_reward,
    crr_reward,
    cwr_reward,
    dispatch_reward,
    tfidf_score,
    weighted_sum,
)


def _cov(edges):
    return CoverageMap.from_hits(edges, 8)


def _weights(**idf_by_edge):
    w = WeightMap.empty(8)
    for edge, val in idf_by_edge.items():
        w.idf[int(edge.lstrip("e"))] = val
    return w


def test_cwr_weighted_branch_hand_value():
    weights = _weights(e5=2.0, e9=1.0)
    r = cwr_reward(_cov([5, 9]), weights)
    assert r.source is RewardSource.WEIGHTED
    assert r.value == pytest.approx(0.75, abs=1e-15)


def test_cwr_floor_when_sum_at_most_one():
    weights = _weights(e5=0.4, e9=0.6)
    r = cwr_reward(_cov([5, 9]), weights)  # S == 1.0, not > 1
    assert r.source is RewardSource.FLOOR
    assert r.value == FLOOR_REWARD
    assert cwr_reward(_cov([3]), _weights(e3=-2.0)).value == FLOOR_REWARD


def test_tfidf_score_log_domain():
    assert tfidf_score(math.e) == pytest.approx(1.0)
    assert tfidf_score(0.0) == float("-inf")
    assert tfidf_score(-3.0) == float("-inf")


@settings(max_examples=100)
@given(st.floats(1.0001, 1e6))
def test_logistic_of_log_identity(s):
    """sigma(log S) == S / (1 + S); the closed form must agree."""
    weights = _weights(e1=s)
    r = cwr_reward(_cov([1]), weights)
    sigma = 1.0 / (1.0 + math.exp(-math.log(s)))
    assert r.value == pytest.approx(sigma, rel=1e-12)
    assert 0.5 < r.value < 1.0


def test_weighted_sum_counts_each_edge_once():
    weights = _weights(e2=0.5)
    # 40 hits of the same edge still contribute its weight once
    assert weighted_sum(_cov([2] * 40), weights) == pytest.approx(0.5)


def test_crr_ratio_and_floor():
    virgin = VirginMap.empty(8)
    accumulate(virgin, _cov([1, 2, 3, 4]))
    r = crr_reward(_cov([1, 2]), virgin)
    assert r.value == pytest.approx(0.5)
    assert r.source is RewardSource.CRR_RATIO
    assert crr_reward(_cov([1]), VirginMap.empty(8)).value == 0.0


def test_cr_binary():
    assert cr_binary_reward(3).value == 1.0
    assert cr_binary_reward(0).value == 0.0


def test_dispatch_penalties_ignore_coverage():
    weights = _weights(e1=100.0)
    virgin = VirginMap.empty(8)
    syn = Outcome(OutcomeClass.SYNTAX_ERROR)
    sem = Outcome(OutcomeClass.SEMANTIC_ERROR, semantic_kind=SemanticKind.TYPE)
    assert dispatch_reward(syn, _cov([1]), weights, virgin).value == SYNTAX_PENALTY
    assert dispatch_reward(sem, _cov([1]), weights, virgin).value == SEMANTIC_PENALTY


def test_dispatch_crash_and_timeout_use_coverage_reward():
    """Near-miss inputs are not penalized: crashes score like passes."""
    weights = _weights(e1=4.0)
    virgin = VirginMap.empty(8)
    crash = Outcome(OutcomeClass.CRASH, signal=11)
    r = dispatch_reward(crash, _cov([1]), weights, virgin)
    assert r.value == pytest.approx(0.8)
    timeout = Outcome(OutcomeClass.TIMEOUT)
    assert dispatch_reward(timeout, _cov([1]), weights, virgin).value == pytest.approx(0.8)


def test_dispatch_unknown_scheme_rejected():
    with pytest.raises(ValueError):
        dispatch_reward(
            Outcome(OutcomeClass.PASS), _cov([1]), WeightMap.empty(8),
            VirginMap.empty(8), scheme="bogus",
        )


def test_outcome_field_consistency_enforced():
    with pytest.raises(ValueError):
        Outcome(OutcomeClass.PASS, semantic_kind=SemanticKind.TYPE)
    with pytest.raises(ValueError):
        Outcome(OutcomeClass.SEMANTIC_ERROR)
    with pytest.raises(ValueError):
        Outcome(OutcomeClass.PASS, signal=11)
    with pytest.raises(ValueError):
        Outcome(OutcomeClass.CRASH)


def test_outcome_encode_forms():
    sem = Outcome(OutcomeClass.SEMANTIC_ERROR, semantic_kind=SemanticKind.URI)
    assert sem.encode() == "semantic_error:uri"
    assert Outcome(OutcomeClass.CRASH, signal=6).encode() == "crash:6"
    assert Outcome(OutcomeClass.PASS).encode() == "pass"


def test_reward_range_validated():
    with pytest.raises(ValueError):
        Reward(1.5, RewardSource.FLOOR)


def test_classify_earliest_pattern_wins():
    out = classify_stderr(b"x TypeError: nope ... SyntaxError later", ExitStatus(code=1))
    assert out.cls is OutcomeClass.SEMANTIC_ERROR
    assert out.semantic_kind is SemanticKind.TYPE
    out = classify_stderr(b"SyntaxError: bad token", ExitStatus(code=1))
    assert out.cls is OutcomeClass.SYNTAX_ERROR


def test_classify_precedence_timeout_then_signal():
    out = classify_stderr(b"SyntaxError", ExitStatus(signal=11, timed_out=True))
    assert out.cls is OutcomeClass.TIMEOUT
    out = classify_stderr(b"SyntaxError", ExitStatus(signal=11))
    assert out.cls is OutcomeClass.CRASH
    assert out.signal == 11


def test_classify_clean_and_unexplained_exits():
    assert classify_stderr(b"", ExitStatus(code=0)).cls is OutcomeClass.PASS
    out = classify_stderr(b"weird", ExitStatus(code=3))
    assert out.cls is OutcomeClass.SEMANTIC_ERROR
    assert out.semantic_kind is SemanticKind.INTERNAL


def test_classify_accepts_str_stderr():
    out = classify_stderr("RangeError: big", ExitStatus(code=1))
    assert out.semantic_kind is SemanticKind.RANGE


@pytest.mark.parametrize(
    "needle,kind",
    [
        (b"TypeError", SemanticKind.TYPE),
        (b"ReferenceError", SemanticKind.REFERENCE),
        (b"RangeError", SemanticKind.RANGE),
        (b"URIError", SemanticKind.URI),
        (b"InternalError", SemanticKind.INTERNAL),
    ],
)
def test_semantic_kind_table(needle, kind):
    out = classify_stderr(needle + b": detail", ExitStatus(code=1))
    assert out.cls is OutcomeClass.SEMANTIC_ERROR
    assert out.semantic_kind is kind
