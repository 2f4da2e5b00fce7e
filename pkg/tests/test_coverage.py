"""Coverage maps, rarity weights, and the state block format.

The idf reference values below were computed by hand from the definition
idf[i] = (1/sqrt(M)) * log(N / (1 + df[i])) before running the code:
with M = 256 and N = 4,

    df 0 -> ln(4)   / 16 = 0.08664339756999316
    df 1 -> ln(2)   / 16 = 0.04332169878499658
    df 2 -> ln(4/3) / 16 = 0.017980129528236306
    df 3 -> 0.0
"""

import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from covrl.coverage import (
    ConfigurationError,
    CoverageMap,
    StateFormatError,
    VirginMap,
    WeightMap,
    WeightsNotReady,
    accumulate,
    compute_idf,
    read_state_block,
    register_seed_coverage,
    unique_coverage,
    update_with_momentum,
    write_state_block,
)


def _setup_three_seeds():
    """Seeds covering {1,2,3}, {2,3,4}, {3}; df = [0,1,2,3,1,0,...], N = 4."""
    virgin = VirginMap.empty(8)
    weights = WeightMap.empty(8)
    for edges in ([1, 2, 3], [2, 3, 4], [3]):
        cov = CoverageMap.from_hits(edges, 8)
        accumulate(virgin, cov)
        register_seed_coverage(weights, unique_coverage(cov))
    return virgin, weights


def test_idf_matches_hand_computed_values():
    virgin, weights = _setup_three_seeds()
    assert virgin.unique_count == 4
    idf = compute_idf(weights, virgin)
    assert idf[0] == pytest.approx(0.08664339756999316, abs=1e-15)
    assert idf[1] == pytest.approx(0.04332169878499658, abs=1e-15)
    assert idf[2] == pytest.approx(0.017980129528236306, abs=1e-15)
    assert idf[3] == pytest.approx(0.0, abs=1e-15)
    assert idf[4] == pytest.approx(0.04332169878499658, abs=1e-15)


def test_idf_goes_negative_for_ubiquitous_edges():
    # an edge covered by every one of many seeds: df + 1 > N
    virgin = VirginMap.empty(8)
    weights = WeightMap.empty(8)
    for _ in range(5):
        cov = CoverageMap.from_hits([7], 8)
        accumulate(virgin, cov)
        register_seed_coverage(weights, unique_coverage(cov))
    assert virgin.unique_count == 1
    idf = compute_idf(weights, virgin)
    assert idf[7] < 0.0


def test_weights_not_ready_before_first_coverage():
    with pytest.raises(WeightsNotReady):
        compute_idf(WeightMap.empty(8), VirginMap.empty(8))


def test_accumulate_reports_only_new_edges():
    virgin = VirginMap.empty(8)
    first = accumulate(virgin, CoverageMap.from_hits([3, 5], 8))
    assert sorted(first.tolist()) == [3, 5]
    second = accumulate(virgin, CoverageMap.from_hits([5, 9], 8))
    assert second.tolist() == [9]
    third = accumulate(virgin, CoverageMap.from_hits([3, 5, 9], 8))
    assert len(third) == 0
    assert virgin.unique_count == 3


def test_counter_saturation_at_255():
    cov = CoverageMap.from_hits([4] * 300, 8)
    assert cov.counters[4] == 255
    assert unique_coverage(cov).tolist() == [4]


def test_edge_id_out_of_range_rejected():
    with pytest.raises(ConfigurationError):
        CoverageMap.from_hits([256], 8)


def test_map_size_mismatch_rejected():
    with pytest.raises(ConfigurationError):
        accumulate(VirginMap.empty(8), CoverageMap.zeros(9))


@pytest.mark.parametrize("exponent", [7, 25, 0, -1])
def test_exponent_bounds(exponent):
    with pytest.raises(ConfigurationError):
        CoverageMap.zeros(exponent)


def test_momentum_endpoints():
    weights = WeightMap.empty(8)
    weights.idf[:] = 1.0
    fresh = np.full(weights.size, 3.0)
    update_with_momentum(weights, fresh, alpha=1.0)
    assert np.all(weights.idf == 1.0)
    update_with_momentum(weights, fresh, alpha=0.0)
    assert np.all(weights.idf == 3.0)
    assert weights.cycle == 2


def test_momentum_rate_validated():
    weights = WeightMap.empty(8)
    with pytest.raises(ConfigurationError):
        update_with_momentum(weights, np.zeros(weights.size), alpha=1.5)


@settings(max_examples=100)
@given(
    old=st.lists(st.floats(-10, 10), min_size=4, max_size=4),
    fresh=st.lists(st.floats(-10, 10), min_size=4, max_size=4),
    alpha=st.floats(0.0, 1.0),
)
def test_momentum_stays_inside_convex_bounds(old, fresh, alpha):
    weights = WeightMap(np.zeros(256, dtype=np.uint32), np.zeros(256))
    weights.idf[:4] = old
    update_with_momentum(weights, np.array(fresh + [0.0] * 252), alpha)
    for i in range(4):
        lo, hi = min(old[i], fresh[i]), max(old[i], fresh[i])
        assert lo <= weights.idf[i] <= hi


def test_state_block_round_trips_bit_exact():
    virgin, weights = _setup_three_seeds()
    update_with_momentum(weights, compute_idf(weights, virgin), alpha=0.0)
    buf = io.BytesIO()
    write_state_block(buf, weights, virgin)
    buf.seek(0)
    loaded, n, exponent = read_state_block(buf)
    assert exponent == 8
    assert n == virgin.unique_count
    assert loaded.cycle == weights.cycle
    assert np.array_equal(loaded.df, weights.df)
    assert loaded.idf.tobytes() == weights.idf.tobytes()


def test_truncated_state_rejected():
    virgin, weights = _setup_three_seeds()
    buf = io.BytesIO()
    write_state_block(buf, weights, virgin)
    blob = buf.getvalue()
    for cut in (0, 10, len(blob) // 2, len(blob) - 1):
        with pytest.raises(StateFormatError):
            read_state_block(io.BytesIO(blob[:cut]))


def test_bad_magic_and_version_rejected():
    virgin, weights = _setup_three_seeds()
    buf = io.BytesIO()
    write_state_block(buf, weights, virgin)
    blob = bytearray(buf.getvalue())
    wrong_magic = bytes(blob)
    wrong_magic = b"XXXX" + wrong_magic[4:]
    with pytest.raises(StateFormatError):
        read_state_block(io.BytesIO(wrong_magic))
    blob[4] = 99  # version field
    with pytest.raises(StateFormatError):
        read_state_block(io.BytesIO(bytes(blob)))


@settings(max_examples=60)
@given(st.lists(st.integers(0, 255), min_size=0, max_size=40))
def test_unique_coverage_is_sorted_set_of_hits(hits):
    cov = CoverageMap.from_hits(hits, 8)
    assert unique_coverage(cov).tolist() == sorted(set(hits))
