"""Edge coverage maps, the campaign-lifetime virgin map, and rarity weights.

Coverage for one execution is a map of 2**map_size_exponent 8-bit saturating
hit counters indexed by edge id.  The virgin map remembers which edges any
retained seed has ever touched.  The weight map turns per-edge document
frequencies into inverse-document-frequency weights:

    idf[i] = (1 / sqrt(M)) * log(N / (1 + df[i]))

where M is the map size, N the number of unique edges seen so far, and df[i]
the number of retained seeds that cover edge i.  Weights for very common
edges go negative and are kept as-is; rarity ordering is what matters.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field

import numpy as np

MIN_MAP_EXPONENT = 8
MAX_MAP_EXPONENT = 24
DEFAULT_MAP_EXPONENT = 16

STATE_MAGIC = b"CVRL"
STATE_VERSION = 1

# header: magic, version u32, map_size_exponent u32, cycle u64, N u64,
# all integers little-endian, followed by df (M * u32 LE) and idf (M * f8 LE).
_HEADER = struct.Struct("<4sIIQQ")


class ConfigurationError(ValueError):
    """Invalid map size, momentum rate, or similar setup mistake."""


class WeightsNotReady(RuntimeError):
    """No unique coverage yet (N == 0); weighting must be skipped."""


class StateFormatError(ValueError):
    """Campaign-state bytes are truncated or not in the expected format."""


def _check_exponent(exponent: int) -> int:
    if not isinstance(exponent, int) or isinstance(exponent, bool):
        raise ConfigurationError(f"map_size_exponent must be an int, got {exponent!r}")
    if not MIN_MAP_EXPONENT <= exponent <= MAX_MAP_EXPONENT:
        raise ConfigurationError(
            f"map_size_exponent must be in [{MIN_MAP_EXPONENT}, {MAX_MAP_EXPONENT}], got {exponent}"
        )
    return exponent


@dataclass
class CoverageMap:
    """Per-edge hit counters for a single execution."""

    counters: np.ndarray
    map_size_exponent: int = DEFAULT_MAP_EXPONENT

    def __post_init__(self):
        _check_exponent(self.map_size_exponent)
        self.counters = np.asarray(self.counters, dtype=np.uint8)
        if self.counters.shape != (1 << self.map_size_exponent,):
            raise ConfigurationError(
                f"counter array has length {self.counters.shape}, "
                f"expected {1 << self.map_size_exponent}"
            )

    @property
    def size(self) -> int:
        return 1 << self.map_size_exponent

    @classmethod
    def zeros(cls, exponent: int = DEFAULT_MAP_EXPONENT) -> "CoverageMap":
        _check_exponent(exponent)
        return cls(np.zeros(1 << exponent, dtype=np.uint8), exponent)

    @classmethod
    def from_hits(cls, hits, exponent: int = DEFAULT_MAP_EXPONENT) -> "CoverageMap":
        """Build a map from a sequence of edge ids; counters saturate at 255."""
        _check_exponent(exponent)
        size = 1 << exponent
        counts = np.bincount(np.asarray(hits, dtype=np.int64), minlength=size)
        if len(counts) > size:
            raise ConfigurationError("edge id out of range for the coverage map")
        return cls(np.minimum(counts, 255).astype(np.uint8), exponent)


@dataclass
class VirginMap:
    """Which edges have ever been covered by a retained seed."""

    seen: np.ndarray
    unique_count: int = 0

    def __post_init__(self):
        self.seen = np.asarray(self.seen, dtype=bool)

    @classmethod
    def empty(cls, exponent: int = DEFAULT_MAP_EXPONENT) -> "VirginMap":
        _check_exponent(exponent)
        return cls(np.zeros(1 << exponent, dtype=bool), 0)

    @property
    def size(self) -> int:
        return len(self.seen)


@dataclass
class WeightMap:
    """Document frequencies and the momentum-smoothed idf weights."""

    df: np.ndarray
    idf: np.ndarray
    cycle: int = 0

    def __post_init__(self):
        self.df = np.asarray(self.df, dtype=np.uint32)
        self.idf = np.asarray(self.idf, dtype=np.float64)
        if self.df.shape != self.idf.shape:
            raise ConfigurationError("df and idf arrays must have the same length")

    @classmethod
    def empty(cls, exponent: int = DEFAULT_MAP_EXPONENT) -> "WeightMap":
        _check_exponent(exponent)
        size = 1 << exponent
        return cls(np.zeros(size, dtype=np.uint32), np.zeros(size, dtype=np.float64), 0)

    @property
    def size(self) -> int:
        return len(self.df)


def unique_coverage(cov: CoverageMap) -> np.ndarray:
    """Sorted indices of edges with a nonzero counter (the 0/1 projection)."""
    return np.flatnonzero(cov.counters)


def accumulate(virgin: VirginMap, cov: CoverageMap) -> np.ndarray:
    """Fold one execution's coverage into the virgin map.

    Returns the edge ids that were newly seen (empty array when the
    execution found nothing new).  unique_count grows by exactly that many.
    """
    if virgin.size != cov.size:
        raise ConfigurationError(
            f"virgin map size {virgin.size} != coverage map size {cov.size}"
        )
    edges = np.flatnonzero(cov.counters)
    newly = edges[~virgin.seen[edges]]
    if len(newly):
        virgin.seen[newly] = True
        virgin.unique_count += len(newly)
    return newly


def compute_idf(weights: WeightMap, virgin: VirginMap) -> np.ndarray:
    """Fresh idf candidates from current df counts and N = unique_count.

    Raises WeightsNotReady while N == 0; callers skip weighting until the
    first retained execution.  Negative values (edges covered by most seeds)
    are returned as-is.
    """
    if weights.size != virgin.size:
        raise ConfigurationError("weight map and virgin map sizes differ")
    n = virgin.unique_count
    if n == 0:
        raise WeightsNotReady("no unique coverage yet; cannot compute idf")
    scale = 1.0 / math.sqrt(weights.size)
    return scale * np.log(float(n) / (1.0 + weights.df))


def update_with_momentum(weights: WeightMap, fresh_idf: np.ndarray, alpha: float) -> None:
    """Blend fresh idf candidates into the stored weights.

    new = alpha * old + (1 - alpha) * fresh, then clamped into the
    per-entry [min(old, fresh), max(old, fresh)] interval so the convex
    combination bound holds exactly even after float rounding.  alpha = 1
    keeps the old weights, alpha = 0 adopts the fresh ones.  Advances cycle.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ConfigurationError(f"momentum rate must be in [0, 1], got {alpha}")
    fresh = np.asarray(fresh_idf, dtype=np.float64)
    if fresh.shape != weights.idf.shape:
        raise ConfigurationError("fresh idf length does not match the weight map")
    old = weights.idf
    blended = alpha * old + (1.0 - alpha) * fresh
    np.clip(blended, np.minimum(old, fresh), np.maximum(old, fresh), out=blended)
    weights.idf = blended
    weights.cycle += 1


def register_seed_coverage(weights: WeightMap, edges) -> None:
    """Count one retained seed against every edge it covers (df[i] += 1)."""
    idx = np.asarray(edges, dtype=np.int64)
    if len(idx) == 0:
        return
    if idx.min() < 0 or idx.max() >= weights.size:
        raise ConfigurationError("edge id out of range for the weight map")
    weights.df[idx] += 1


def write_state_block(fp, weights: WeightMap, virgin: VirginMap) -> None:
    """Serialize weights plus the virgin map's unique count.

    Layout: the little-endian header (magic, version, map_size_exponent,
    cycle, N) followed by df as M u32 and idf as M IEEE-754 binary64.
    Round-trips bit-exactly.
    """
    exponent = int(weights.size).bit_length() - 1
    fp.write(_HEADER.pack(STATE_MAGIC, STATE_VERSION, exponent,
                          weights.cycle, virgin.unique_count))
    fp.write(weights.df.astype("<u4").tobytes())
    fp.write(weights.idf.astype("<f8").tobytes())


def read_state_block(fp) -> tuple[WeightMap, int, int]:
    """Parse a state block; returns (weights, unique_count, map_size_exponent)."""
    head = fp.read(_HEADER.size)
    if len(head) != _HEADER.size:
        raise StateFormatError("state file truncated in header")
    magic, version, exponent, cycle, n = _HEADER.unpack(head)
    if magic != STATE_MAGIC:
        raise StateFormatError(f"bad magic {magic!r}, expected {STATE_MAGIC!r}")
    if version != STATE_VERSION:
        raise StateFormatError(f"unsupported state format version {version}")
    try:
        _check_exponent(exponent)
    except ConfigurationError as exc:
        raise StateFormatError(str(exc)) from None
    size = 1 << exponent
    df_raw = fp.read(4 * size)
    idf_raw = fp.read(8 * size)
    if len(df_raw) != 4 * size or len(idf_raw) != 8 * size:
        raise StateFormatError("state file truncated in weight arrays")
    df = np.frombuffer(df_raw, dtype="<u4").astype(np.uint32)
    idf = np.frombuffer(idf_raw, dtype="<f8").astype(np.float64)
    return WeightMap(df, idf, cycle=cycle), int(n), exponent
