"""Local Binary Pattern codes, their normalized histogram, and the entropy
formula behind the texture-complexity metric.

LBP configuration is the canonical baseline: 8 neighbors at radius 1 on the
square neighborhood, raw 256-bin histogram, no uniform-pattern or
rotation-invariant variants. A neighbor equal to the center sets its bit
(s(0) = 1), so constant regions map to code 255.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError, DimensionError, EmptyInputError
from .stats import ordered_sum

# Neighbor offsets (dy, dx) in fixed order starting East, counter-clockwise:
# E, NE, N, NW, W, SW, S, SE. Bit k carries weight 2^k.
_NEIGHBOR_OFFSETS = (
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
    (1, 0),
    (1, 1),
)


@dataclass(frozen=True)
class LbpCodeMap:
    """Per-pixel LBP codes over the interior (source - 2 per axis)."""

    codes: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.codes)
        if c.ndim != 2:
            raise ValueError(f"expected 2D code map, got shape {c.shape}")
        c = np.ascontiguousarray(c, dtype=np.int32)
        c.flags.writeable = False
        object.__setattr__(self, "codes", c)

    @property
    def width(self) -> int:
        return self.codes.shape[1]

    @property
    def height(self) -> int:
        return self.codes.shape[0]


@dataclass(frozen=True)
class Histogram:
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 1:
            raise ValueError(f"expected 1D histogram, got shape {v.shape}")
        if v.size and v.min() < 0:
            raise ValueError("histogram values must be >= 0")
        v = np.ascontiguousarray(v)
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def bins(self) -> int:
        return self.values.size


def lbp_code_map(img) -> LbpCodeMap:
    """code = sum over k of s(g_k - g_c) * 2^k, s(x) = 1 iff x >= 0."""
    a = getattr(img, "samples", img)
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] < 3 or a.shape[1] < 3:
        raise DimensionError(f"LBP needs at least 3x3, got shape {a.shape}")
    center = a[1:-1, 1:-1]
    codes = np.zeros(center.shape, dtype=np.int32)
    h, w = center.shape
    for k, (dy, dx) in enumerate(_NEIGHBOR_OFFSETS):
        nb = a[1 + dy : 1 + dy + h, 1 + dx : 1 + dx + w]
        codes |= (nb >= center).astype(np.int32) << k
    return LbpCodeMap(codes)


def normalized_histogram(codes: LbpCodeMap, bins: int = 256) -> Histogram:
    """Code frequencies over the interior pixel count; sums to 1."""
    if bins < 1 or bins & (bins - 1):
        raise ValueError(f"bins must be a power of two, got {bins}")
    n = codes.codes.size
    if n == 0:
        raise EmptyInputError("empty code map")
    if int(codes.codes.max()) >= bins:
        raise ValueError(
            f"code {int(codes.codes.max())} does not fit into {bins} bins"
        )
    counts = np.bincount(codes.codes.ravel(), minlength=bins)
    return Histogram(counts / float(n))


def entropy(h: Histogram, epsilon: float = 1e-6) -> float:
    """-sum(h_k * log2(h_k + epsilon)), evaluated literally, in bits.

    No clamping: a delta histogram yields a tiny negative value
    (-log2(1 + epsilon)) because the epsilon guard sits inside the log.
    Summation is value-ordered, so any permutation of bins gives the
    bit-identical result.
    """
    v = h.values
    total = ordered_sum(v)
    if abs(total - 1.0) > 1e-6:
        raise ContractError(f"histogram not normalized: sums to {total!r}")
    terms = v * np.log2(v + epsilon)
    return -ordered_sum(terms)
