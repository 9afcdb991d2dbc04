"""Order-stable population statistics.

Accumulation order is pinned by sorting values first, so every statistic
here depends only on the multiset of inputs. That makes results identical
under any spatial rearrangement of an image (flip, transpose) instead of
merely close, which the metric invariance guarantees rely on.

Variance is computed from scaled deviations t_i = n*x_i - sum(x) rather
than x_i - mean. The two are algebraically identical (var = sum(t^2)/n^3),
but the scaled form avoids the early rounded division by n: whenever the
inputs negate or reflect exactly in floating point, the t_i negate exactly
too, and the variance comes out bit-identical.
"""

from __future__ import annotations

import numpy as np


def ordered_sum(values) -> float:
    """Sum in value-sorted order; permutation-invariant by construction."""
    a = np.asarray(values, dtype=np.float64).ravel()
    if a.size == 0:
        return 0.0
    return float(np.sum(np.sort(a)))


def pop_mean(values) -> float:
    a = np.asarray(values, dtype=np.float64).ravel()
    if a.size == 0:
        raise ValueError("mean of empty sequence")
    return ordered_sum(a) / a.size


def pop_var(values) -> float:
    """Population variance (divide by n)."""
    a = np.asarray(values, dtype=np.float64).ravel()
    if a.size == 0:
        raise ValueError("variance of empty sequence")
    n = a.size
    s = ordered_sum(a)
    t = n * a - s
    return ordered_sum(t * t) / (float(n) ** 3)


def pop_std(values) -> float:
    """Population standard deviation (divide by n)."""
    return float(np.sqrt(pop_var(values)))
