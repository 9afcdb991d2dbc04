"""From-scratch 2D convolution and the Gaussian / Sobel / Laplacian / Canny
pipelines the metric formulas are built on.

Accumulation order inside every convolution is fixed and symmetric: within
each kernel row, mirror column pairs are combined first (summed for
symmetric kernels, differenced for antisymmetric ones), then rows are added
top to bottom. IEEE addition is commutative, so horizontally flipping the
input flips symmetric outputs and negates antisymmetric ones bit-exactly,
not just approximately. The metric invariance tests rely on this.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError

_DEG = 180.0 / math.pi


def _field(img) -> np.ndarray:
    """Accept a GrayBuffer or a bare 2D array."""
    a = getattr(img, "samples", img)
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError(f"expected a 2D field, got shape {a.shape}")
    return a


@dataclass(frozen=True)
class Kernel:
    """Square convolution kernel with odd size."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValueError(f"kernel must be square, got shape {w.shape}")
        if w.shape[0] % 2 == 0:
            raise ValueError(f"kernel size must be odd, got {w.shape[0]}")
        w = np.ascontiguousarray(w)
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)

    @property
    def size(self) -> int:
        return self.weights.shape[0]


@dataclass(frozen=True)
class GradientField:
    """Per-pixel Sobel responses over the valid interior (source - 2)."""

    gx: np.ndarray
    gy: np.ndarray

    @property
    def width(self) -> int:
        return self.gx.shape[1]

    @property
    def height(self) -> int:
        return self.gx.shape[0]


@dataclass(frozen=True)
class EdgeMap:
    """Binary edge marks at source dimensions; non-valid border is 0."""

    marks: np.ndarray

    @property
    def width(self) -> int:
        return self.marks.shape[1]

    @property
    def height(self) -> int:
        return self.marks.shape[0]


def default_kernel_size(sigma: float) -> int:
    """Size rule: 2*ceil(3*sigma) + 1."""
    return 2 * math.ceil(3.0 * sigma) + 1


def gaussian_kernel(sigma: float, size: int | None = None) -> Kernel:
    """Sampled 2D Gaussian, normalized to sum 1."""
    if sigma <= 0:
        raise ValueError(f"sigma must be > 0, got {sigma}")
    if size is None:
        size = default_kernel_size(sigma)
    if size < 1 or size % 2 == 0:
        raise ValueError(f"kernel size must be a positive odd integer, got {size}")
    half = size // 2
    r = np.arange(-half, half + 1, dtype=np.float64)
    yy, xx = np.meshgrid(r, r, indexing="ij")
    w = np.exp(-(xx * xx + yy * yy) / (2.0 * sigma * sigma))
    return Kernel(w / np.sum(w))


def _accumulate(padded: np.ndarray, weights: np.ndarray, oh: int, ow: int) -> np.ndarray:
    """Correlation core with the mirror-pair accumulation order.

    `padded` must already include whatever border the caller wants; output
    is the oh x ow field of window sums anchored at the top-left.
    """
    k = weights.shape[0]
    half = k // 2
    out = np.zeros((oh, ow), dtype=np.float64)
    for r in range(k):
        band = padded[r : r + oh]
        row = np.zeros((oh, ow), dtype=np.float64)
        for c in range(half):
            cc = k - 1 - c
            wa, wb = weights[r, c], weights[r, cc]
            a = band[:, c : c + ow]
            b = band[:, cc : cc + ow]
            if wa == wb:
                row += (a + b) * wa
            elif wa == -wb:
                row += (b - a) * wb
            else:
                row += a * wa + b * wb
        row += band[:, half : half + ow] * weights[r, half]
        out += row
    return out


def convolve_valid(img, k: Kernel) -> np.ndarray:
    """Valid-region correlation, no padding; output dims = dims - size + 1."""
    a = _field(img)
    if a.shape[0] < k.size or a.shape[1] < k.size:
        raise DimensionError(
            f"image {a.shape[1]}x{a.shape[0]} smaller than kernel size {k.size}"
        )
    oh = a.shape[0] - k.size + 1
    ow = a.shape[1] - k.size + 1
    return _accumulate(a, k.weights, oh, ow)


def _replicate_pad(a: np.ndarray, half: int) -> np.ndarray:
    return np.pad(a, half, mode="edge")


def convolve_replicate(img, k: Kernel) -> np.ndarray:
    """Replicate-padded correlation; output dims = input dims."""
    a = _field(img)
    half = k.size // 2
    return _accumulate(_replicate_pad(a, half), k.weights, a.shape[0], a.shape[1])


def gaussian_blur(img, sigma: float, size: int | None = None) -> np.ndarray:
    """Replicate-padded Gaussian blur, clamped into the source value range.

    The clamp only trims float dust from the not-exactly-1 kernel sum, so
    blurring can never widen the range: min(blur) >= min(I), max <= max(I),
    and constants stay bit-exact constants.
    """
    a = _field(img)
    out = convolve_replicate(a, gaussian_kernel(sigma, size))
    return np.clip(out, a.min(), a.max())


SOBEL_X = Kernel([[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]])
SOBEL_Y = Kernel([[-1.0, -2.0, -1.0], [0.0, 0.0, 0.0], [1.0, 2.0, 1.0]])


def sobel_gradients(img) -> GradientField:
    """Valid-region Sobel gx/gy; the gy kernel is the transpose of gx.

    Evaluated difference-first: gx = (d0 + d2) + 2*d1 over the per-row
    right-minus-left differences d_r (gy the same over bottom-minus-top
    column differences). Transposing the input then swaps the two fields
    bit-exactly, and flipping negates gx bit-exactly, because the d_r of
    one field are literally the e_c of the other.
    """
    a = _field(img)
    if a.shape[0] < 3 or a.shape[1] < 3:
        raise DimensionError(
            f"Sobel needs at least 3x3, got {a.shape[1]}x{a.shape[0]}"
        )
    d = [a[r : a.shape[0] - 2 + r, 2:] - a[r : a.shape[0] - 2 + r, :-2] for r in range(3)]
    gx = (d[0] + d[2]) + 2.0 * d[1]
    e = [a[2:, c : a.shape[1] - 2 + c] - a[:-2, c : a.shape[1] - 2 + c] for c in range(3)]
    gy = (e[0] + e[2]) + 2.0 * e[1]
    gx.flags.writeable = False
    gy.flags.writeable = False
    return GradientField(gx=gx, gy=gy)


def laplacian(img) -> np.ndarray:
    """4-neighbor Laplacian [[0,1,0],[1,-4,1],[0,1,0]], replicate padded.

    Written as ((up+down) + (left+right)) - 4*center so the response field
    mirrors and transposes bit-exactly (commutativity of the two pair sums),
    which the smoothness metric's invariance depends on.
    """
    a = _field(img)
    if a.shape[0] < 3 or a.shape[1] < 3:
        raise DimensionError(
            f"Laplacian needs at least 3x3, got {a.shape[1]}x{a.shape[0]}"
        )
    p = _replicate_pad(a, 1)
    up = p[:-2, 1:-1]
    down = p[2:, 1:-1]
    left = p[1:-1, :-2]
    right = p[1:-1, 2:]
    return (up + down) + (left + right) - 4.0 * a


def gradient_magnitude(gf: GradientField) -> np.ndarray:
    return np.sqrt(gf.gx * gf.gx + gf.gy * gf.gy)


# NMS comparison offsets (dy, dx) per quantized direction bin; the positive
# offset is compared with >=, the negative with >, so exactly one pixel of a
# two-wide plateau survives.
_NMS_OFFSETS = {
    0: (0, 1),  # gradient ~ horizontal -> compare east/west
    1: (1, 1),  # ~ 45 degrees
    2: (1, 0),  # ~ vertical -> north/south
    3: (1, -1),  # ~ 135 degrees
}


def canny(img, sigma: float = 1.4, low: float = 0.1, high: float = 0.3) -> EdgeMap:
    """Canny pipeline with relative thresholds.

    Gaussian smooth -> Sobel -> magnitude + direction quantized to 4 bins ->
    non-maximum suppression -> double threshold with low/high as fractions
    of the maximum pre-suppression magnitude -> 8-connected hysteresis.
    Returns a binary map at source dimensions with a zero border.
    """
    if low < 0 or low > high:
        raise ValueError(f"need 0 <= low <= high, got low={low} high={high}")
    a = _field(img)
    if a.shape[0] < 5 or a.shape[1] < 5:
        raise DimensionError(
            f"Canny needs at least 5x5, got {a.shape[1]}x{a.shape[0]}"
        )

    smoothed = gaussian_blur(a, sigma)
    gf = sobel_gradients(smoothed)
    mag = gradient_magnitude(gf)
    mmax = float(mag.max())
    t_low = low * mmax
    t_high = high * mmax

    # Direction bins over [0, 180): 0 / 45 / 90 / 135 degrees.
    theta = np.degrees(np.arctan2(gf.gy, gf.gx)) % 180.0
    bins = np.zeros(theta.shape, dtype=np.int8)
    bins[(theta >= 22.5) & (theta < 67.5)] = 1
    bins[(theta >= 67.5) & (theta < 112.5)] = 2
    bins[(theta >= 112.5) & (theta < 157.5)] = 3

    # NMS over the interior of the gradient field (every pixel with all
    # eight magnitude neighbors available).
    core = mag[1:-1, 1:-1]
    keep = np.zeros(core.shape, dtype=bool)
    cbins = bins[1:-1, 1:-1]
    for b, (dy, dx) in _NMS_OFFSETS.items():
        pos = mag[1 + dy : mag.shape[0] - 1 + dy, 1 + dx : mag.shape[1] - 1 + dx]
        neg = mag[1 - dy : mag.shape[0] - 1 - dy, 1 - dx : mag.shape[1] - 1 - dx]
        keep |= (cbins == b) & (core >= pos) & (core > neg)

    strong = keep & (core > t_high)
    weak = keep & (core > t_low)

    # Hysteresis: grow the strong set through weak pixels, 8-connected.
    visited = strong.copy()
    frontier = strong
    while frontier.any():
        nbr = np.zeros(core.shape, dtype=bool)
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                if dy == 0 and dx == 0:
                    continue
                src = frontier[
                    max(0, -dy) : frontier.shape[0] - max(0, dy),
                    max(0, -dx) : frontier.shape[1] - max(0, dx),
                ]
                nbr[
                    max(0, dy) : nbr.shape[0] - max(0, -dy),
                    max(0, dx) : nbr.shape[1] - max(0, -dx),
                ] |= src
        frontier = weak & nbr & ~visited
        visited |= frontier

    marks = np.zeros(a.shape, dtype=np.uint8)
    marks[2:-2, 2:-2] = visited
    marks.flags.writeable = False
    return EdgeMap(marks=marks)
