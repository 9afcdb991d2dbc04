"""The seven per-image metrics and their composition into a MetricVector.

Conventions pinned here because the formulas leave them open: all variance
and std statistics are population (divide by N); gradient statistics run on
the valid interior only, which makes affine-field oracles exact; the HSV
histogram uses 8 uniform bins per axis (512 total) by default.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, EmptyInputError
from .filters import (
    canny,
    default_kernel_size,
    gaussian_kernel,
    gradient_magnitude,
    laplacian,
    sobel_gradients,
)
from .raster import PixelBuffer, resize_longest_side, to_grayscale, to_hsv
from .stats import pop_std, pop_var
from .texture import entropy, lbp_code_map, normalized_histogram

# Abbreviations used in figure labels, in canonical metric order.
METRIC_FIELDS = (
    "texture_complexity",
    "color_distribution",
    "object_coherence",
    "contextual_relevance",
    "smoothness",
    "sharpness",
    "contrast",
)
METRIC_ABBREV = ("TC", "CDC", "OC", "CR", "IS", "ISH", "IC")


@dataclass(frozen=True)
class MetricVector:
    texture_complexity: float
    color_distribution: float
    object_coherence: float
    contextual_relevance: float
    smoothness: float
    sharpness: float
    contrast: float

    def __post_init__(self):
        for name in METRIC_FIELDS:
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"{name} is not finite: {v!r}")

    def as_tuple(self) -> tuple:
        return tuple(getattr(self, name) for name in METRIC_FIELDS)

    def as_dict(self) -> dict:
        return {name: getattr(self, name) for name in METRIC_FIELDS}


@dataclass(frozen=True)
class MetricConfig:
    """Every knob that affects metric values; serialized into reports."""

    resize_target: int = 512
    hsv_bins: int = 8  # per axis; total bins = hsv_bins**3
    lbp_bins: int = 256
    blur_sigma: float = 1.0  # sharpness blur
    canny_sigma: float = 1.4
    canny_low: float = 0.1
    canny_high: float = 0.3

    def __post_init__(self):
        if self.resize_target < 8:
            raise ValueError(f"resize_target must be >= 8, got {self.resize_target}")
        if self.hsv_bins < 1:
            raise ValueError(f"hsv_bins must be >= 1, got {self.hsv_bins}")
        if self.lbp_bins < 256 or self.lbp_bins & (self.lbp_bins - 1):
            raise ValueError("lbp_bins must be a power of two >= 256")
        if self.blur_sigma <= 0 or self.canny_sigma <= 0:
            raise ValueError("sigmas must be > 0")
        if not (0 <= self.canny_low <= self.canny_high):
            raise ValueError("need 0 <= canny_low <= canny_high")

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


def texture_complexity(img, bins: int = 256, epsilon: float = 1e-6) -> float:
    """Entropy of the normalized LBP histogram, in bits."""
    return entropy(normalized_histogram(lbp_code_map(img), bins), epsilon)


def color_distribution(img, bins_per_axis: int = 8) -> float:
    """Population std over all bins of the normalized 3D HSV histogram."""
    hsv = getattr(img, "samples", img)
    hsv = np.asarray(hsv, dtype=np.float64)
    if hsv.ndim != 3 or hsv.shape[2] != 3:
        raise ValueError(f"expected (h, w, 3) HSV samples, got shape {hsv.shape}")
    n = hsv.shape[0] * hsv.shape[1]
    if n == 0:
        raise EmptyInputError("empty image")
    b = bins_per_axis
    ih = np.clip((hsv[..., 0] / 360.0 * b).astype(np.int64), 0, b - 1)
    isat = np.clip((hsv[..., 1] * b).astype(np.int64), 0, b - 1)
    iv = np.clip((hsv[..., 2] * b).astype(np.int64), 0, b - 1)
    flat = (ih * b + isat) * b + iv
    counts = np.bincount(flat.ravel(), minlength=b * b * b)
    return pop_std(counts / float(n))


def object_coherence(
    img, sigma: float = 1.4, low: float = 0.1, high: float = 0.3
) -> float:
    """Canny edge fraction: marked pixels over width*height."""
    marks = canny(img, sigma, low, high).marks
    return float(int(marks.sum()) / marks.size)


def contextual_relevance(img) -> float:
    """Population variance of Sobel gradient magnitude over the interior."""
    return pop_var(gradient_magnitude(sobel_gradients(img)))


def image_smoothness(img) -> float:
    """1 / (1 + var(Laplacian)), variance over the interior responses."""
    lap = laplacian(img)
    return 1.0 / (1.0 + pop_var(lap[1:-1, 1:-1]))


def image_sharpness(img, sigma: float = 1.0, size: int | None = None) -> float:
    """Max |I - gaussian_blur(I)| with replicate padding.

    Evaluated in the high-pass form sum_k w_k * (center - neighbor_k), which
    is the same quantity (kernel sums to 1) but keeps the response an exact
    odd function of the image: flipping mirrors it and inverting negates it
    bit-for-bit, so the max-abs is exactly invariant under both.
    """
    a = getattr(img, "samples", img)
    a = np.asarray(a, dtype=np.float64)
    k = gaussian_kernel(sigma, size)
    if a.shape[0] < k.size or a.shape[1] < k.size:
        raise DimensionError(
            f"sharpness needs at least {k.size}x{k.size}, got shape {a.shape}"
        )
    half = k.size // 2
    w = k.weights
    p = np.pad(a, half, mode="edge")
    h, wd = a.shape
    out = np.zeros(a.shape, dtype=np.float64)
    for r in range(k.size):
        band = p[r : r + h]
        row = np.zeros(a.shape, dtype=np.float64)
        for c in range(half):
            cc = k.size - 1 - c
            row += ((a - band[:, c : c + wd]) + (a - band[:, cc : cc + wd])) * w[r, c]
        row += (a - band[:, half : half + wd]) * w[r, half]
        out += row
    return min(float(np.max(np.abs(out))), 1.0)


def image_contrast(img) -> float:
    """Population std of the grayscale samples; 0.5 is the attainable max."""
    a = getattr(img, "samples", img)
    return min(pop_std(a), 0.5)


def compute_all(img: PixelBuffer, cfg: MetricConfig = MetricConfig()) -> MetricVector:
    """Resize to the analysis resolution, then evaluate all seven metrics."""
    resized = resize_longest_side(img, cfg.resize_target)
    gray = to_grayscale(resized)
    hsv = to_hsv(resized)
    return MetricVector(
        texture_complexity=texture_complexity(gray, cfg.lbp_bins),
        color_distribution=color_distribution(hsv, cfg.hsv_bins),
        object_coherence=object_coherence(
            gray, cfg.canny_sigma, cfg.canny_low, cfg.canny_high
        ),
        contextual_relevance=contextual_relevance(gray),
        smoothness=image_smoothness(gray),
        sharpness=image_sharpness(gray, cfg.blur_sigma),
        contrast=image_contrast(gray),
    )
