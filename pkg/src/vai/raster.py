"""Decoded raster buffers and color-space conversions.

Every metric in the package operates on one of three immutable buffer
types: 8-bit RGB (`PixelBuffer`), unit-range grayscale doubles
(`GrayBuffer`), or HSV triples (`HsvBuffer`). All conversions are pure
functions, so buffers can be shared freely across worker processes.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import DecodeError, FormatError

_PNG_MAGIC = b"\x89PNG\r\n\x1a\n"
_JPEG_MAGIC = b"\xff\xd8\xff"

# BT.601 luma weights as integer numerators over 255000, so that gray values
# are exact rationals: gray = (299 R + 587 G + 114 B) / 255000.
_LUMA_R, _LUMA_G, _LUMA_B = 299, 587, 114
_LUMA_DEN = 255000.0


def _freeze(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class PixelBuffer:
    """8-bit RGB raster, row-major, shape (height, width, 3)."""

    samples: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.samples, dtype=np.uint8)
        if a.ndim != 3 or a.shape[2] != 3:
            raise ValueError(f"expected (h, w, 3) uint8 samples, got shape {a.shape}")
        if a.shape[0] < 1 or a.shape[1] < 1:
            raise ValueError("image must be at least 1x1")
        object.__setattr__(self, "samples", _freeze(np.ascontiguousarray(a)))

    @property
    def width(self) -> int:
        return self.samples.shape[1]

    @property
    def height(self) -> int:
        return self.samples.shape[0]

    @property
    def channels(self) -> int:
        return 3


@dataclass(frozen=True)
class GrayBuffer:
    """Grayscale raster of float64 values in [0, 1], shape (height, width)."""

    samples: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.samples, dtype=np.float64)
        if a.ndim != 2:
            raise ValueError(f"expected (h, w) samples, got shape {a.shape}")
        if a.shape[0] < 1 or a.shape[1] < 1:
            raise ValueError("image must be at least 1x1")
        if not np.all(np.isfinite(a)) or a.min() < 0.0 or a.max() > 1.0:
            raise ValueError("gray samples must be finite and within [0, 1]")
        object.__setattr__(self, "samples", _freeze(np.ascontiguousarray(a)))

    @property
    def width(self) -> int:
        return self.samples.shape[1]

    @property
    def height(self) -> int:
        return self.samples.shape[0]


@dataclass(frozen=True)
class HsvBuffer:
    """Per-pixel (h, s, v) with h in [0, 360) and s, v in [0, 1]."""

    samples: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.samples, dtype=np.float64)
        if a.ndim != 3 or a.shape[2] != 3:
            raise ValueError(f"expected (h, w, 3) samples, got shape {a.shape}")
        h, s, v = a[..., 0], a[..., 1], a[..., 2]
        if h.min() < 0.0 or h.max() >= 360.0:
            raise ValueError("hue must lie in [0, 360)")
        if s.min() < 0.0 or s.max() > 1.0 or v.min() < 0.0 or v.max() > 1.0:
            raise ValueError("saturation and value must lie in [0, 1]")
        object.__setattr__(self, "samples", _freeze(np.ascontiguousarray(a)))

    @property
    def width(self) -> int:
        return self.samples.shape[1]

    @property
    def height(self) -> int:
        return self.samples.shape[0]


def decode_image(data: bytes) -> PixelBuffer:
    """Decode a PNG or JPEG byte stream into an RGB PixelBuffer.

    Alpha, palette, and grayscale sources are converted to plain RGB; alpha
    is dropped without compositing. Raises FormatError for other formats and
    DecodeError (with the stream offset reached) for corrupt data.
    """
    if not (data.startswith(_PNG_MAGIC) or data.startswith(_JPEG_MAGIC)):
        # A strict prefix of a known magic is a truncated file, not an
        # unknown format.
        if data and (_PNG_MAGIC.startswith(data) or _JPEG_MAGIC.startswith(data)):
            raise DecodeError(f"truncated image header at byte offset {len(data)}")
        raise FormatError("unsupported image format: expected PNG or JPEG")
    stream = io.BytesIO(data)
    try:
        with Image.open(stream) as img:
            img.load()
            rgb = img.convert("RGB")
            arr = np.asarray(rgb, dtype=np.uint8)
    except (UnidentifiedImageError, OSError, SyntaxError, ValueError) as exc:
        raise DecodeError(
            f"cannot decode image near byte offset {stream.tell()}: {exc}"
        ) from exc
    return PixelBuffer(arr)


def load_image(path) -> PixelBuffer:
    """Read and decode an image file."""
    with open(path, "rb") as fh:
        return decode_image(fh.read())


def encode_png(img: PixelBuffer) -> bytes:
    """Encode a PixelBuffer as lossless PNG bytes."""
    out = io.BytesIO()
    Image.fromarray(img.samples, mode="RGB").save(out, format="PNG")
    return out.getvalue()


def to_grayscale(img: PixelBuffer) -> GrayBuffer:
    """BT.601 luma conversion to unit range.

    Computed with integer numerators so results are exact rationals:
    equal RGB channels map to exactly value/255 and white to exactly 1.0.
    """
    s = img.samples.astype(np.int64)
    num = _LUMA_R * s[..., 0] + _LUMA_G * s[..., 1] + _LUMA_B * s[..., 2]
    return GrayBuffer(num / _LUMA_DEN)


def to_hsv(img: PixelBuffer) -> HsvBuffer:
    """Standard hexcone RGB -> HSV; achromatic pixels get h = 0, s = 0."""
    rgb = img.samples.astype(np.float64) / 255.0
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    mx = np.max(rgb, axis=-1)
    mn = np.min(rgb, axis=-1)
    delta = mx - mn
    chromatic = delta > 0.0
    safe = np.where(chromatic, delta, 1.0)

    h = np.zeros_like(mx)
    is_r = chromatic & (mx == r)
    is_g = chromatic & ~is_r & (mx == g)
    is_b = chromatic & ~is_r & ~is_g
    h = np.where(is_r, ((g - b) / safe) % 6.0, h)
    h = np.where(is_g, (b - r) / safe + 2.0, h)
    h = np.where(is_b, (r - g) / safe + 4.0, h)
    h = h * 60.0
    h = np.where(h >= 360.0, h - 360.0, h)

    s = np.where(mx > 0.0, delta / np.where(mx > 0.0, mx, 1.0), 0.0)
    return HsvBuffer(np.stack([h, s, mx], axis=-1))


def resize_bilinear(img: PixelBuffer, width: int, height: int) -> PixelBuffer:
    """Bilinear resize with half-pixel centers and round-half-up output.

    Resizing to the source dimensions reproduces the buffer bit-exactly,
    and constant images stay constant at any size (nested-lerp form keeps
    interpolation of equal corners exact).
    """
    if width < 1 or height < 1:
        raise ValueError(f"target dimensions must be >= 1, got {width}x{height}")
    if width == img.width and height == img.height:
        return PixelBuffer(img.samples.copy())

    src = img.samples.astype(np.float64)
    sx = (np.arange(width, dtype=np.float64) + 0.5) * (img.width / width) - 0.5
    sy = (np.arange(height, dtype=np.float64) + 0.5) * (img.height / height) - 0.5
    x0 = np.clip(np.floor(sx).astype(np.int64), 0, img.width - 1)
    y0 = np.clip(np.floor(sy).astype(np.int64), 0, img.height - 1)
    x1 = np.minimum(x0 + 1, img.width - 1)
    y1 = np.minimum(y0 + 1, img.height - 1)
    wx = np.clip(sx - x0, 0.0, 1.0)[None, :, None]
    wy = np.clip(sy - y0, 0.0, 1.0)[:, None, None]

    tl = src[np.ix_(y0, x0)]
    tr = src[np.ix_(y0, x1)]
    bl = src[np.ix_(y1, x0)]
    br = src[np.ix_(y1, x1)]
    top = tl + (tr - tl) * wx
    bot = bl + (br - bl) * wx
    out = top + (bot - top) * wy

    out = np.clip(np.floor(out + 0.5), 0.0, 255.0).astype(np.uint8)
    return PixelBuffer(out)


def resize_longest_side(img: PixelBuffer, target: int) -> PixelBuffer:
    """Scale so the longest side equals target, preserving aspect ratio."""
    if target < 1:
        raise ValueError(f"target must be >= 1, got {target}")
    long_side = max(img.width, img.height)
    if long_side == target:
        return img
    scale = target / long_side
    w = max(1, int(round(img.width * scale)))
    h = max(1, int(round(img.height * scale)))
    if img.width >= img.height:
        w = target
    else:
        h = target
    return resize_bilinear(img, w, h)
