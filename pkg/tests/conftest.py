import numpy as np
import pytest

from vai import GrayBuffer, PixelBuffer, encode_png


def dyadic_field(rng, h, w):
    """Random gray field whose samples are exact multiples of 1/256.

    Dyadic values negate exactly in binary floating point, which the
    mirror/inversion exactness tests rely on.
    """
    return GrayBuffer(rng.integers(0, 257, (h, w)).astype(np.float64) / 256.0)


def random_rgb(rng, h, w):
    return PixelBuffer(rng.integers(0, 256, (h, w, 3), dtype=np.uint8))


@pytest.fixture
def rng():
    return np.random.default_rng(991)


@pytest.fixture
def write_png(tmp_path):
    """Factory writing a PixelBuffer to <tmp_path>/<name> and returning the path."""

    def _write(name, img):
        p = tmp_path / name
        p.write_bytes(encode_png(img))
        return p

    return _write
