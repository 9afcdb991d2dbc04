import math

import numpy as np
import pytest

import vai
from vai import (
    METRIC_ABBREV,
    METRIC_FIELDS,
    EdgeMap,
    EmptyInputError,
    GrayBuffer,
    HsvBuffer,
    MetricConfig,
    MetricVector,
    PixelBuffer,
    color_distribution,
    compute_all,
    contextual_relevance,
    image_contrast,
    image_sharpness,
    image_smoothness,
    object_coherence,
    texture_complexity,
    to_hsv,
)
from vai.metrics import gaussian_kernel
from conftest import dyadic_field, random_rgb
import oracles


def gray(a):
    return GrayBuffer(np.asarray(a, dtype=np.float64))


def checkerboard(h, w, lo=0.0, hi=1.0):
    y, x = np.mgrid[0:h, 0:w]
    return gray(np.where((x + y) % 2 == 0, lo, hi))


# ---------------------------------------------------------------------------
# texture complexity


def test_texture_constant_is_nearly_zero():
    got = texture_complexity(gray(np.full((64, 64), 0.5)))
    assert abs(got) <= 2e-6
    assert got == 62 * 62 * -math.log2(1.0 + 1e-6) / (62 * 62)


def test_texture_uniform_noise_exceeds_4_bits(rng):
    img = GrayBuffer(rng.random((256, 256)))
    assert texture_complexity(img) > 4.0


def test_texture_checkerboard_two_codes():
    img = checkerboard(16, 16)
    codes = vai.lbp_code_map(img).codes
    assert set(np.unique(codes)) == {170, 255}
    assert abs(texture_complexity(img) - 1.0) <= 1e-4


# ---------------------------------------------------------------------------
# color distribution


def test_color_distribution_uniform_hits_every_bin():
    # one pixel per bin -> perfectly flat histogram -> zero spread
    cells = []
    for ih in range(8):
        for isat in range(8):
            for iv in range(8):
                cells.append(((ih + 0.5) * 45.0, (isat + 0.5) / 8, (iv + 0.5) / 8))
    hsv = HsvBuffer(np.array(cells).reshape(8, 64, 3))
    assert color_distribution(hsv) == 0.0


def test_color_distribution_single_color_closed_form():
    img = PixelBuffer(np.full((16, 16, 3), (255, 0, 0), dtype=np.uint8))
    got = color_distribution(to_hsv(img))
    b = 512
    want = math.sqrt(((1 - 1 / b) ** 2 + (b - 1) / b**2) / b)
    assert abs(got - want) <= 1e-15
    assert got == math.sqrt(511) / 512


def test_color_distribution_two_color_closed_form():
    half = np.zeros((4, 8, 3), dtype=np.uint8)
    half[:, :4] = (255, 0, 0)
    half[:, 4:] = (0, 0, 255)
    got = color_distribution(to_hsv(PixelBuffer(half)))
    b = 512
    var = (2 * (0.5 - 1 / b) ** 2 + (b - 2) * (1 / b) ** 2) / b
    assert abs(got - math.sqrt(var)) <= 1e-15


def test_color_distribution_matches_naive(rng):
    for _ in range(5):
        img = random_rgb(rng, 12, 12)
        got = color_distribution(to_hsv(img))
        want = oracles.naive_color_distribution(
            [[tuple(px) for px in row] for row in img.samples]
        )
        assert abs(got - want) <= 1e-12


def test_color_distribution_rejects_empty():
    with pytest.raises((EmptyInputError, ValueError)):
        color_distribution(np.zeros((0, 0, 3)))


# ---------------------------------------------------------------------------
# object coherence


def test_object_coherence_constant_is_zero():
    assert object_coherence(gray(np.full((32, 32), 0.25))) == 0.0


def test_object_coherence_is_marked_fraction(monkeypatch):
    # seam: with every pixel marked the ratio definition must give exactly 1
    marks = np.ones((10, 10), dtype=np.uint8)
    monkeypatch.setattr(vai.metrics, "canny", lambda img, s, lo, hi: EdgeMap(marks))
    assert object_coherence(gray(np.zeros((10, 10)))) == 1.0


def test_object_coherence_vertical_step():
    field = np.zeros((64, 64))
    field[:, 32:] = 1.0
    got = object_coherence(gray(field))
    assert got == 60 / 4096
    assert abs(got - 60 / 4096) <= 64 / 4096


# ---------------------------------------------------------------------------
# contextual relevance


def test_contextual_relevance_constant_zero():
    assert contextual_relevance(gray(np.full((9, 9), 0.7))) == 0.0


def test_contextual_relevance_ramp_zero():
    x = np.tile(np.arange(12) / 64.0, (9, 1))
    assert contextual_relevance(gray(x)) == 0.0


def test_contextual_relevance_half_ramp_composite():
    field = np.zeros((8, 8))
    field[:, 4:] = (np.arange(4) + 1) / 16.0
    got = contextual_relevance(gray(field))
    want = oracles.naive_contextual_relevance(oracles.to_lists(field))
    assert abs(got - want) <= 1e-12
    assert got > 0.0


def test_contextual_relevance_matches_naive(rng):
    for _ in range(5):
        img = dyadic_field(rng, 16, 16)
        want = oracles.naive_contextual_relevance(oracles.to_lists(img.samples))
        assert abs(contextual_relevance(img) - want) <= 1e-12


# ---------------------------------------------------------------------------
# smoothness


def test_smoothness_constant_is_one():
    assert image_smoothness(gray(np.full((7, 7), 0.2))) == 1.0


def test_smoothness_ramp_is_one():
    x = np.tile(np.arange(10) / 32.0, (10, 1))
    assert image_smoothness(gray(x)) == 1.0


def test_smoothness_spike_hand_value():
    # 5x5 zero field with center 1: interior Laplacian holds one -4 and four
    # +1 responses among nine pixels, var = 20/9, so 1/(1 + 20/9) = 9/29
    field = np.zeros((5, 5))
    field[2, 2] = 1.0
    assert image_smoothness(gray(field)) == 9 / 29


def test_smoothness_matches_naive(rng):
    for _ in range(5):
        img = dyadic_field(rng, 12, 12)
        want = oracles.naive_smoothness(oracles.to_lists(img.samples))
        assert abs(image_smoothness(img) - want) <= 1e-12


# ---------------------------------------------------------------------------
# sharpness


def test_sharpness_constant_is_zero():
    assert image_sharpness(gray(np.full((8, 8), 0.6))) == 0.0


def test_sharpness_spike_is_one_minus_center_weight():
    field = np.zeros((7, 7))
    field[3, 3] = 1.0
    w_center = gaussian_kernel(1.0, 7).weights[3, 3]
    assert abs(image_sharpness(gray(field)) - (1.0 - w_center)) <= 1e-12


def test_sharpness_step_beats_smoothed_step():
    hard = np.zeros((9, 16))
    hard[:, 8:] = 1.0
    soft = np.tile(np.clip((np.arange(16) - 4) / 8.0, 0.0, 1.0), (9, 1))
    assert image_sharpness(gray(hard)) > image_sharpness(gray(soft))
    assert 0.0 < image_sharpness(gray(hard)) < 1.0


def test_sharpness_matches_naive(rng):
    for _ in range(5):
        img = dyadic_field(rng, 14, 14)
        want = oracles.naive_sharpness(oracles.to_lists(img.samples))
        assert abs(image_sharpness(img) - want) <= 1e-12


# ---------------------------------------------------------------------------
# contrast


def test_contrast_constant_is_zero():
    assert image_contrast(gray(np.full((6, 6), 0.9))) == 0.0


def test_contrast_checkerboard_is_half_exactly():
    assert image_contrast(checkerboard(8, 8)) == 0.5


def test_contrast_three_level_hand_variance():
    vals = np.array([0.0, 0.5, 1.0] * 12).reshape(6, 6)
    got = image_contrast(gray(vals))
    assert abs(got - math.sqrt(1 / 6)) <= 1e-15


def test_contrast_capped_at_half(rng):
    for _ in range(10):
        assert image_contrast(dyadic_field(rng, 9, 9)) <= 0.5


def test_contrast_matches_naive(rng):
    img = dyadic_field(rng, 20, 20)
    want = oracles.naive_contrast(oracles.to_lists(img.samples))
    assert abs(image_contrast(img) - want) <= 1e-12


# ---------------------------------------------------------------------------
# invariances


def flip_g(img):
    return GrayBuffer(img.samples[:, ::-1].copy())


def test_flip_exact_invariances(rng):
    for _ in range(5):
        img = dyadic_field(rng, 24, 24)
        f = flip_g(img)
        assert image_contrast(f) == image_contrast(img)
        assert image_smoothness(f) == image_smoothness(img)
        assert texture_complexity(f) == texture_complexity(img)
        assert contextual_relevance(f) == contextual_relevance(img)
        assert image_sharpness(f) == image_sharpness(img)


def test_flip_color_distribution_exact(rng):
    for _ in range(5):
        img = random_rgb(rng, 16, 16)
        flipped = PixelBuffer(img.samples[:, ::-1].copy())
        assert color_distribution(to_hsv(flipped)) == color_distribution(to_hsv(img))


def test_flip_object_coherence_within_one_percent(rng):
    for _ in range(5):
        img = dyadic_field(rng, 32, 32)
        a, b = object_coherence(img), object_coherence(flip_g(img))
        assert abs(a - b) <= 0.01 * max(a, b, 1 / img.samples.size)


def test_inversion_exact_invariances(rng):
    for _ in range(5):
        img = dyadic_field(rng, 24, 24)
        inv = GrayBuffer(1.0 - img.samples)
        assert image_contrast(inv) == image_contrast(img)
        assert contextual_relevance(inv) == contextual_relevance(img)
        assert image_smoothness(inv) == image_smoothness(img)
        assert image_sharpness(inv) == image_sharpness(img)


# ---------------------------------------------------------------------------
# brute-force agreement on random images


def test_all_metrics_match_naive_oracles(rng):
    for _ in range(3):
        img = dyadic_field(rng, 32, 32)
        g = oracles.to_lists(img.samples)
        assert abs(texture_complexity(img) - oracles.naive_texture_complexity(g)) <= 1e-9
        assert abs(contextual_relevance(img) - oracles.naive_contextual_relevance(g)) <= 1e-9
        assert abs(image_smoothness(img) - oracles.naive_smoothness(g)) <= 1e-9
        assert abs(image_sharpness(img) - oracles.naive_sharpness(g)) <= 1e-9
        assert abs(image_contrast(img) - oracles.naive_contrast(g)) <= 1e-9
        assert object_coherence(img) == oracles.naive_object_coherence(g)


# ---------------------------------------------------------------------------
# MetricVector / MetricConfig


def test_metric_vector_field_order():
    assert METRIC_FIELDS == (
        "texture_complexity",
        "color_distribution",
        "object_coherence",
        "contextual_relevance",
        "smoothness",
        "sharpness",
        "contrast",
    )
    assert METRIC_ABBREV == ("TC", "CDC", "OC", "CR", "IS", "ISH", "IC")


def test_metric_vector_rejects_non_finite():
    with pytest.raises(ValueError):
        MetricVector(0.0, 0.0, 0.0, math.nan, 0.0, 0.0, 0.0)


def test_metric_config_validation():
    MetricConfig()
    with pytest.raises(ValueError):
        MetricConfig(lbp_bins=100)
    with pytest.raises(ValueError):
        MetricConfig(resize_target=4)
    with pytest.raises(ValueError):
        MetricConfig(canny_low=0.5, canny_high=0.2)


# ---------------------------------------------------------------------------
# compute_all


def test_compute_all_constant_composition():
    img = PixelBuffer(np.full((64, 64, 3), 128, dtype=np.uint8))
    v = compute_all(img, MetricConfig(resize_target=64))
    assert v.texture_complexity == -math.log2(1.0 + 1e-6)
    assert v.color_distribution == math.sqrt(511) / 512
    assert v.object_coherence == 0.0
    assert v.contextual_relevance == 0.0
    assert v.smoothness == 1.0
    assert v.sharpness == 0.0
    assert v.contrast == 0.0


def test_compute_all_deterministic(rng):
    img = random_rgb(rng, 80, 60)
    cfg = MetricConfig()
    assert compute_all(img, cfg) == compute_all(img, cfg)


def test_compute_all_applies_resize(rng):
    from vai import resize_longest_side

    img = random_rgb(rng, 40, 100)
    cfg = MetricConfig(resize_target=50)
    direct = compute_all(resize_longest_side(img, 50), MetricConfig(resize_target=50))
    assert compute_all(img, cfg) == direct


def test_compute_all_transpose_invariants(rng):
    img = random_rgb(rng, 48, 48)
    t = PixelBuffer(np.transpose(img.samples, (1, 0, 2)).copy())
    cfg = MetricConfig(resize_target=48)
    a, b = compute_all(img, cfg), compute_all(t, cfg)
    assert b.contrast == a.contrast
    assert b.color_distribution == a.color_distribution
    assert b.smoothness == a.smoothness
    assert b.texture_complexity == a.texture_complexity


def test_compute_all_finite_on_fuzz(rng):
    cfg = MetricConfig(resize_target=32)
    for _ in range(10):
        v = compute_all(random_rgb(rng, int(rng.integers(8, 64)), int(rng.integers(8, 64))), cfg)
        assert all(math.isfinite(x) for x in v.as_tuple())
        assert 0.0 <= v.object_coherence <= 1.0
        assert 0.0 < v.smoothness <= 1.0
        assert 0.0 <= v.sharpness <= 1.0
        assert 0.0 <= v.contrast <= 0.5
