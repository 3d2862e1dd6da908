"""Structural similarity scoring and the visual diff image."""

import numpy as np
import pytest

from anomdet.errors import ShapeError
from anomdet.pipelines import ssim, ssim_diff_image


def rand_img(seed, h=24, w=24):
    return np.random.default_rng(seed).uniform(0, 1, (h, w)).astype(np.float64)


def test_identical_images_score_exactly_one():
    x = rand_img(0)
    score, smap = ssim(x, x)
    assert score == 1.0  # exact, not approximate
    assert np.all(smap == 1.0)


def test_symmetry():
    a, b = rand_img(1), rand_img(2)
    sa, _ = ssim(a, b)
    sb, _ = ssim(b, a)
    assert sa == sb


def test_constant_images_luminance_term_only():
    # mu_a=0, mu_b=1, zero variance: score = C1 / (1 + C1) with C1 = 1e-4
    a = np.zeros((16, 16))
    b = np.ones((16, 16))
    score, _ = ssim(a, b)
    np.testing.assert_allclose(score, 1e-4 / (1 + 1e-4), rtol=1e-12)


def test_equal_constants_score_one():
    a = np.full((16, 16), 0.42)
    score, _ = ssim(a, a.copy())
    assert score == 1.0


def test_score_bounded_above_by_one():
    for s in range(20):
        a, b = rand_img(s), rand_img(s + 100)
        score, smap = ssim(a, b)
        assert score <= 1.0
        assert np.all(smap <= 1.0)


def test_noise_lowers_score():
    a = rand_img(3)
    rng = np.random.default_rng(4)
    b = np.clip(a + rng.normal(0, 0.2, a.shape), 0, 1)
    score, _ = ssim(a, b)
    assert score < 0.99


def test_local_defect_shows_in_map():
    a = np.full((32, 32), 0.6)
    b = a.copy()
    b[8:12, 8:12] = 0.05  # small dark patch
    _, smap = ssim(a, b)
    # windows that never touch the patch score 1; near windows dip hard
    assert smap[0, 0] == 1.0  # spans rows/cols 0..7, patch starts at 8
    # far corner: patch terms cancel only approximately in the prefix sums
    np.testing.assert_allclose(smap[-1, -1], 1.0, rtol=1e-9)
    assert smap.min() < 0.5


def test_accepts_nchw_singletons():
    x = rand_img(5)
    score, _ = ssim(x[None, None], x[None, None])
    assert score == 1.0


def test_too_small_image_rejected():
    with pytest.raises(ShapeError, match="window"):
        ssim(np.zeros((4, 4)), np.zeros((4, 4)))


def test_shape_mismatch_rejected():
    with pytest.raises(ShapeError, match="shape"):
        ssim(np.zeros((16, 16)), np.zeros((16, 18)))


def test_diff_image_range_and_identity():
    a, b = rand_img(6), rand_img(7)
    _, smap = ssim(a, b)
    diff = ssim_diff_image(smap)
    assert diff.min() >= 0.0 and diff.max() <= 1.0
    # identical inputs -> map of ones -> diff of zeros
    _, ones_map = ssim(a, a)
    np.testing.assert_array_equal(ssim_diff_image(ones_map), 0.0)
