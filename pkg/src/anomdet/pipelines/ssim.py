"""Structural similarity over uniform 8x8 sliding windows (stride 1).

Window statistics come from integral images (2-D cumulative sums), so a
whole map costs four adds per window. Statistics are population moments
(divide by the window area). With the default constants K1=0.01, K2=0.03
on unit dynamic range, C1 = 1e-4 and C2 = 9e-4.

ssim(x, x) is exactly 1.0: both inputs go through the same code path, so
numerator and denominator of every window are computed as bitwise equal
expressions (2*mu*mu == mu*mu + mu*mu in IEEE arithmetic).
"""

from __future__ import annotations

import numpy as np

from ..errors import ShapeError

WINDOW = 8
K1 = 0.01
K2 = 0.03


def _as_gray_2d(img: np.ndarray, who: str) -> np.ndarray:
    a = np.asarray(img, dtype=np.float64)
    a = np.squeeze(a)
    if a.ndim != 2:
        raise ShapeError(f"{who}: ssim works on one grayscale image, got shape {img.shape}")
    return a


def _window_sums(a: np.ndarray, k: int) -> np.ndarray:
    """Sum of every k-x-k window (stride 1) via an integral image."""
    h, w = a.shape
    ii = np.zeros((h + 1, w + 1), dtype=np.float64)
    ii[1:, 1:] = a.cumsum(axis=0).cumsum(axis=1)
    return ii[k:, k:] - ii[:-k, k:] - ii[k:, :-k] + ii[:-k, :-k]


def ssim(a: np.ndarray, b: np.ndarray, window: int = WINDOW, k1: float = K1,
         k2: float = K2, dynamic_range: float = 1.0):
    """Mean SSIM and the per-window map.

    Returns (score, ssim_map) with score in [-1, 1] and ssim_map of shape
    (H - window + 1, W - window + 1).
    """
    a = _as_gray_2d(a, "a")
    b = _as_gray_2d(b, "b")
    if a.shape != b.shape:
        raise ShapeError(f"ssim needs equal shapes, got {a.shape} vs {b.shape}")
    h, w = a.shape
    if h < window or w < window:
        raise ShapeError(
            f"image {h}x{w} smaller than the {window}x{window} ssim window"
        )
    area = float(window * window)
    c1 = (k1 * dynamic_range) ** 2
    c2 = (k2 * dynamic_range) ** 2
    mu_a = _window_sums(a, window) / area
    mu_b = _window_sums(b, window) / area
    # population second moments
    e_aa = _window_sums(a * a, window) / area
    e_bb = _window_sums(b * b, window) / area
    e_ab = _window_sums(a * b, window) / area
    var_a = e_aa - mu_a * mu_a
    var_b = e_bb - mu_b * mu_b
    cov = e_ab - mu_a * mu_b
    num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)
    den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
    smap = num / den
    return float(smap.mean()), smap


def ssim_diff_image(ssim_map: np.ndarray) -> np.ndarray:
    """Dissimilarity image in [0,1]: (1 - ssim) / 2, clipped."""
    return np.clip((1.0 - ssim_map) / 2.0, 0.0, 1.0)
