"""Augmentation arithmetic: mixup, cutmix, random resized crop, random flip.

Pixel mixes round half-up and clamp to the image range so results are
platform-independent. Every seeded operation draws from its own PCG64 stream
in a fixed order, documented per function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .grid import GrayImage
from .patterns import SeedLike, make_rng

SIMPLEX_TOL = 1e-9


@dataclass(frozen=True)
class CropSpec:
    """Random-resized-crop parameters: area fraction range, aspect range,
    square output size."""

    scale_low: float
    scale_high: float
    aspect_low: float
    aspect_high: float
    out_size: int

    def __post_init__(self):
        if not 0 < self.scale_low <= self.scale_high <= 1:
            raise ValueError("scale range must satisfy 0 < low <= high <= 1")
        if not 0 < self.aspect_low <= self.aspect_high:
            raise ValueError("aspect range must be positive and ordered")
        if self.out_size < 1:
            raise ValueError("out_size must be >= 1")


def _check_lambda(lam: float) -> float:
    if not 0 <= lam <= 1:
        raise ValueError(f"mixing coefficient {lam} outside [0, 1]")
    return float(lam)


def _check_same_shape(a: GrayImage, b: GrayImage) -> None:
    if (a.width, a.height) != (b.width, b.height):
        raise ValueError(
            f"image dimensions differ: {a.width}x{a.height} vs {b.width}x{b.height}"
        )
    if a.max_value != b.max_value:
        raise ValueError("images have different intensity ranges")


def _round_half_up(arr: np.ndarray) -> np.ndarray:
    return np.floor(arr + 0.5).astype(np.int64)


def mixup_pixels(a: GrayImage, b: GrayImage, lam: float) -> GrayImage:
    """Blend pixel-wise: out = a*lam + b*(1-lam), rounded half-up, clamped."""
    _check_same_shape(a, b)
    lam = _check_lambda(lam)
    mixed = a.as_array() * lam + b.as_array() * (1 - lam)
    out = np.clip(_round_half_up(mixed), 0, a.max_value)
    return GrayImage.from_array(out, a.max_value)


def mix_labels(ya: Sequence[float], yb: Sequence[float], lam: float) -> tuple[float, ...]:
    """Component-wise convex combination of two label vectors."""
    if len(ya) != len(yb):
        raise ValueError(f"label lengths differ: {len(ya)} vs {len(yb)}")
    lam = _check_lambda(lam)
    for vec in (ya, yb):
        if any(v < 0 or v > 1 for v in vec):
            raise ValueError("label entries must lie in [0, 1]")
        if abs(sum(vec) - 1.0) > SIMPLEX_TOL:
            raise ValueError("label vector must sum to 1")
    return tuple(va * lam + vb * (1 - lam) for va, vb in zip(ya, yb))


def sample_lambda(alpha: float, seed: SeedLike) -> float:
    """Draw lambda ~ Beta(alpha, alpha) via two Gamma(alpha) variates."""
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    rng = make_rng(seed)
    while True:
        g1 = float(rng.standard_gamma(alpha))
        g2 = float(rng.standard_gamma(alpha))
        if g1 + g2 > 0:  # guards underflow at tiny alpha
            return g1 / (g1 + g2)


def _cutmix_box(
    width: int, height: int, lam0: float, rng: np.random.Generator
) -> tuple[int, int, int, int]:
    # Rectangle with area fraction 1-lam0 centered at a uniform pixel,
    # clipped to bounds. Draw order: cx then cy.
    side_scale = math.sqrt(1 - lam0)
    cut_w = round(width * side_scale)
    cut_h = round(height * side_scale)
    cx = int(rng.integers(0, width))
    cy = int(rng.integers(0, height))
    x0 = cx - cut_w // 2
    y0 = cy - cut_h // 2
    x1 = min(width, x0 + cut_w)
    y1 = min(height, y0 + cut_h)
    return max(0, x0), max(0, y0), x1, y1


def cutmix(
    a: GrayImage, b: GrayImage, alpha: float, seed: SeedLike
) -> tuple[GrayImage, float]:
    """Paste a rectangle of b into a; returns the image and the effective
    label coefficient 1 - pasted_area / total_area.

    Draw order: two Gamma(alpha) variates for the initial coefficient, then
    the rectangle center.
    """
    _check_same_shape(a, b)
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    rng = make_rng(seed)
    while True:
        g1 = float(rng.standard_gamma(alpha))
        g2 = float(rng.standard_gamma(alpha))
        if g1 + g2 > 0:
            lam0 = g1 / (g1 + g2)
            break
    x0, y0, x1, y1 = _cutmix_box(a.width, a.height, lam0, rng)
    out = a.as_array().copy()
    out[y0:y1, x0:x1] = b.as_array()[y0:y1, x0:x1]
    pasted = (x1 - x0) * (y1 - y0)
    lam = 1 - pasted / (a.width * a.height)
    return GrayImage.from_array(out, a.max_value), lam


def _resize_bilinear(arr: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resampling with half-pixel-aligned sample centers."""
    h, w = arr.shape
    src = arr.astype(np.float64)
    ys = (np.arange(out_h) + 0.5) * (h / out_h) - 0.5
    xs = (np.arange(out_w) + 0.5) * (w / out_w) - 0.5
    y0 = np.clip(np.floor(ys).astype(int), 0, h - 1)
    x0 = np.clip(np.floor(xs).astype(int), 0, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    wy = np.clip(ys - y0, 0.0, 1.0)[:, None]
    wx = np.clip(xs - x0, 0.0, 1.0)[None, :]
    top = src[np.ix_(y0, x0)] * (1 - wx) + src[np.ix_(y0, x1)] * wx
    bot = src[np.ix_(y1, x0)] * (1 - wx) + src[np.ix_(y1, x1)] * wx
    return top * (1 - wy[:, 0])[:, None] + bot * wy[:, 0][:, None]


def _sample_crop_window(
    rng: np.random.Generator, width: int, height: int, spec: CropSpec
) -> tuple[int, int, int, int]:
    # Per attempt the stream yields area fraction (uniform) then aspect
    # (log-uniform); a fitting window adds x then y. After 10 failed
    # attempts the largest centered square is cropped instead.
    log_lo, log_hi = math.log(spec.aspect_low), math.log(spec.aspect_high)
    for _ in range(10):
        frac = float(rng.uniform(spec.scale_low, spec.scale_high))
        aspect = math.exp(float(rng.uniform(log_lo, log_hi)))
        cw = round(math.sqrt(frac * width * height * aspect))
        ch = round(math.sqrt(frac * width * height / aspect))
        if 1 <= cw <= width and 1 <= ch <= height:
            x = int(rng.integers(0, width - cw + 1))
            y = int(rng.integers(0, height - ch + 1))
            return x, y, cw, ch
    side = min(width, height)
    return (width - side) // 2, (height - side) // 2, side, side


def random_resized_crop(img: GrayImage, spec: CropSpec, seed: SeedLike) -> GrayImage:
    """Crop a random area/aspect window and resize it to out_size x out_size."""
    x, y, cw, ch = _sample_crop_window(make_rng(seed), img.width, img.height, spec)
    window = img.as_array()[y : y + ch, x : x + cw]
    resized = _resize_bilinear(window, spec.out_size, spec.out_size)
    out = np.clip(_round_half_up(resized), 0, img.max_value)
    return GrayImage.from_array(out, img.max_value)


def random_flip(img: GrayImage, p: float, seed: SeedLike) -> GrayImage:
    """Mirror horizontally with probability p, else return the input."""
    if not 0 <= p <= 1:
        raise ValueError(f"flip probability {p} outside [0, 1]")
    rng = make_rng(seed)
    if float(rng.random()) < p:
        return GrayImage.from_array(img.as_array()[:, ::-1], img.max_value)
    return img
