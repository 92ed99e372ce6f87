"""Color-group kernels: per-pixel value transforms, geometry untouched.

All float math is float64 and quantized exactly once per kernel. The hue
rotation mirrors the stdlib ``colorsys`` formulas line by line so the
brute-force oracle (which calls ``colorsys``) matches bit-exactly.
"""

from __future__ import annotations

import numpy as np

from ..errors import ValidationError
from ..image import quantize, validate_image
from ..rng import RngStream

LUMA_WEIGHTS = (0.299, 0.587, 0.114)

# lexicographic order; channel_shuffle draws an index into this table
CHANNEL_PERMUTATIONS = ((0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0))


def luma(values: np.ndarray) -> np.ndarray:
    """BT.601 luma of a float (h, w, 3) array; returns (h, w)."""
    return LUMA_WEIGHTS[0] * values[..., 0] + LUMA_WEIGHTS[1] * values[..., 1] + LUMA_WEIGHTS[2] * values[..., 2]


def solarize(img: np.ndarray, threshold: int = 127) -> np.ndarray:
    validate_image(img)
    if not 0 <= threshold <= 255:
        raise ValidationError(f"solarize threshold must be in [0, 255], got {threshold}")
    return np.where(img >= threshold, 255 - img, img)


def to_gray(img: np.ndarray) -> np.ndarray:
    validate_image(img)
    g = quantize(luma(img.astype(np.float64)))
    return np.repeat(g[:, :, None], 3, axis=2)


def equalize(img: np.ndarray) -> np.ndarray:
    validate_image(img)
    h, w, _ = img.shape
    n = h * w
    out = np.empty_like(img)
    for c in range(3):
        channel = img[..., c]
        counts = np.bincount(channel.ravel(), minlength=256)
        cdf = np.cumsum(counts)
        cdf_min = int(cdf[cdf > 0][0])
        if cdf_min == n:
            # constant channel: degenerate histogram maps to itself
            out[..., c] = channel
            continue
        numer = (cdf - cdf_min) * 255
        lut = quantize(numer / (n - cdf_min))
        out[..., c] = lut[channel]
    return out


def channel_permute(img: np.ndarray, perm: tuple[int, int, int]) -> np.ndarray:
    validate_image(img)
    if sorted(perm) != [0, 1, 2]:
        raise ValidationError(f"not a channel permutation: {perm}")
    return img[:, :, list(perm)]


def channel_shuffle(img: np.ndarray, rng: RngStream) -> np.ndarray:
    return channel_permute(img, CHANNEL_PERMUTATIONS[rng.randbelow(6)])


def _rgb_to_hsv(r: np.ndarray, g: np.ndarray, b: np.ndarray):
    # vectorized colorsys.rgb_to_hsv, same expressions and branch priority
    maxc = np.maximum(np.maximum(r, g), b)
    minc = np.minimum(np.minimum(r, g), b)
    rangec = maxc - minc
    flat = minc == maxc
    safe_range = np.where(flat, 1.0, rangec)
    safe_max = np.where(maxc == 0.0, 1.0, maxc)
    s = np.where(flat, 0.0, rangec / safe_max)
    rc = (maxc - r) / safe_range
    gc = (maxc - g) / safe_range
    bc = (maxc - b) / safe_range
    h = np.where(r == maxc, bc - gc, np.where(g == maxc, 2.0 + rc - bc, 4.0 + gc - rc))
    h = np.where(flat, 0.0, np.mod(h / 6.0, 1.0))
    return h, s, maxc


def _hsv_to_rgb(h: np.ndarray, s: np.ndarray, v: np.ndarray):
    # vectorized colorsys.hsv_to_rgb; i and f from the raw truncation, as in
    # the scalar code, so h == 1.0 lands in sector 0
    h6 = h * 6.0
    i_raw = h6.astype(np.int64)
    f = h6 - i_raw
    p = v * (1.0 - s)
    q = v * (1.0 - s * f)
    t = v * (1.0 - s * (1.0 - f))
    i = np.mod(i_raw, 6)
    r = np.select([i == 0, i == 1, i == 2, i == 3, i == 4, i == 5], [v, q, p, p, t, v])
    g = np.select([i == 0, i == 1, i == 2, i == 3, i == 4, i == 5], [t, v, v, q, p, p])
    b = np.select([i == 0, i == 1, i == 2, i == 3, i == 4, i == 5], [p, p, t, v, v, q])
    gray = s == 0.0
    return np.where(gray, v, r), np.where(gray, v, g), np.where(gray, v, b)


def _hue_rotate(values: np.ndarray, shift: float) -> np.ndarray:
    clamped = np.clip(values, 0.0, 255.0)
    h, s, v = _rgb_to_hsv(clamped[..., 0], clamped[..., 1], clamped[..., 2])
    h = np.mod(h + shift, 1.0)
    r, g, b = _hsv_to_rgb(h, s, v)
    return np.stack([r, g, b], axis=-1)


def color_jitter_core(
    img: np.ndarray, brightness_f: float, contrast_f: float, saturation_f: float, hue_shift: float
) -> np.ndarray:
    """Jitter with explicit factors, applied brightness->contrast->saturation->hue."""
    validate_image(img)
    x = img.astype(np.float64)
    x = x * brightness_f
    # contrast pivots on the mean of per-pixel rounded luma; the integer sum
    # is exact, so the pivot is identical across implementations
    lum_q = quantize(luma(x)).astype(np.int64)
    pivot = int(lum_q.sum()) / lum_q.size
    x = contrast_f * x + (1.0 - contrast_f) * pivot
    x = saturation_f * x + (1.0 - saturation_f) * luma(x)[:, :, None]
    if hue_shift != 0.0:
        x = _hue_rotate(x, hue_shift)
    return quantize(x)


def color_jitter(
    img: np.ndarray,
    rng: RngStream,
    brightness: float = 0.4,
    contrast: float = 0.4,
    saturation: float = 0.4,
    hue: float = 0.1,
) -> np.ndarray:
    """Draws factors per call: strengths s give factors in [max(0, 1-s), 1+s],
    hue gives a shift in [-hue, +hue] turns. Draw order: brightness,
    contrast, saturation, hue."""
    for name, s, hi in (("brightness", brightness, 1.5), ("contrast", contrast, 1.5), ("saturation", saturation, 1.5), ("hue", hue, 0.5)):
        if not 0.0 <= s <= hi:
            raise ValidationError(f"color_jitter {name} strength must be in [0, {hi}], got {s}")
    b_f = rng.uniform_range(max(0.0, 1.0 - brightness), 1.0 + brightness)
    c_f = rng.uniform_range(max(0.0, 1.0 - contrast), 1.0 + contrast)
    s_f = rng.uniform_range(max(0.0, 1.0 - saturation), 1.0 + saturation)
    hue_shift = rng.uniform_range(-hue, hue)
    return color_jitter_core(img, b_f, c_f, s_f, hue_shift)
