"""Quality-group kernels: blur and sensor noise."""

from __future__ import annotations

import math

import numpy as np

from ..errors import ValidationError
from ..image import quantize, validate_image
from ..resample import conv_separable
from ..rng import RngStream


def gaussian_taps(sigma: float, kernel_size: int = 0) -> np.ndarray:
    """Normalized Gaussian taps; kernel_size 0 auto-sizes to 2*ceil(3*sigma)+1.

    Normalization accumulates sequentially so every implementation of this
    formula produces bit-identical taps."""
    if kernel_size < 0 or (kernel_size > 0 and kernel_size % 2 == 0):
        raise ValidationError(f"kernel_size must be odd or 0 (auto), got {kernel_size}")
    if sigma <= 0.0:
        return np.array([1.0])
    if kernel_size == 0:
        kernel_size = 2 * math.ceil(3.0 * sigma) + 1
    r = (kernel_size - 1) // 2
    raw = [math.exp(-((i - r) ** 2) / (2.0 * sigma * sigma)) for i in range(kernel_size)]
    total = 0.0
    for v in raw:
        total += v
    return np.array([v / total for v in raw])


def gaussian_blur(
    img: np.ndarray,
    rng: RngStream,
    sigma_lo: float = 0.1,
    sigma_hi: float = 2.0,
    kernel_size: int = 0,
) -> np.ndarray:
    """Separable Gaussian blur with sigma drawn uniformly from [sigma_lo,
    sigma_hi]; a degenerate range pins sigma. kernel_size 0 auto-sizes."""
    validate_image(img)
    if sigma_lo < 0 or sigma_hi < sigma_lo:
        raise ValidationError(f"need 0 <= sigma_lo <= sigma_hi, got [{sigma_lo}, {sigma_hi}]")
    sigma = rng.uniform_range(sigma_lo, sigma_hi)
    taps = gaussian_taps(sigma, kernel_size)
    if taps.shape[0] == 1:
        return img.copy()
    return quantize(conv_separable(img.astype(np.float64), taps))


def gauss_noise(
    img: np.ndarray,
    rng: RngStream,
    var_lo: float = 10.0,
    var_hi: float = 50.0,
) -> np.ndarray:
    """Adds i.i.d. zero-mean Gaussian noise with variance drawn uniformly
    from [var_lo, var_hi]; a degenerate range pins the variance.

    Draws: one variance, then one 64-bit word seeding the bulk noise
    generator."""
    validate_image(img)
    if var_lo < 0 or var_hi < var_lo:
        raise ValidationError(f"need 0 <= var_lo <= var_hi, got [{var_lo}, {var_hi}]")
    var = rng.uniform_range(var_lo, var_hi)
    noise = rng.numpy_rng().standard_normal(img.shape) * math.sqrt(var)
    return quantize(img.astype(np.float64) + noise)
