"""Geometric-group kernels: affine warps and flips."""

from __future__ import annotations

import math

import numpy as np

from ..errors import ValidationError
from ..image import quantize, validate_image
from ..resample import warp_bicubic
from ..rng import RngStream


def horizontal_flip(img: np.ndarray) -> np.ndarray:
    validate_image(img)
    return img[:, ::-1, :].copy()


def _pixel_grid(h: int, w: int):
    gy, gx = np.meshgrid(np.arange(h, dtype=np.float64), np.arange(w, dtype=np.float64), indexing="ij")
    return gx, gy


def affine_maps(h: int, w: int, angle_deg: float, scale_f: float, dx_px: float, dy_px: float):
    """Inverse maps for: scale about center, rotate by angle, then shift.

    Positive angle rotates content counterclockwise (y grows downward);
    shifts are in pixels. Zero transform yields exact identity maps.
    """
    cx = (w - 1) / 2.0
    cy = (h - 1) / 2.0
    theta = math.radians(angle_deg)
    cos_t = math.cos(theta)
    sin_t = math.sin(theta)
    inv = 1.0 / scale_f
    gx, gy = _pixel_grid(h, w)
    xr = gx - cx - dx_px
    yr = gy - cy - dy_px
    map_x = (cos_t * xr + sin_t * yr) * inv + cx
    map_y = (-sin_t * xr + cos_t * yr) * inv + cy
    return map_x, map_y


def shift_scale_rotate_core(img: np.ndarray, angle_deg: float, scale_f: float, dx_px: float, dy_px: float) -> np.ndarray:
    validate_image(img)
    if scale_f <= 0:
        raise ValidationError(f"scale factor must be positive, got {scale_f}")
    h, w, _ = img.shape
    map_x, map_y = affine_maps(h, w, angle_deg, scale_f, dx_px, dy_px)
    return quantize(warp_bicubic(img.astype(np.float64), map_x, map_y))


def shift_scale_rotate(
    img: np.ndarray,
    rng: RngStream,
    shift_limit: float = 0.0625,
    scale_limit: float = 0.1,
    rotate_limit: float = 45.0,
) -> np.ndarray:
    """Affine warp with uniform draws in +/-limits.

    Draw order: angle, scale delta, x shift, y shift. Shift draws are in
    fractions of width/height."""
    validate_image(img)
    for name, v in (("shift_limit", shift_limit), ("scale_limit", scale_limit), ("rotate_limit", rotate_limit)):
        if v < 0:
            raise ValidationError(f"{name} must be nonnegative, got {v}")
    if scale_limit >= 1.0:
        raise ValidationError(f"scale_limit must be < 1 so the scale factor stays positive, got {scale_limit}")
    h, w, _ = img.shape
    angle = rng.uniform_range(-rotate_limit, rotate_limit)
    scale_f = 1.0 + rng.uniform_range(-scale_limit, scale_limit)
    dx_px = rng.uniform_range(-shift_limit, shift_limit) * w
    dy_px = rng.uniform_range(-shift_limit, shift_limit) * h
    return shift_scale_rotate_core(img, angle, scale_f, dx_px, dy_px)
