"""Non-rigid kernels: elastic, grid, and optical displacement warps.

Each kernel builds per-pixel source-coordinate maps, then resamples through
the shared bicubic core. Draw counts are fixed per kernel regardless of
parameter values, so stream positions never depend on magnitudes.
"""

from __future__ import annotations

import numpy as np

from ..errors import ValidationError
from ..image import quantize, validate_image
from ..resample import conv_separable, warp_bicubic
from ..rng import RngStream
from .geometric import _pixel_grid
from .quality import gaussian_taps


def _smooth_field(noise: np.ndarray, sigma: float) -> np.ndarray:
    taps = gaussian_taps(sigma, 0)
    return conv_separable(noise[:, :, None], taps)[..., 0]


def elastic(
    img: np.ndarray,
    rng: RngStream,
    alpha: float = 0.5,
    sigma: float = 10.0,
    alpha_affine: float = 5.0,
) -> np.ndarray:
    """Random affine of magnitude alpha_affine plus a Gaussian-smoothed
    random displacement field scaled by alpha.

    Draws: six affine anchor perturbations (x then y per anchor), then one
    64-bit word seeding the bulk noise generator. alpha == 0 and
    alpha_affine == 0 give the exact identity."""
    validate_image(img)
    if alpha < 0 or sigma <= 0 or alpha_affine < 0:
        raise ValidationError(f"elastic requires alpha >= 0, sigma > 0, alpha_affine >= 0, got ({alpha}, {sigma}, {alpha_affine})")
    h, w, _ = img.shape
    deltas = [rng.uniform_range(-alpha_affine, alpha_affine) for _ in range(6)]
    field_seed = rng.next_u64()
    gx, gy = _pixel_grid(h, w)
    if alpha_affine != 0.0:
        anchors = np.array([[w * 0.25, h * 0.25], [w * 0.75, h * 0.25], [w * 0.25, h * 0.75]])
        moved = anchors + np.array(deltas).reshape(3, 2)
        # affine sending each output anchor back to its source anchor
        design = np.column_stack([moved, np.ones(3)])
        coef = np.linalg.solve(design, anchors)
        map_x = gx * coef[0, 0] + gy * coef[1, 0] + coef[2, 0]
        map_y = gx * coef[0, 1] + gy * coef[1, 1] + coef[2, 1]
    else:
        map_x, map_y = gx, gy
    if alpha != 0.0:
        nprng = np.random.Generator(np.random.PCG64(field_seed))
        noise_x = nprng.uniform(-1.0, 1.0, size=(h, w))
        noise_y = nprng.uniform(-1.0, 1.0, size=(h, w))
        map_x = map_x + _smooth_field(noise_x, sigma) * alpha
        map_y = map_y + _smooth_field(noise_y, sigma) * alpha
    return quantize(warp_bicubic(img.astype(np.float64), map_x, map_y))


def grid_axis_map(size: int, num_steps: int, factors: list[float]) -> np.ndarray:
    """Piecewise-linear source coordinate for one axis.

    Cell k covers [floor(k*size/n), floor((k+1)*size/n)) and stretches by
    factors[k]; all-ones factors give the exact identity."""
    if len(factors) != num_steps:
        raise ValidationError(f"need {num_steps} stretch factors, got {len(factors)}")
    bounds = [k * size // num_steps for k in range(num_steps + 1)]
    out = np.empty(size, dtype=np.float64)
    start = 0.0
    for k in range(num_steps):
        b0, b1 = bounds[k], bounds[k + 1]
        for x in range(b0, b1):
            out[x] = start + factors[k] * (x - b0)
        start = start + factors[k] * (b1 - b0)
    return out


def grid_distortion(
    img: np.ndarray,
    rng: RngStream,
    num_steps: int = 5,
    distort_limit: float = 0.3,
) -> np.ndarray:
    """Per-cell axis stretching on a num_steps x num_steps grid.

    Draws: num_steps x-axis factors, then num_steps y-axis factors, each
    1 + U(-distort_limit, +distort_limit)."""
    validate_image(img)
    if num_steps < 1:
        raise ValidationError(f"num_steps must be >= 1, got {num_steps}")
    if not 0.0 <= distort_limit < 1.0:
        raise ValidationError(f"distort_limit must be in [0, 1), got {distort_limit}")
    h, w, _ = img.shape
    factors_x = [1.0 + rng.uniform_range(-distort_limit, distort_limit) for _ in range(num_steps)]
    factors_y = [1.0 + rng.uniform_range(-distort_limit, distort_limit) for _ in range(num_steps)]
    ax = grid_axis_map(w, num_steps, factors_x)
    ay = grid_axis_map(h, num_steps, factors_y)
    map_x = np.broadcast_to(ax[None, :], (h, w))
    map_y = np.broadcast_to(ay[:, None], (h, w))
    return quantize(warp_bicubic(img.astype(np.float64), map_x, map_y))


def optical_distortion(
    img: np.ndarray,
    rng: RngStream,
    distort_limit: float = 0.5,
    shift_limit: float = 0.5,
) -> np.ndarray:
    """Radial barrel/pincushion warp about a shifted center.

    Draws: distortion coefficient k in +/-distort_limit, then center shifts
    (x, y) in +/-shift_limit as fractions of width/height. Source position
    is center + (p - center) * (1 + k * (r/rmax)^2)."""
    validate_image(img)
    if distort_limit < 0 or shift_limit < 0:
        raise ValidationError(f"limits must be nonnegative, got ({distort_limit}, {shift_limit})")
    h, w, _ = img.shape
    k = rng.uniform_range(-distort_limit, distort_limit)
    cx = (w - 1) / 2.0 + rng.uniform_range(-shift_limit, shift_limit) * w
    cy = (h - 1) / 2.0 + rng.uniform_range(-shift_limit, shift_limit) * h
    gx, gy = _pixel_grid(h, w)
    dx = gx - cx
    dy = gy - cy
    r2 = dx * dx + dy * dy
    corners = [(0.0, 0.0), (w - 1.0, 0.0), (0.0, h - 1.0), (w - 1.0, h - 1.0)]
    rmax2 = max((px - cx) ** 2 + (py - cy) ** 2 for px, py in corners)
    if rmax2 == 0.0:
        factor = np.ones_like(r2)
    else:
        factor = 1.0 + k * (r2 / rmax2)
    map_x = cx + dx * factor
    map_y = cy + dy * factor
    return quantize(warp_bicubic(img.astype(np.float64), map_x, map_y))


def displacement_transform(img: np.ndarray, kind: str, rng: RngStream, **params) -> np.ndarray:
    """Dispatch to one of the non-rigid kernels by kind."""
    kinds = {"elastic": elastic, "grid_distortion": grid_distortion, "optical_distortion": optical_distortion}
    if kind not in kinds:
        raise ValidationError(f"unknown displacement kind {kind!r}; expected one of {sorted(kinds)}")
    return kinds[kind](img, rng, **params)
