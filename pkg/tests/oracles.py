"""Brute-force reference implementations of the augmentation kernels.

Written before the production kernels and kept deliberately dumb: scalar
Python arithmetic, per-pixel loops, ``colorsys`` for hue math. numpy is
used only as a pixel container. The production kernels must match these
bit-exactly on uint8 output.
"""

from __future__ import annotations

import colorsys
import math

import numpy as np

LUMA_R, LUMA_G, LUMA_B = 0.299, 0.587, 0.114


def ref_quantize(v: float) -> int:
    vv = min(255.0, max(0.0, v))
    return int(math.floor(vv + 0.5))


def ref_luma(r: float, g: float, b: float) -> float:
    return LUMA_R * r + LUMA_G * g + LUMA_B * b


def ref_solarize(img: np.ndarray, threshold: int) -> np.ndarray:
    h, w, _ = img.shape
    out = np.zeros_like(img)
    for y in range(h):
        for x in range(w):
            for c in range(3):
                v = int(img[y, x, c])
                out[y, x, c] = 255 - v if v >= threshold else v
    return out


def ref_to_gray(img: np.ndarray) -> np.ndarray:
    h, w, _ = img.shape
    out = np.zeros_like(img)
    for y in range(h):
        for x in range(w):
            g = ref_quantize(ref_luma(float(img[y, x, 0]), float(img[y, x, 1]), float(img[y, x, 2])))
            out[y, x, :] = g
    return out


def ref_color_jitter_factors(
    img: np.ndarray, brightness_f: float, contrast_f: float, saturation_f: float, hue_shift: float
) -> np.ndarray:
    """Jitter with explicit factors, applied brightness->contrast->saturation->hue."""
    h, w, _ = img.shape
    vals = [[[float(img[y, x, c]) for c in range(3)] for x in range(w)] for y in range(h)]
    # brightness
    for y in range(h):
        for x in range(w):
            for c in range(3):
                vals[y][x][c] *= brightness_f
    # contrast pivots on the mean of the per-pixel rounded luma (exact integer sum)
    total = 0
    for y in range(h):
        for x in range(w):
            total += ref_quantize(ref_luma(*vals[y][x]))
    pivot = total / (h * w)
    for y in range(h):
        for x in range(w):
            for c in range(3):
                vals[y][x][c] = contrast_f * vals[y][x][c] + (1.0 - contrast_f) * pivot
    # saturation blends toward the per-pixel luma
    for y in range(h):
        for x in range(w):
            l = ref_luma(*vals[y][x])
            for c in range(3):
                vals[y][x][c] = saturation_f * vals[y][x][c] + (1.0 - saturation_f) * l
    # hue rotation in HSV on values clamped to [0, 255]
    for y in range(h):
        for x in range(w):
            r, g, b = (min(255.0, max(0.0, v)) for v in vals[y][x])
            hh, ss, vv = colorsys.rgb_to_hsv(r, g, b)
            hh = (hh + hue_shift) % 1.0
            vals[y][x] = list(colorsys.hsv_to_rgb(hh, ss, vv))
    out = np.zeros_like(img)
    for y in range(h):
        for x in range(w):
            for c in range(3):
                out[y, x, c] = ref_quantize(vals[y][x][c])
    return out


def ref_equalize(img: np.ndarray) -> np.ndarray:
    h, w, _ = img.shape
    n = h * w
    out = np.zeros_like(img)
    for c in range(3):
        counts = [0] * 256
        for y in range(h):
            for x in range(w):
                counts[int(img[y, x, c])] += 1
        cdf = []
        acc = 0
        for v in range(256):
            acc += counts[v]
            cdf.append(acc)
        cdf_min = next(cv for cv in cdf if cv > 0)
        if cdf_min == n:
            lut = list(range(256))
        else:
            lut = [ref_quantize((cdf[v] - cdf_min) * 255.0 / (n - cdf_min)) for v in range(256)]
        for y in range(h):
            for x in range(w):
                out[y, x, c] = lut[int(img[y, x, c])]
    return out


def ref_channel_permute(img: np.ndarray, perm: tuple[int, int, int]) -> np.ndarray:
    h, w, _ = img.shape
    out = np.zeros_like(img)
    for y in range(h):
        for x in range(w):
            for c in range(3):
                out[y, x, c] = img[y, x, perm[c]]
    return out


def ref_horizontal_flip(img: np.ndarray) -> np.ndarray:
    h, w, _ = img.shape
    out = np.zeros_like(img)
    for y in range(h):
        for x in range(w):
            out[y, x, :] = img[y, w - 1 - x, :]
    return out


def _ref_cubic(t: float) -> float:
    at = abs(t)
    if at <= 1.0:
        return (1.5 * at - 2.5) * at * at + 1.0
    if at < 2.0:
        return ((-0.5 * at + 2.5) * at - 4.0) * at + 2.0
    return 0.0


def _ref_reflect(p: int, n: int) -> int:
    if n == 1:
        return 0
    period = 2 * (n - 1)
    m = p % period
    if m >= n:
        m = period - m
    return m


def ref_warp_bicubic(src_f: np.ndarray, map_x: np.ndarray, map_y: np.ndarray) -> np.ndarray:
    """Scalar bicubic sampling with reflect-101 border; float in, float out."""
    h, w, _ = src_f.shape
    oh, ow = map_x.shape
    out = np.zeros((oh, ow, 3), dtype=np.float64)
    for y in range(oh):
        for x in range(ow):
            sx = float(map_x[y, x])
            sy = float(map_y[y, x])
            x0 = math.floor(sx)
            y0 = math.floor(sy)
            tx = sx - x0
            ty = sy - y0
            for c in range(3):
                acc = 0.0
                for jj in range(4):
                    wy = _ref_cubic(ty - (jj - 1))
                    yi = _ref_reflect(y0 + jj - 1, h)
                    for ii in range(4):
                        wx = _ref_cubic(tx - (ii - 1))
                        xi = _ref_reflect(x0 + ii - 1, w)
                        acc += wy * wx * float(src_f[yi, xi, c])
                out[y, x, c] = acc
    return out


def ref_separable_blur(src_f: np.ndarray, taps: list[float]) -> np.ndarray:
    h, w, _ = src_f.shape
    n = len(taps)
    r = (n - 1) // 2
    tmp = np.zeros((h, w, 3), dtype=np.float64)
    out = np.zeros((h, w, 3), dtype=np.float64)
    for y in range(h):
        for x in range(w):
            for c in range(3):
                acc = 0.0
                for t in range(n):
                    acc += taps[t] * float(src_f[y, _ref_reflect(x + t - r, w), c])
                tmp[y, x, c] = acc
    for y in range(h):
        for x in range(w):
            for c in range(3):
                acc = 0.0
                for t in range(n):
                    acc += taps[t] * float(tmp[_ref_reflect(y + t - r, h), x, c])
                out[y, x, c] = acc
    return out


def ref_gaussian_taps(sigma: float, size: int) -> list[float]:
    r = (size - 1) // 2
    raw = [math.exp(-((i - r) ** 2) / (2.0 * sigma * sigma)) for i in range(size)]
    s = 0.0
    for v in raw:
        s += v
    return [v / s for v in raw]


def ref_cutout(img: np.ndarray, holes: list[tuple[int, int]], hole_h: int, hole_w: int) -> np.ndarray:
    h, w, _ = img.shape
    out = img.copy()
    for y0, x0 in holes:
        for y in range(y0, min(y0 + hole_h, h)):
            for x in range(x0, min(x0 + hole_w, w)):
                out[y, x, :] = 0
    return out


def ref_grid_tiles(h: int, w: int, grid: int) -> list[tuple[int, int, int, int]]:
    """Tile boxes (y0, x0, th, tw) in row-major order; last row/col absorbs remainder."""
    th, tw = h // grid, w // grid
    boxes = []
    for gy in range(grid):
        for gx in range(grid):
            y0, x0 = gy * th, gx * tw
            hh = th if gy < grid - 1 else h - y0
            ww = tw if gx < grid - 1 else w - x0
            boxes.append((y0, x0, hh, ww))
    return boxes


def ref_grid_shuffle_apply(img: np.ndarray, grid: int, perms: dict) -> np.ndarray:
    """Apply per-shape-class tile permutations; perms maps (th, tw) -> permutation list."""
    boxes = ref_grid_tiles(img.shape[0], img.shape[1], grid)
    classes: dict[tuple[int, int], list[int]] = {}
    for i, (_, _, th, tw) in enumerate(boxes):
        classes.setdefault((th, tw), []).append(i)
    out = img.copy()
    for shape_key in sorted(classes):
        members = classes[shape_key]
        perm = perms.get(shape_key, list(range(len(members))))
        for dst_pos, src_pos in enumerate(perm):
            dy, dx, th, tw = boxes[members[dst_pos]]
            sy, sx, _, _ = boxes[members[src_pos]]
            for yy in range(th):
                for xx in range(tw):
                    out[dy + yy, dx + xx, :] = img[sy + yy, sx + xx, :]
    return out
