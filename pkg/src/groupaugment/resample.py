"""Bicubic resampling and separable convolution, the hot pixel loops.

Both run as numba ``@njit`` kernels by default, with pure-NumPy twins that
compute the same arithmetic in the same order, so either path produces
bit-identical output. The NumPy path is selected when numba is missing or
when the environment variable ``GROUPAUGMENT_DISABLE_NUMBA`` is set to a
non-empty value; ``benchmarks/bench_kernels.py`` compares the two.

Conventions shared by every warp in the package:

* interpolation: bicubic, Catmull-Rom kernel (a = -0.5),
* border handling: reflection without repeating the edge sample
  (``... c b | a b c ... | y x w ...``),
* inputs and intermediates are float64; callers quantize once at the end.
"""

from __future__ import annotations

import os

import numpy as np

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAS_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        if args and callable(args[0]):
            return args[0]
        return wrap


USE_NUMBA = HAS_NUMBA and not os.environ.get("GROUPAUGMENT_DISABLE_NUMBA")


@njit(cache=True)
def _cubic_weight(t: float) -> float:
    at = abs(t)
    if at <= 1.0:
        return (1.5 * at - 2.5) * at * at + 1.0
    if at < 2.0:
        return ((-0.5 * at + 2.5) * at - 4.0) * at + 2.0
    return 0.0


@njit(cache=True)
def _reflect_index(p: int, n: int) -> int:
    if n == 1:
        return 0
    period = 2 * (n - 1)
    m = p % period
    if m >= n:
        m = period - m
    return m


@njit(cache=True)
def _warp_bicubic_njit(src, map_x, map_y, out):
    h, w, _ = src.shape
    oh, ow = map_x.shape
    for y in range(oh):
        for x in range(ow):
            sx = map_x[y, x]
            sy = map_y[y, x]
            x0 = int(np.floor(sx))
            y0 = int(np.floor(sy))
            tx = sx - x0
            ty = sy - y0
            for c in range(3):
                acc = 0.0
                for jj in range(4):
                    wy = _cubic_weight(ty - (jj - 1))
                    yi = _reflect_index(y0 + jj - 1, h)
                    for ii in range(4):
                        wx = _cubic_weight(tx - (ii - 1))
                        xi = _reflect_index(x0 + ii - 1, w)
                        acc += wy * wx * src[yi, xi, c]
                out[y, x, c] = acc
    return out


def _cubic_weight_np(t: np.ndarray) -> np.ndarray:
    at = np.abs(t)
    inner = (1.5 * at - 2.5) * at * at + 1.0
    outer = ((-0.5 * at + 2.5) * at - 4.0) * at + 2.0
    return np.where(at <= 1.0, inner, np.where(at < 2.0, outer, 0.0))


def _reflect_index_np(p: np.ndarray, n: int) -> np.ndarray:
    if n == 1:
        return np.zeros_like(p)
    period = 2 * (n - 1)
    m = np.mod(p, period)
    return np.where(m >= n, period - m, m)


def _warp_bicubic_numpy(src, map_x, map_y, out):
    h, w, _ = src.shape
    x0 = np.floor(map_x).astype(np.int64)
    y0 = np.floor(map_y).astype(np.int64)
    tx = map_x - x0
    ty = map_y - y0
    acc = np.zeros(map_x.shape + (3,), dtype=np.float64)
    # Same accumulation order as the njit loop: jj outer, ii inner.
    for jj in range(4):
        wy = _cubic_weight_np(ty - (jj - 1))
        yi = _reflect_index_np(y0 + jj - 1, h)
        for ii in range(4):
            wx = _cubic_weight_np(tx - (ii - 1))
            xi = _reflect_index_np(x0 + ii - 1, w)
            acc += ((wy * wx))[:, :, None] * src[yi, xi, :]
    out[...] = acc
    return out


@njit(cache=True)
def _conv_separable_njit(src, taps, out, tmp):
    h, w, ch = src.shape
    n = taps.shape[0]
    r = (n - 1) // 2
    for y in range(h):
        for x in range(w):
            for c in range(ch):
                acc = 0.0
                for t in range(n):
                    xi = _reflect_index(x + t - r, w)
                    acc += taps[t] * src[y, xi, c]
                tmp[y, x, c] = acc
    for y in range(h):
        for x in range(w):
            for c in range(ch):
                acc = 0.0
                for t in range(n):
                    yi = _reflect_index(y + t - r, h)
                    acc += taps[t] * tmp[yi, x, c]
                out[y, x, c] = acc
    return out


def _conv_separable_numpy(src, taps, out, tmp):
    h, w, _ = src.shape
    n = taps.shape[0]
    r = (n - 1) // 2
    cols = np.arange(w, dtype=np.int64)
    rows = np.arange(h, dtype=np.int64)
    tmp[...] = 0.0
    for t in range(n):
        xi = _reflect_index_np(cols + t - r, w)
        tmp += taps[t] * src[:, xi, :]
    out[...] = 0.0
    for t in range(n):
        yi = _reflect_index_np(rows + t - r, h)
        out += taps[t] * tmp[yi, :, :]
    return out


def warp_bicubic(src: np.ndarray, map_x: np.ndarray, map_y: np.ndarray, *, use_numba: bool | None = None) -> np.ndarray:
    """Sample ``src`` at (map_y, map_x) per output pixel.

    src is (h, w, 3) float64; maps are float64 arrays of the output shape,
    in source pixel coordinates. Returns float64.
    """
    src = np.ascontiguousarray(src, dtype=np.float64)
    map_x = np.ascontiguousarray(map_x, dtype=np.float64)
    map_y = np.ascontiguousarray(map_y, dtype=np.float64)
    out = np.empty(map_x.shape + (3,), dtype=np.float64)
    if use_numba is None:
        use_numba = USE_NUMBA
    if use_numba:
        return _warp_bicubic_njit(src, map_x, map_y, out)
    return _warp_bicubic_numpy(src, map_x, map_y, out)


def conv_separable(src: np.ndarray, taps: np.ndarray, *, use_numba: bool | None = None) -> np.ndarray:
    """Convolve horizontally then vertically with the same normalized taps."""
    src = np.ascontiguousarray(src, dtype=np.float64)
    taps = np.ascontiguousarray(taps, dtype=np.float64)
    if taps.shape[0] % 2 != 1:
        raise ValueError("tap count must be odd")
    out = np.empty_like(src)
    tmp = np.empty_like(src)
    if use_numba is None:
        use_numba = USE_NUMBA
    if use_numba:
        return _conv_separable_njit(src, taps, out, tmp)
    return _conv_separable_numpy(src, taps, out, tmp)


def warmup() -> None:
    """Trigger JIT compilation of the hot kernels (no-op on the NumPy path)."""
    img = np.zeros((2, 2, 3), dtype=np.float64)
    m = np.zeros((2, 2), dtype=np.float64)
    warp_bicubic(img, m, m)
    conv_separable(img, np.array([1.0]))
