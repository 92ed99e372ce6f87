"""8-bit RGB image buffers and file I/O.

An image is a ``numpy.ndarray`` of shape ``(height, width, 3)`` and dtype
``uint8``, immutable by convention (kernels never write to their input).
PPM (binary P6) is the canonical format: it is hand-writable in tests and
round-trips bit-exactly. PNG (8-bit gray or RGB) is supported as a
convenience through Pillow.
"""

from __future__ import annotations

import os

import numpy as np

from .errors import ImageError


def validate_image(img: np.ndarray) -> np.ndarray:
    """Check the image invariants, returning the array unchanged."""
    if not isinstance(img, np.ndarray):
        raise ImageError(f"image must be a numpy array, got {type(img).__name__}")
    if img.dtype != np.uint8:
        raise ImageError(f"image dtype must be uint8, got {img.dtype}")
    if img.ndim != 3 or img.shape[2] != 3:
        raise ImageError(f"image shape must be (h, w, 3), got {img.shape}")
    if img.shape[0] < 1 or img.shape[1] < 1:
        raise ImageError(f"image dimensions must be >= 1, got {img.shape[:2]}")
    return img


def quantize(values: np.ndarray) -> np.ndarray:
    """Clamp float intensities to [0, 255] and round half away from zero.

    The single rounding rule every kernel uses when leaving floating point.
    """
    clipped = np.clip(values, 0.0, 255.0)
    return np.floor(clipped + 0.5).astype(np.uint8)


def _read_ppm_token(data: bytes, pos: int) -> tuple[bytes, int]:
    # Tokens are separated by whitespace; '#' starts a comment to end of line.
    n = len(data)
    while pos < n:
        c = data[pos : pos + 1]
        if c == b"#":
            while pos < n and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif c.isspace():
            pos += 1
        else:
            break
    start = pos
    while pos < n and not data[pos : pos + 1].isspace():
        pos += 1
    if start == pos:
        raise ImageError("truncated PPM header")
    return data[start:pos], pos


def load_ppm(path: str | os.PathLike) -> np.ndarray:
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise ImageError(f"cannot read {path}: {exc}") from exc
    if data[:2] != b"P6":
        raise ImageError(f"{path}: not a binary PPM (P6) file")
    pos = 2
    fields = []
    for _ in range(3):
        token, pos = _read_ppm_token(data, pos)
        try:
            fields.append(int(token))
        except ValueError as exc:
            raise ImageError(f"{path}: bad PPM header token {token!r}") from exc
    width, height, maxval = fields
    if width < 1 or height < 1:
        raise ImageError(f"{path}: PPM dimensions must be >= 1, got {width}x{height}")
    if maxval != 255:
        raise ImageError(f"{path}: only maxval 255 PPM supported, got {maxval}")
    pos += 1  # single whitespace byte after maxval
    expected = width * height * 3
    raster = data[pos : pos + expected]
    if len(raster) != expected:
        raise ImageError(f"{path}: PPM raster truncated ({len(raster)}/{expected} bytes)")
    return np.frombuffer(raster, dtype=np.uint8).reshape(height, width, 3).copy()


def save_ppm(img: np.ndarray, path: str | os.PathLike) -> None:
    validate_image(img)
    header = f"P6\n{img.shape[1]} {img.shape[0]}\n255\n".encode("ascii")
    try:
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(np.ascontiguousarray(img).tobytes())
    except OSError as exc:
        raise ImageError(f"cannot write {path}: {exc}") from exc


def _load_png(path: str | os.PathLike) -> np.ndarray:
    from PIL import Image as PILImage, UnidentifiedImageError

    try:
        with PILImage.open(path) as im:
            if im.mode == "L":
                arr = np.asarray(im, dtype=np.uint8)
                return np.repeat(arr[:, :, None], 3, axis=2)
            if im.mode == "RGB":
                return np.asarray(im, dtype=np.uint8).copy()
            raise ImageError(f"{path}: unsupported PNG mode {im.mode} (need L or RGB)")
    except UnidentifiedImageError as exc:
        raise ImageError(f"{path}: not a recognized image file") from exc
    except OSError as exc:
        raise ImageError(f"cannot read {path}: {exc}") from exc


def _save_png(img: np.ndarray, path: str | os.PathLike) -> None:
    from PIL import Image as PILImage

    validate_image(img)
    try:
        PILImage.fromarray(img, mode="RGB").save(path, format="PNG")
    except OSError as exc:
        raise ImageError(f"cannot write {path}: {exc}") from exc


def load_image(path: str | os.PathLike) -> np.ndarray:
    """Load a PPM (P6) or PNG file as an (h, w, 3) uint8 array.

    Grayscale inputs are replicated to three channels.
    """
    try:
        with open(path, "rb") as fh:
            magic = fh.read(8)
    except OSError as exc:
        raise ImageError(f"cannot read {path}: {exc}") from exc
    if magic[:2] == b"P6":
        return validate_image(load_ppm(path))
    if magic[:8] == b"\x89PNG\r\n\x1a\n":
        return validate_image(_load_png(path))
    raise ImageError(f"{path}: unsupported format (expect PPM P6 or PNG)")


def save_image(img: np.ndarray, path: str | os.PathLike) -> None:
    """Save as PPM or PNG depending on the file extension (default PPM)."""
    ext = os.path.splitext(os.fspath(path))[1].lower()
    if ext == ".png":
        _save_png(img, path)
    elif ext in (".ppm", ""):
        save_ppm(img, path)
    else:
        raise ImageError(f"unsupported output extension {ext!r} (use .ppm or .png)")
