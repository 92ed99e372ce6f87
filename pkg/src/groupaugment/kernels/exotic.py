"""Exotic-group kernels: occlusion and tile shuffling."""

from __future__ import annotations

import numpy as np

from ..errors import ValidationError
from ..image import validate_image
from ..rng import RngStream


def cutout_at(img: np.ndarray, holes: list[tuple[int, int]], hole_h: int, hole_w: int) -> np.ndarray:
    """Zero-fill rectangles with the given top-left corners, clipped."""
    validate_image(img)
    out = img.copy()
    for y0, x0 in holes:
        out[y0 : y0 + hole_h, x0 : x0 + hole_w, :] = 0
    return out


def cutout(
    img: np.ndarray,
    rng: RngStream,
    num_holes: int = 4,
    hole_h: int = 0,
    hole_w: int = 0,
) -> np.ndarray:
    """num_holes zero-filled rectangles at uniform top-left corners, clipped
    at the borders. Hole dims 0 auto-size to ceil(side/8). Draws: per hole,
    row then column."""
    validate_image(img)
    h, w, _ = img.shape
    if num_holes < 0:
        raise ValidationError(f"num_holes must be >= 0, got {num_holes}")
    hh = hole_h if hole_h else -(-h // 8)
    ww = hole_w if hole_w else -(-w // 8)
    if hh > h or ww > w or hh < 1 or ww < 1:
        raise ValidationError(f"hole {hh}x{ww} does not fit image {h}x{w}")
    holes = []
    for _ in range(num_holes):
        y0 = rng.randbelow(h)
        x0 = rng.randbelow(w)
        holes.append((y0, x0))
    return cutout_at(img, holes, hh, ww)


def grid_tiles(h: int, w: int, grid: int) -> list[tuple[int, int, int, int]]:
    """Tile boxes (y0, x0, th, tw), row-major; last row/column absorbs any
    remainder."""
    th, tw = h // grid, w // grid
    boxes = []
    for gy in range(grid):
        for gx in range(grid):
            y0, x0 = gy * th, gx * tw
            hh = th if gy < grid - 1 else h - y0
            ww = tw if gx < grid - 1 else w - x0
            boxes.append((y0, x0, hh, ww))
    return boxes


def grid_shuffle_apply(img: np.ndarray, grid: int, perms: dict) -> np.ndarray:
    """Permute tiles within each equal-shape class; perms maps a (th, tw)
    shape to a permutation of that class's members in row-major order."""
    validate_image(img)
    boxes = grid_tiles(img.shape[0], img.shape[1], grid)
    classes: dict[tuple[int, int], list[int]] = {}
    for i, (_, _, th, tw) in enumerate(boxes):
        classes.setdefault((th, tw), []).append(i)
    out = img.copy()
    for shape_key in sorted(classes):
        members = classes[shape_key]
        perm = perms.get(shape_key)
        if perm is None:
            continue
        if sorted(perm) != list(range(len(members))):
            raise ValidationError(f"bad permutation for tile class {shape_key}: {perm}")
        for dst_pos, src_pos in enumerate(perm):
            dy, dx, th, tw = boxes[members[dst_pos]]
            sy, sx, _, _ = boxes[members[src_pos]]
            out[dy : dy + th, dx : dx + tw, :] = img[sy : sy + th, sx : sx + tw, :]
    return out


def random_grid_shuffle(img: np.ndarray, rng: RngStream, grid: int = 3) -> np.ndarray:
    """Uniformly permute the grid x grid tiles, equal shapes exchanged only
    with each other. Draws: one shuffle per shape class, classes in sorted
    (th, tw) order."""
    validate_image(img)
    h, w, _ = img.shape
    if grid < 1 or grid > min(h, w):
        raise ValidationError(f"grid must be in [1, min(h, w)] = [1, {min(h, w)}], got {grid}")
    boxes = grid_tiles(h, w, grid)
    classes: dict[tuple[int, int], list[int]] = {}
    for i, (_, _, th, tw) in enumerate(boxes):
        classes.setdefault((th, tw), []).append(i)
    perms = {key: rng.shuffled(len(classes[key])) for key in sorted(classes)}
    return grid_shuffle_apply(img, grid, perms)
