"""Policy engine: group-structured sampling and the comparison policies.

The group-structured policy draws T augmentation sequences; each sequence
picks a group from a categorical distribution over normalized group
probabilities, then draws that group's count of distinct members uniformly
without replacement. The comparison policies (the two-view baseline, the
flat magnitude-level sampler, and the color/geometric split sampler) share
the ``apply(img, rng)`` interface and the serialization envelope with a
``kind`` discriminator.

Draw-order contract (cross-implementation parity depends on it):

* group-structured draw: per sequence, one categorical uniform, then one
  uniform per without-replacement pick (even for the forced last pick),
* baseline: crop draws (per attempt: area, log-aspect, then row/column
  offsets when the attempt fits), then one gate uniform per stage in apply
  order; a passing stage's kernel draws follow its gate immediately,
* flat sampler: per op, one index uniform, then the gate uniform for gated
  kernels, then the applied kernel's own draws,
* split sampler: one gate uniform, then color ops, then geometric ops,
  each op as in the flat sampler minus the index draw's catalog being the
  group.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateConfigError, ValidationError
from .image import quantize, validate_image
from .kernels import (
    GROUP_ORDER,
    MAGNITUDE_MAX,
    REGISTRY,
    AugmentationSpec,
    apply_augmentation,
    is_gated,
    make_spec,
    spec_at_magnitude,
    spec_from_dict,
)
from .resample import warp_bicubic
from .rng import RngStream

POLICY_KINDS = ("group_augment", "simsiam_baseline", "randaugment", "smartaugment")


@dataclass(frozen=True)
class AugmentationGroup:
    id: str
    members: tuple

    def __post_init__(self):
        if not self.members:
            raise ValidationError(f"group {self.id!r} has no members")


def default_catalog() -> list[AugmentationGroup]:
    """The five built-in groups with their fixed kernel parameters."""
    groups = []
    for gid in GROUP_ORDER:
        members = tuple(make_spec(name) for name, kdef in REGISTRY.items() if kdef.group == gid)
        groups.append(AugmentationGroup(id=gid, members=members))
    return groups


def normalize_probs(raw) -> list[float]:
    """Scale nonnegative weights to sum to 1, preserving order and ratios."""
    raw = list(raw)
    if any(p < 0 for p in raw):
        raise ValidationError(f"negative weight in {raw}")
    total = 0.0
    for p in raw:
        total += p
    if total <= 0.0:
        raise DegenerateConfigError("all group probabilities are zero; nothing can be sampled")
    return [p / total for p in raw]


class GroupAugmentPolicy:
    """T sequences; each picks a group by probability then draws that
    group's count of distinct members without replacement."""

    kind = "group_augment"

    def __init__(self, probs, counts, total: int, groups: list[AugmentationGroup] | None = None):
        self.groups = list(groups) if groups is not None else default_catalog()
        self.raw_probs = [float(p) for p in probs]
        self.probs = normalize_probs(self.raw_probs)
        self.counts = [int(c) for c in counts]
        self.total = int(total)
        if not (len(self.groups) == len(self.probs) == len(self.counts)):
            raise ValidationError(
                f"groups/probs/counts lengths differ: {len(self.groups)}/{len(self.probs)}/{len(self.counts)}"
            )
        if self.total < 1:
            raise ValidationError(f"total sequence count must be >= 1, got {total}")
        for group, count in zip(self.groups, self.counts):
            if count < 1:
                raise ValidationError(f"draw count for group {group.id!r} must be >= 1, got {count}")
            if count > len(group.members):
                raise ValidationError(
                    f"draw count {count} exceeds group {group.id!r} size {len(group.members)}"
                )

    def sample_sequences(self, rng: RngStream) -> list[list[AugmentationSpec]]:
        sequences = []
        for _ in range(self.total):
            g = rng.categorical(self.probs)
            group = self.groups[g]
            picks = rng.sample_without_replacement(len(group.members), self.counts[g])
            sequences.append([group.members[i] for i in picks])
        return sequences

    def apply(self, img: np.ndarray, rng: RngStream) -> np.ndarray:
        for seq in self.sample_sequences(rng):
            for spec in seq:
                img = apply_augmentation(spec, img, rng)
        return img

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "probs": self.raw_probs,
            "counts": self.counts,
            "total": self.total,
            "groups": [
                {"id": g.id, "members": [m.to_dict() for m in g.members]} for g in self.groups
            ],
        }


def sample_policy_draw(policy: GroupAugmentPolicy, rng: RngStream) -> list[list[AugmentationSpec]]:
    return policy.sample_sequences(rng)


def apply_policy(policy, img: np.ndarray, rng: RngStream) -> np.ndarray:
    """Left-fold of the policy's sampled augmentations over the image, one
    fresh draw per call."""
    validate_image(img)
    return policy.apply(img, rng)


def group_augment_policy_from_values(values: dict, groups: list[AugmentationGroup] | None = None) -> GroupAugmentPolicy:
    """Build the policy from a group_augment search-space configuration."""
    probs = [values[f"p_{gid}_transformations"] for gid in GROUP_ORDER]
    counts = [values[f"num_{gid}_transformations"] for gid in GROUP_ORDER]
    return GroupAugmentPolicy(probs, counts, values["num_total_group_samples"], groups=groups)


def random_resized_crop(img: np.ndarray, rng: RngStream, scale_lo: float = 0.2, scale_hi: float = 1.0) -> np.ndarray:
    """Crop a random area/aspect region (10 attempts, whole image as the
    fallback) and resize it back to the input size, bicubic."""
    validate_image(img)
    h, w, _ = img.shape
    log_lo, log_hi = math.log(3.0 / 4.0), math.log(4.0 / 3.0)
    region = None
    for _ in range(10):
        area = rng.uniform_range(scale_lo, scale_hi) * (h * w)
        aspect = math.exp(rng.uniform_range(log_lo, log_hi))
        tw = int(round(math.sqrt(area * aspect)))
        th = int(round(math.sqrt(area / aspect)))
        if 1 <= tw <= w and 1 <= th <= h:
            y0 = rng.randbelow(h - th + 1)
            x0 = rng.randbelow(w - tw + 1)
            region = (y0, x0, th, tw)
            break
    if region is None:
        region = (0, 0, h, w)
    y0, x0, th, tw = region
    if (th, tw) == (h, w) and (y0, x0) == (0, 0):
        return img.copy()
    ys = (np.arange(h, dtype=np.float64) + 0.5) * (th / h) - 0.5 + y0
    xs = (np.arange(w, dtype=np.float64) + 0.5) * (tw / w) - 0.5 + x0
    map_y, map_x = np.meshgrid(ys, xs, indexing="ij")
    return quantize(warp_bicubic(img.astype(np.float64), map_x, map_y))


class SimSiamBaselinePolicy:
    """The two-view baseline pipeline: fixed random resized crop, then
    probabilistic flip, color jitter, grayscale, and solarize."""

    kind = "simsiam_baseline"

    def __init__(
        self,
        p_colorjitter: float = 0.8,
        p_grayscale: float = 0.2,
        p_horizontal_flip: float = 0.5,
        p_solarize: float = 0.2,
        brightness_strength: float = 0.4,
        contrast_strength: float = 0.4,
        saturation_strength: float = 0.4,
        hue_strength: float = 0.1,
        solarize_threshold: int = 127,
    ):
        for name, v, hi in (
            ("p_colorjitter", p_colorjitter, 1.0),
            ("p_grayscale", p_grayscale, 1.0),
            ("p_horizontal_flip", p_horizontal_flip, 1.0),
            ("p_solarize", p_solarize, 1.0),
            ("brightness_strength", brightness_strength, 1.5),
            ("contrast_strength", contrast_strength, 1.5),
            ("saturation_strength", saturation_strength, 1.5),
            ("hue_strength", hue_strength, 0.5),
        ):
            if not 0.0 <= v <= hi:
                raise ValidationError(f"{name} must be in [0, {hi}], got {v}")
        if not (isinstance(solarize_threshold, int) and 0 <= solarize_threshold <= 255):
            raise ValidationError(f"solarize_threshold must be an integer in [0, 255], got {solarize_threshold!r}")
        self.p_colorjitter = float(p_colorjitter)
        self.p_grayscale = float(p_grayscale)
        self.p_horizontal_flip = float(p_horizontal_flip)
        self.p_solarize = float(p_solarize)
        self.brightness_strength = float(brightness_strength)
        self.contrast_strength = float(contrast_strength)
        self.saturation_strength = float(saturation_strength)
        self.hue_strength = float(hue_strength)
        self.solarize_threshold = int(solarize_threshold)

    def apply(self, img: np.ndarray, rng: RngStream) -> np.ndarray:
        img = random_resized_crop(img, rng)
        if rng.uniform() < self.p_horizontal_flip:
            img = apply_augmentation(make_spec("horizontal_flip"), img, rng)
        if rng.uniform() < self.p_colorjitter:
            spec = make_spec(
                "color_jitter",
                brightness=self.brightness_strength,
                contrast=self.contrast_strength,
                saturation=self.saturation_strength,
                hue=self.hue_strength,
            )
            img = apply_augmentation(spec, img, rng)
        if rng.uniform() < self.p_grayscale:
            img = apply_augmentation(make_spec("to_gray"), img, rng)
        if rng.uniform() < self.p_solarize:
            img = apply_augmentation(make_spec("solarize", threshold=self.solarize_threshold), img, rng)
        return img

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "p_colorjitter": self.p_colorjitter,
            "p_grayscale": self.p_grayscale,
            "p_horizontal_flip": self.p_horizontal_flip,
            "p_solarize": self.p_solarize,
            "brightness_strength": self.brightness_strength,
            "contrast_strength": self.contrast_strength,
            "saturation_strength": self.saturation_strength,
            "hue_strength": self.hue_strength,
            "solarize_threshold": self.solarize_threshold,
        }


def make_baseline_policy(**params) -> SimSiamBaselinePolicy:
    return SimSiamBaselinePolicy(**params)


def _apply_at_magnitude(img: np.ndarray, name: str, magnitude: int, rng: RngStream) -> np.ndarray:
    """One flat-catalog op at a 0-30 level: gated kernels fire with
    probability level/30; scaled kernels run with interpolated parameters."""
    if is_gated(name):
        if rng.uniform() < magnitude / MAGNITUDE_MAX:
            return apply_augmentation(make_spec(name), img, rng)
        return img
    return apply_augmentation(spec_at_magnitude(name, magnitude), img, rng)


class RandAugmentPolicy:
    """num_ops draws with replacement from the flat catalog, each applied
    at one shared magnitude level."""

    kind = "randaugment"

    def __init__(self, num_ops: int = 3, magnitude: int = 4):
        if not (isinstance(num_ops, int) and 1 <= num_ops <= 15):
            raise ValidationError(f"num_ops must be an integer in [1, 15], got {num_ops!r}")
        if not (isinstance(magnitude, int) and 0 <= magnitude <= MAGNITUDE_MAX):
            raise ValidationError(f"magnitude must be an integer in [0, {MAGNITUDE_MAX}], got {magnitude!r}")
        self.num_ops = num_ops
        self.magnitude = magnitude
        self._names = list(REGISTRY)

    def apply(self, img: np.ndarray, rng: RngStream) -> np.ndarray:
        for _ in range(self.num_ops):
            name = self._names[rng.randbelow(len(self._names))]
            img = _apply_at_magnitude(img, name, self.magnitude, rng)
        return img

    def to_dict(self) -> dict:
        return {"kind": self.kind, "num_ops": self.num_ops, "magnitude": self.magnitude}


def make_randaugment_policy(num_ops: int = 3, magnitude: int = 4) -> RandAugmentPolicy:
    return RandAugmentPolicy(num_ops, magnitude)


class SmartAugmentPolicy:
    """With probability p_apply_ops: num_col_ops color draws then
    num_geo_ops geometric draws, both with replacement, at per-group
    magnitude levels."""

    kind = "smartaugment"

    def __init__(
        self,
        num_col_ops: int = 2,
        num_geo_ops: int = 1,
        col_magnitude: int = 4,
        geo_magnitude: int = 4,
        p_apply_ops: float = 1.0,
    ):
        if not (isinstance(num_col_ops, int) and 1 <= num_col_ops <= 9):
            raise ValidationError(f"num_col_ops must be an integer in [1, 9], got {num_col_ops!r}")
        if not (isinstance(num_geo_ops, int) and 1 <= num_geo_ops <= 5):
            raise ValidationError(f"num_geo_ops must be an integer in [1, 5], got {num_geo_ops!r}")
        for name, v in (("col_magnitude", col_magnitude), ("geo_magnitude", geo_magnitude)):
            if not (isinstance(v, int) and 0 <= v <= MAGNITUDE_MAX):
                raise ValidationError(f"{name} must be an integer in [0, {MAGNITUDE_MAX}], got {v!r}")
        if not 0.0 <= p_apply_ops <= 1.0:
            raise ValidationError(f"p_apply_ops must be in [0, 1], got {p_apply_ops}")
        self.num_col_ops = num_col_ops
        self.num_geo_ops = num_geo_ops
        self.col_magnitude = col_magnitude
        self.geo_magnitude = geo_magnitude
        self.p_apply_ops = float(p_apply_ops)
        self._color = [name for name, k in REGISTRY.items() if k.group == "color"]
        self._geometric = [name for name, k in REGISTRY.items() if k.group == "geometric"]

    def apply(self, img: np.ndarray, rng: RngStream) -> np.ndarray:
        if rng.uniform() >= self.p_apply_ops:
            return img
        for _ in range(self.num_col_ops):
            name = self._color[rng.randbelow(len(self._color))]
            img = _apply_at_magnitude(img, name, self.col_magnitude, rng)
        for _ in range(self.num_geo_ops):
            name = self._geometric[rng.randbelow(len(self._geometric))]
            img = _apply_at_magnitude(img, name, self.geo_magnitude, rng)
        return img

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "num_col_ops": self.num_col_ops,
            "num_geo_ops": self.num_geo_ops,
            "col_magnitude": self.col_magnitude,
            "geo_magnitude": self.geo_magnitude,
            "p_apply_ops": self.p_apply_ops,
        }


def make_smartaugment_policy(**params) -> SmartAugmentPolicy:
    return SmartAugmentPolicy(**params)


def policy_from_dict(doc: dict):
    if not isinstance(doc, dict) or "kind" not in doc:
        raise ValidationError("policy document needs a 'kind' field")
    kind = doc["kind"]
    body = {k: v for k, v in doc.items() if k != "kind"}
    if kind == "group_augment":
        groups = None
        if "groups" in body:
            groups = [
                AugmentationGroup(
                    id=g["id"], members=tuple(spec_from_dict(m) for m in g["members"])
                )
                for g in body.pop("groups")
            ]
        return GroupAugmentPolicy(body["probs"], body["counts"], body["total"], groups=groups)
    if kind == "simsiam_baseline":
        return SimSiamBaselinePolicy(**body)
    if kind == "randaugment":
        return RandAugmentPolicy(**body)
    if kind == "smartaugment":
        return SmartAugmentPolicy(**body)
    raise ValidationError(f"unknown policy kind {kind!r}; expected one of {POLICY_KINDS}")


def policy_to_json(policy) -> str:
    return json.dumps(policy.to_dict(), indent=2, sort_keys=True)


def policy_from_json(text: str):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"policy file is not valid JSON: {exc}") from exc
    return policy_from_dict(doc)


def format_sequences(sequences: list[list[AugmentationSpec]]) -> str:
    """Human-oriented one-line-per-sequence rendering of a draw."""
    lines = []
    for t, seq in enumerate(sequences):
        lines.append(f"sequence {t}: " + " -> ".join(spec.name for spec in seq))
    return "\n".join(lines)
