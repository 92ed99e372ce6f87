"""Augmentation kernel catalog: registry, specs, and dispatch.

Fourteen kernels in five groups. Each registry entry fixes the kernel's
parameter schema (names, ranges, defaults) and how a 0-30 magnitude level
maps onto it: "scaled" kernels interpolate each listed parameter linearly
from 0 (identity) to its documented maximum at level 30; "gated" kernels
have no meaningful strength knob and are instead applied with probability
level/30 at their default parameters.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ValidationError
from ..rng import RngStream
from . import color, exotic, geometric, nonrigid, quality
from .color import (
    channel_permute,
    channel_shuffle,
    color_jitter,
    color_jitter_core,
    equalize,
    solarize,
    to_gray,
)
from .exotic import cutout, cutout_at, grid_shuffle_apply, grid_tiles, random_grid_shuffle
from .geometric import horizontal_flip, shift_scale_rotate, shift_scale_rotate_core
from .nonrigid import displacement_transform, elastic, grid_distortion, optical_distortion
from .quality import gauss_noise, gaussian_blur, gaussian_taps


@dataclass(frozen=True)
class ParamSpec:
    default: float
    lo: float
    hi: float
    integer: bool = False


@dataclass(frozen=True)
class KernelDef:
    name: str
    group: str
    func: object
    params: dict[str, ParamSpec] = field(default_factory=dict)
    uses_rng: bool = False
    magnitude_mode: str = "gated"  # "scaled" or "gated"
    magnitude_caps: dict[str, float] = field(default_factory=dict)


def _no_rng(fn):
    def call(img, rng, **params):
        return fn(img, **params)

    return call


def _with_rng(fn):
    def call(img, rng, **params):
        return fn(img, rng, **params)

    return call


MAGNITUDE_MAX = 30

REGISTRY: dict[str, KernelDef] = {}


def _register(kdef: KernelDef) -> None:
    REGISTRY[kdef.name] = kdef


_register(KernelDef(
    name="color_jitter", group="color", func=_with_rng(color_jitter), uses_rng=True,
    params={
        "brightness": ParamSpec(0.4, 0.0, 1.5),
        "contrast": ParamSpec(0.4, 0.0, 1.5),
        "saturation": ParamSpec(0.4, 0.0, 1.5),
        "hue": ParamSpec(0.1, 0.0, 0.5),
    },
    magnitude_mode="scaled",
    magnitude_caps={"brightness": 1.5, "contrast": 1.5, "saturation": 1.5, "hue": 0.5},
))
_register(KernelDef(name="to_gray", group="color", func=_no_rng(to_gray)))
_register(KernelDef(
    name="solarize", group="color", func=_no_rng(solarize),
    params={"threshold": ParamSpec(127, 0, 255, integer=True)},
))
_register(KernelDef(name="equalize", group="color", func=_no_rng(equalize)))
_register(KernelDef(name="channel_shuffle", group="color", func=_with_rng(channel_shuffle), uses_rng=True))

_register(KernelDef(
    name="shift_scale_rotate", group="geometric", func=_with_rng(shift_scale_rotate), uses_rng=True,
    params={
        "shift_limit": ParamSpec(0.0625, 0.0, 0.5),
        "scale_limit": ParamSpec(0.1, 0.0, 0.99),
        "rotate_limit": ParamSpec(45.0, 0.0, 180.0),
    },
    magnitude_mode="scaled",
    magnitude_caps={"shift_limit": 0.0625, "scale_limit": 0.1, "rotate_limit": 45.0},
))
_register(KernelDef(name="horizontal_flip", group="geometric", func=_no_rng(horizontal_flip)))

_register(KernelDef(
    name="elastic", group="non_rigid", func=_with_rng(elastic), uses_rng=True,
    params={
        "alpha": ParamSpec(0.5, 0.0, 50.0),
        "sigma": ParamSpec(10.0, 0.1, 50.0),
        "alpha_affine": ParamSpec(5.0, 0.0, 50.0),
    },
    magnitude_mode="scaled",
    magnitude_caps={"alpha": 0.5, "alpha_affine": 5.0},
))
_register(KernelDef(
    name="grid_distortion", group="non_rigid", func=_with_rng(grid_distortion), uses_rng=True,
    params={
        "num_steps": ParamSpec(5, 1, 20, integer=True),
        "distort_limit": ParamSpec(0.3, 0.0, 0.99),
    },
    magnitude_mode="scaled",
    magnitude_caps={"distort_limit": 0.3},
))
_register(KernelDef(
    name="optical_distortion", group="non_rigid", func=_with_rng(optical_distortion), uses_rng=True,
    params={
        "distort_limit": ParamSpec(0.5, 0.0, 2.0),
        "shift_limit": ParamSpec(0.5, 0.0, 2.0),
    },
    magnitude_mode="scaled",
    magnitude_caps={"distort_limit": 0.5, "shift_limit": 0.5},
))

_register(KernelDef(
    name="gaussian_blur", group="quality", func=_with_rng(gaussian_blur), uses_rng=True,
    params={
        "sigma_lo": ParamSpec(0.1, 0.0, 10.0),
        "sigma_hi": ParamSpec(2.0, 0.0, 10.0),
        "kernel_size": ParamSpec(0, 0, 31, integer=True),
    },
    magnitude_mode="scaled",
    magnitude_caps={"sigma_lo": 0.1, "sigma_hi": 2.0},
))
_register(KernelDef(
    name="gauss_noise", group="quality", func=_with_rng(gauss_noise), uses_rng=True,
    params={
        "var_lo": ParamSpec(10.0, 0.0, 1000.0),
        "var_hi": ParamSpec(50.0, 0.0, 1000.0),
    },
    magnitude_mode="scaled",
    magnitude_caps={"var_lo": 10.0, "var_hi": 50.0},
))

_register(KernelDef(
    name="random_grid_shuffle", group="exotic", func=_with_rng(random_grid_shuffle), uses_rng=True,
    params={"grid": ParamSpec(3, 1, 16, integer=True)},
))
_register(KernelDef(
    name="cutout", group="exotic", func=_with_rng(cutout), uses_rng=True,
    params={
        "num_holes": ParamSpec(4, 0, 64, integer=True),
        "hole_h": ParamSpec(0, 0, 4096, integer=True),
        "hole_w": ParamSpec(0, 0, 4096, integer=True),
    },
))

GROUP_ORDER = ("color", "geometric", "non_rigid", "quality", "exotic")


@dataclass(frozen=True, eq=True)
class AugmentationSpec:
    """A kernel name plus a complete, validated parameter map."""

    name: str
    params: dict

    def to_dict(self) -> dict:
        return {"name": self.name, "params": dict(self.params)}


def make_spec(name: str, **overrides) -> AugmentationSpec:
    if name not in REGISTRY:
        raise ValidationError(f"unknown augmentation {name!r}; expected one of {sorted(REGISTRY)}")
    kdef = REGISTRY[name]
    unknown = set(overrides) - set(kdef.params)
    if unknown:
        raise ValidationError(f"{name} does not define parameters {sorted(unknown)}")
    params = {}
    for pname, pspec in kdef.params.items():
        value = overrides.get(pname, pspec.default)
        if pspec.integer:
            if value != int(value):
                raise ValidationError(f"{name}.{pname} must be an integer, got {value!r}")
            value = int(value)
        else:
            value = float(value)
        if not pspec.lo <= value <= pspec.hi:
            raise ValidationError(f"{name}.{pname} must be in [{pspec.lo}, {pspec.hi}], got {value}")
        params[pname] = value
    return AugmentationSpec(name=name, params=params)


def spec_from_dict(doc: dict) -> AugmentationSpec:
    if not isinstance(doc, dict) or "name" not in doc:
        raise ValidationError(f"augmentation spec document needs a 'name' field, got {doc!r}")
    return make_spec(doc["name"], **doc.get("params", {}))


def spec_at_magnitude(name: str, magnitude: int) -> AugmentationSpec:
    """Spec for this kernel at a 0-30 magnitude level.

    Scaled kernels interpolate their listed parameters toward the level-30
    cap; gated kernels return defaults (the gate is the caller's job)."""
    if not 0 <= magnitude <= MAGNITUDE_MAX:
        raise ValidationError(f"magnitude must be in [0, {MAGNITUDE_MAX}], got {magnitude}")
    kdef = REGISTRY[name] if name in REGISTRY else None
    if kdef is None:
        raise ValidationError(f"unknown augmentation {name!r}")
    if kdef.magnitude_mode != "scaled":
        return make_spec(name)
    overrides = {p: cap * (magnitude / MAGNITUDE_MAX) for p, cap in kdef.magnitude_caps.items()}
    return make_spec(name, **overrides)


def is_gated(name: str) -> bool:
    if name not in REGISTRY:
        raise ValidationError(f"unknown augmentation {name!r}")
    return REGISTRY[name].magnitude_mode == "gated"


def apply_augmentation(spec: AugmentationSpec, img: np.ndarray, rng: RngStream) -> np.ndarray:
    """Dispatch a validated spec to its kernel."""
    if spec.name not in REGISTRY:
        raise ValidationError(f"unknown augmentation {spec.name!r}")
    return REGISTRY[spec.name].func(img, rng, **spec.params)


def registry_doc() -> dict:
    """Machine-readable registry: parameter schema per kernel."""
    doc = {}
    for name, kdef in REGISTRY.items():
        doc[name] = {
            "group": kdef.group,
            "uses_rng": kdef.uses_rng,
            "magnitude_mode": kdef.magnitude_mode,
            "params": {
                p: {"default": ps.default, "lo": ps.lo, "hi": ps.hi, "integer": ps.integer}
                for p, ps in kdef.params.items()
            },
        }
    return doc


__all__ = [
    "AugmentationSpec",
    "GROUP_ORDER",
    "KernelDef",
    "MAGNITUDE_MAX",
    "ParamSpec",
    "REGISTRY",
    "apply_augmentation",
    "channel_permute",
    "channel_shuffle",
    "color",
    "color_jitter",
    "color_jitter_core",
    "cutout",
    "cutout_at",
    "displacement_transform",
    "elastic",
    "equalize",
    "exotic",
    "gauss_noise",
    "gaussian_blur",
    "gaussian_taps",
    "geometric",
    "grid_distortion",
    "grid_shuffle_apply",
    "grid_tiles",
    "horizontal_flip",
    "is_gated",
    "make_spec",
    "nonrigid",
    "optical_distortion",
    "quality",
    "random_grid_shuffle",
    "registry_doc",
    "shift_scale_rotate",
    "shift_scale_rotate_core",
    "solarize",
    "spec_at_magnitude",
    "spec_from_dict",
    "to_gray",
]
