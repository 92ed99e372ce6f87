"""Typed hyperparameter spaces with expert priors.

Five builtin spaces reproduce the published search-space tables row for row.
Priors are truncated Gaussians centered at each dimension's default on the
dimension's prior scale (the log-transformed axis for log dimensions, the
raw axis otherwise); ``prior_density`` returns density with respect to that
prior-scale coordinate, so the mode sits at the default and quadrature over
the prior scale integrates to 1. Confidence maps to a standard deviation of
{low: 0.5, medium: 0.25, high: 0.125} times the prior-scale range width.

Sampling consumes exactly one uniform per dimension (inverse-CDF for
numeric dims, one categorical draw otherwise), which keeps draw positions
independent of dimension values.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import ndtr, ndtri

from .errors import ValidationError
from .rng import RngStream

DIMENSION_KINDS = ("float", "integer", "categorical")
CONFIDENCE_SIGMA = {"low": 0.5, "medium": 0.25, "high": 0.125}
BUILTIN_SPACE_NAMES = (
    "simsiam_aug",
    "simsiam_training",
    "group_augment",
    "randaugment",
    "smartaugment",
)

_SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class Dimension:
    name: str
    kind: str
    default: object
    lo: float | None = None
    hi: float | None = None
    choices: tuple | None = None
    log_scale: bool = False
    prior_confidence: str = "medium"
    uniform_prior: bool = False

    def __post_init__(self):
        if self.kind not in DIMENSION_KINDS:
            raise ValidationError(f"dimension {self.name!r}: unknown kind {self.kind!r}")
        if self.prior_confidence not in CONFIDENCE_SIGMA:
            raise ValidationError(
                f"dimension {self.name!r}: unknown prior_confidence {self.prior_confidence!r}"
            )
        if self.kind == "categorical":
            if not self.choices:
                raise ValidationError(f"dimension {self.name!r}: categorical needs choices")
            object.__setattr__(self, "choices", tuple(self.choices))
            if len(set(self.choices)) != len(self.choices):
                raise ValidationError(f"dimension {self.name!r}: duplicate choices")
            if self.log_scale:
                raise ValidationError(f"dimension {self.name!r}: categorical cannot be log-scaled")
            if self.default not in self.choices:
                raise ValidationError(
                    f"dimension {self.name!r}: default {self.default!r} not among choices"
                )
            return
        if self.lo is None or self.hi is None:
            raise ValidationError(f"dimension {self.name!r}: numeric dims need lo and hi")
        if not self.lo < self.hi:
            raise ValidationError(f"dimension {self.name!r}: lo must be < hi, got [{self.lo}, {self.hi}]")
        if self.log_scale and self.lo <= 0:
            raise ValidationError(f"dimension {self.name!r}: log scale requires lo > 0")
        if self.kind == "integer":
            for label, v in (("lo", self.lo), ("hi", self.hi)):
                if int(v) != v:
                    raise ValidationError(f"dimension {self.name!r}: integer {label} must be whole, got {v}")
        if not self.contains(self.default):
            raise ValidationError(
                f"dimension {self.name!r}: default {self.default!r} outside [{self.lo}, {self.hi}]"
            )

    def contains(self, value) -> bool:
        if self.kind == "categorical":
            return value in self.choices
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            return False
        if self.kind == "integer" and int(value) != value:
            return False
        return self.lo <= value <= self.hi

    def to_prior_scale(self, value: float) -> float:
        return math.log(value) if self.log_scale else float(value)

    def from_prior_scale(self, t: float) -> float:
        v = math.exp(t) if self.log_scale else t
        return min(self.hi, max(self.lo, v))

    def to_dict(self) -> dict:
        doc = {
            "name": self.name,
            "kind": self.kind,
            "default": self.default,
            "log_scale": self.log_scale,
            "prior_confidence": self.prior_confidence,
            "uniform_prior": self.uniform_prior,
        }
        if self.kind == "categorical":
            doc["choices"] = list(self.choices)
        else:
            doc["range"] = [self.lo, self.hi]
        return doc


def dimension_from_dict(doc: dict) -> Dimension:
    body = dict(doc)
    rng_pair = body.pop("range", None)
    if rng_pair is not None:
        body["lo"], body["hi"] = rng_pair
    if "choices" in body:
        body["choices"] = tuple(body["choices"])
    try:
        return Dimension(**body)
    except TypeError as exc:
        raise ValidationError(f"bad dimension document: {exc}") from exc


@dataclass(frozen=True)
class SearchSpace:
    name: str
    dimensions: tuple

    def __post_init__(self):
        object.__setattr__(self, "dimensions", tuple(self.dimensions))
        names = [d.name for d in self.dimensions]
        if len(set(names)) != len(names):
            raise ValidationError(f"space {self.name!r}: duplicate dimension names")
        if not self.dimensions:
            raise ValidationError(f"space {self.name!r}: no dimensions")

    @property
    def names(self) -> list[str]:
        return [d.name for d in self.dimensions]

    def dim(self, name: str) -> Dimension:
        for d in self.dimensions:
            if d.name == name:
                return d
        raise ValidationError(f"space {self.name!r} has no dimension {name!r}")

    def defaults(self) -> dict:
        return {d.name: d.default for d in self.dimensions}

    def validate_values(self, values: dict) -> None:
        extra = set(values) - set(self.names)
        if extra:
            raise ValidationError(f"space {self.name!r}: unknown dimensions {sorted(extra)}")
        for d in self.dimensions:
            if d.name not in values:
                raise ValidationError(f"space {self.name!r}: missing value for {d.name!r}")
            if not d.contains(values[d.name]):
                raise ValidationError(
                    f"space {self.name!r}: value {values[d.name]!r} out of range for {d.name!r}"
                )

    def to_dict(self) -> dict:
        return {"name": self.name, "dimensions": [d.to_dict() for d in self.dimensions]}


def space_from_dict(doc: dict) -> SearchSpace:
    if not isinstance(doc, dict) or "name" not in doc or "dimensions" not in doc:
        raise ValidationError("space document needs 'name' and 'dimensions'")
    return SearchSpace(doc["name"], tuple(dimension_from_dict(d) for d in doc["dimensions"]))


def space_to_json(space: SearchSpace) -> str:
    return json.dumps(space.to_dict(), indent=2)


def space_from_json(text: str) -> SearchSpace:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"space file is not valid JSON: {exc}") from exc
    return space_from_dict(doc)


@dataclass(frozen=True)
class Configuration:
    space: SearchSpace
    values: dict = field(compare=False)

    def __post_init__(self):
        object.__setattr__(self, "values", dict(self.values))
        self.space.validate_values(self.values)

    def to_dict(self) -> dict:
        return {"space": self.space.name, "values": dict(self.values)}


def _float_dim(name, lo, hi, default, log=False):
    return Dimension(name=name, kind="float", lo=lo, hi=hi, default=default, log_scale=log)


def _int_dim(name, lo, hi, default):
    return Dimension(name=name, kind="integer", lo=lo, hi=hi, default=default)


_BUILTIN_BUILDERS = {
    "simsiam_aug": lambda: SearchSpace(
        "simsiam_aug",
        (
            _float_dim("p_colorjitter", 0.0, 1.0, 0.8),
            _float_dim("p_grayscale", 0.0, 1.0, 0.2),
            _float_dim("p_horizontal_flip", 0.0, 1.0, 0.5),
            _float_dim("p_solarize", 0.0, 1.0, 0.2),
            _float_dim("brightness_strength", 0.0, 1.5, 0.4),
            _float_dim("contrast_strength", 0.0, 1.5, 0.4),
            _float_dim("saturation_strength", 0.0, 1.5, 0.4),
            _float_dim("hue_strength", 0.0, 0.5, 0.1),
            _int_dim("solarize_threshold", 0, 255, 127),
        ),
    ),
    "simsiam_training": lambda: SearchSpace(
        "simsiam_training",
        (
            _float_dim("learning_rate", 0.003, 0.3, 0.03, log=True),
            _int_dim("warmup_epochs", 0, 80, 0),
            _float_dim("warmup_multiplier", 1.0, 3.0, 1.0),
            Dimension(
                name="optimizer",
                kind="categorical",
                choices=("AdamW", "SGD", "LARS"),
                default="SGD",
            ),
            _float_dim("weight_decay_start", 5e-6, 5e-2, 5e-4, log=True),
            _float_dim("weight_decay_end", 5e-6, 5e-2, 5e-4, log=True),
        ),
    ),
    "group_augment": lambda: SearchSpace(
        "group_augment",
        (
            _float_dim("p_color_transformations", 0.0, 1.0, 0.5),
            _float_dim("p_geometric_transformations", 0.0, 1.0, 0.5),
            _float_dim("p_non_rigid_transformations", 0.0, 1.0, 0.0),
            _float_dim("p_quality_transformations", 0.0, 1.0, 0.0),
            _float_dim("p_exotic_transformations", 0.0, 1.0, 0.0),
            _int_dim("num_color_transformations", 1, 5, 1),
            _int_dim("num_geometric_transformations", 1, 2, 1),
            _int_dim("num_non_rigid_transformations", 1, 3, 1),
            _int_dim("num_quality_transformations", 1, 2, 1),
            _int_dim("num_exotic_transformations", 1, 2, 1),
            _int_dim("num_total_group_samples", 1, 5, 1),
        ),
    ),
    "randaugment": lambda: SearchSpace(
        "randaugment",
        (
            _int_dim("num_ops", 1, 15, 3),
            _int_dim("magnitude", 0, 30, 4),
        ),
    ),
    "smartaugment": lambda: SearchSpace(
        "smartaugment",
        (
            _int_dim("num_col_ops", 1, 9, 2),
            _int_dim("num_geo_ops", 1, 5, 1),
            _int_dim("col_magnitude", 0, 30, 4),
            _int_dim("geo_magnitude", 0, 30, 4),
            _float_dim("p_apply_ops", 0.0, 1.0, 1.0),
        ),
    ),
}


def builtin_space(name: str) -> SearchSpace:
    try:
        builder = _BUILTIN_BUILDERS[name]
    except KeyError:
        raise ValidationError(
            f"unknown builtin space {name!r}; expected one of {BUILTIN_SPACE_NAMES}"
        ) from None
    return builder()


@lru_cache(maxsize=None)
def _prior_params(dim: Dimension):
    """(t_lo, t_hi, width, mu, sigma, cdf_lo, cdf_hi) on the prior scale."""
    t_lo = dim.to_prior_scale(dim.lo)
    t_hi = dim.to_prior_scale(dim.hi)
    width = t_hi - t_lo
    mu = dim.to_prior_scale(dim.default)
    sigma = CONFIDENCE_SIGMA[dim.prior_confidence] * width
    cdf_lo = float(ndtr((t_lo - mu) / sigma))
    cdf_hi = float(ndtr((t_hi - mu) / sigma))
    return t_lo, t_hi, width, mu, sigma, cdf_lo, cdf_hi


def categorical_prior_weights(dim: Dimension) -> list[float]:
    k = len(dim.choices)
    if dim.uniform_prior or k == 1:
        return [1.0 / k] * k
    rest = 0.5 / (k - 1)
    return [0.5 if c == dim.default else rest for c in dim.choices]


def prior_density(dim: Dimension, value) -> float:
    """Density at ``value`` with respect to the dimension's prior-scale
    coordinate (probability mass for categorical dims)."""
    if dim.kind == "categorical":
        if value not in dim.choices:
            raise ValidationError(f"{value!r} is not a choice of {dim.name!r}")
        return categorical_prior_weights(dim)[dim.choices.index(value)]
    # integer dims keep a continuous-relaxation prior, so no integrality check
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not dim.lo <= value <= dim.hi:
        raise ValidationError(f"value {value!r} out of range for {dim.name!r}")
    t_lo, t_hi, width, mu, sigma, cdf_lo, cdf_hi = _prior_params(dim)
    if dim.uniform_prior:
        return 1.0 / width
    t = dim.to_prior_scale(value)
    z = (t - mu) / sigma
    return math.exp(-0.5 * z * z) / (_SQRT_2PI * sigma * (cdf_hi - cdf_lo))


def _sample_dim(dim: Dimension, rng: RngStream):
    if dim.kind == "categorical":
        return dim.choices[rng.categorical(categorical_prior_weights(dim))]
    t_lo, t_hi, width, mu, sigma, cdf_lo, cdf_hi = _prior_params(dim)
    u = rng.uniform()
    if dim.uniform_prior:
        t = t_lo + u * width
    else:
        t = mu + sigma * float(ndtri(cdf_lo + u * (cdf_hi - cdf_lo)))
    v = dim.from_prior_scale(min(t_hi, max(t_lo, t)))
    if dim.kind == "integer":
        return int(min(dim.hi, max(dim.lo, math.floor(v + 0.5))))
    return v


def sample_from_prior(space: SearchSpace, rng: RngStream) -> Configuration:
    """One prior draw per dimension, in declaration order."""
    return Configuration(space, {d.name: _sample_dim(d, rng) for d in space.dimensions})


def config_prior_density(cfg: Configuration) -> float:
    """Product of per-dimension prior densities."""
    out = 1.0
    for d in cfg.space.dimensions:
        out *= prior_density(d, cfg.values[d.name])
    return out


def to_unit_cube(cfg: Configuration) -> np.ndarray:
    coords = np.empty(len(cfg.space.dimensions), dtype=np.float64)
    for i, d in enumerate(cfg.space.dimensions):
        v = cfg.values[d.name]
        if d.kind == "categorical":
            k = len(d.choices)
            coords[i] = 0.0 if k == 1 else d.choices.index(v) / (k - 1)
        else:
            t_lo, t_hi, width, *_ = _prior_params(d)
            coords[i] = (d.to_prior_scale(v) - t_lo) / width
    return coords


def from_unit_cube(vector, space: SearchSpace) -> Configuration:
    vec = np.asarray(vector, dtype=np.float64)
    if vec.shape != (len(space.dimensions),):
        raise ValidationError(
            f"vector length {vec.shape} does not match space dimensionality {len(space.dimensions)}"
        )
    if np.any(vec < 0.0) or np.any(vec > 1.0):
        raise ValidationError("unit-cube vector has coordinates outside [0, 1]")
    values = {}
    for u, d in zip(vec, space.dimensions):
        if d.kind == "categorical":
            k = len(d.choices)
            idx = 0 if k == 1 else int(math.floor(float(u) * (k - 1) + 0.5))
            values[d.name] = d.choices[idx]
            continue
        t_lo, t_hi, width, *_ = _prior_params(d)
        if u == 0.0:
            v = float(d.lo)
        elif u == 1.0:
            v = float(d.hi)
        else:
            v = d.from_prior_scale(t_lo + float(u) * width)
        if d.kind == "integer":
            v = int(min(d.hi, max(d.lo, math.floor(v + 0.5))))
        values[d.name] = v
    return Configuration(space, values)
