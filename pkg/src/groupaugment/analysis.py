"""Post-hoc study tooling: fANOVA importances and per-dimension densities.

Importance is computed on the unit-cube parameterization, so log-scaled
dimensions count on their log axis and categorical dimensions on their
ordinal encoding.  A random forest (the same construction the optimizer
uses as its surrogate) is fit to (coords, score) pairs; for every tree the
exact first-order variance contribution of each dimension is obtained by
integrating the tree's piecewise-constant prediction over its leaf boxes
under the uniform measure on the cube.  Contributions are summed across
trees and normalized by the summed total variance, which keeps the
first-order shares nonnegative with a sum of at most 1; interactions
account for the remainder.  Collapsed trials are excluded from the fit;
imputed collapse scores would otherwise dominate the variance.

Densities use a Gaussian kernel with Silverman's bandwidth
0.9 * min(std, IQR / 1.34) * n**(-1/5), evaluated on a 256-point grid over
the raw range and renormalized to integrate to one under the trapezoid
rule.  The bandwidth is floored at one grid cell so the grid can resolve
the kernel; a degenerate sample (zero spread) falls back to a narrow
kernel at the shared value.  Categorical dimensions report per-choice
sample frequencies instead of a KDE.
"""

from __future__ import annotations

import csv
import json
import math
from collections import Counter
from dataclasses import asdict, dataclass

import numpy as np

from .bo import SurrogateConfig, Trial, fit_forest
from .errors import InsufficientTrialsError, ValidationError
from .space import SearchSpace, to_unit_cube

IMPORTANCE_SUBSETS = ("all", "best")
DENSITY_GROUPS = ("top", "bad", "all", "collapsed")
EXPORT_FORMATS = ("csv", "structured-text")
DEFAULT_BEST_FRACTION = 0.25
DEFAULT_TOP_FRACTION = 0.2
DEFAULT_BAD_FRACTION = 0.2
GRID_POINTS = 256


@dataclass(frozen=True)
class ImportanceReport:
    space_name: str
    dimensions: tuple
    subset: str
    shares: tuple
    display_percent: tuple
    n_trials: int
    top_fraction: float
    constant_scores: bool

    def __post_init__(self):
        if len(self.shares) != len(self.dimensions):
            raise ValidationError("importance report shares do not match dimensions")
        if any(s < 0 for s in self.shares):
            raise ValidationError("importance shares must be nonnegative")
        if sum(self.shares) > 1 + 1e-6:
            raise ValidationError("first-order importance shares cannot exceed 1")


@dataclass(frozen=True)
class DensityGroup:
    name: str
    n_trials: int
    empty: bool


@dataclass(frozen=True)
class DimensionDensity:
    name: str
    kind: str
    grid: tuple | None  # numeric dims: 256 evaluation points
    choices: tuple | None  # categorical dims: the choice labels
    densities: dict  # group name -> tuple of values, or None for empty groups
    bandwidths: dict  # numeric dims: group name -> bandwidth or None


@dataclass(frozen=True)
class DensityReport:
    space_name: str
    groups: tuple
    dimensions: tuple
    top_fraction: float
    bad_fraction: float

    def group(self, name: str) -> DensityGroup:
        for g in self.groups:
            if g.name == name:
                return g
        raise ValidationError(f"no density group named {name!r}")


def display_percent(share: float) -> int:
    """Integer percentage, rounded half up to match the display convention."""
    return int(math.floor(share * 100.0 + 0.5))


def _completed(trials) -> list[Trial]:
    return [t for t in trials if t.status == "completed"]


def _leaf_boxes(tree, d: int):
    """Leaf hyperboxes of a fitted tree over the unit cube, with values."""
    t = tree.tree_
    lows, highs, vals = [], [], []
    stack = [(0, np.zeros(d), np.ones(d))]
    while stack:
        node, lo, hi = stack.pop()
        left = int(t.children_left[node])
        if left == -1:
            lows.append(lo)
            highs.append(hi)
            vals.append(float(t.value[node].ravel()[0]))
            continue
        f = int(t.feature[node])
        thr = float(t.threshold[node])
        left_hi = hi.copy()
        left_hi[f] = min(hi[f], thr)
        right_lo = lo.copy()
        right_lo[f] = max(lo[f], thr)
        stack.append((left, lo, left_hi))
        stack.append((int(t.children_right[node]), right_lo, hi))
    return np.array(lows), np.array(highs), np.array(vals)


def _marginal_variance(lows, highs, mass, vals, mu: float, j: int) -> float:
    """Variance of the exact dim-j marginal of one tree's prediction."""
    edges = np.unique(np.concatenate([lows[:, j], highs[:, j]]))
    if len(edges) < 2:
        return 0.0
    mids = (edges[:-1] + edges[1:]) / 2.0
    seg_w = np.diff(edges)
    width_j = highs[:, j] - lows[:, j]
    # per-leaf conditional mass given X_j inside the leaf's dim-j interval
    cond = np.where(width_j > 0, mass / np.where(width_j > 0, width_j, 1.0), 0.0)
    member = (lows[:, j][None, :] <= mids[:, None]) & (mids[:, None] < highs[:, j][None, :])
    marginal = member @ (cond * vals)
    return float((seg_w * (marginal - mu) ** 2).sum())


def fanova_importance(
    trials,
    space: SearchSpace,
    subset: str = "all",
    top_fraction: float = DEFAULT_BEST_FRACTION,
    surrogate: SurrogateConfig | None = None,
    seed: int = 0,
) -> ImportanceReport:
    """First-order variance share of every dimension over a trial population."""
    if subset not in IMPORTANCE_SUBSETS:
        raise ValidationError(f"subset must be one of {IMPORTANCE_SUBSETS}, got {subset!r}")
    if not 0.0 < top_fraction <= 1.0:
        raise ValidationError(f"top_fraction must be in (0, 1], got {top_fraction}")
    d = len(space.dimensions)
    pool = [t for t in _completed(trials) if not t.collapsed]
    if len(pool) < 2 * d:
        raise InsufficientTrialsError(
            f"fANOVA needs at least {2 * d} completed non-collapsed trials, got {len(pool)}"
        )
    if subset == "best":
        pool = sorted(pool, key=lambda t: (-t.score, t.id))
        pool = pool[: max(2, int(len(pool) * top_fraction))]

    def zero_report():
        return ImportanceReport(
            space_name=space.name,
            dimensions=tuple(space.names),
            subset=subset,
            shares=(0.0,) * d,
            display_percent=(0,) * d,
            n_trials=len(pool),
            top_fraction=top_fraction,
            constant_scores=True,
        )

    y = np.array([t.score for t in pool], dtype=np.float64)
    if float(np.ptp(y)) == 0.0:
        return zero_report()
    X = np.array([to_unit_cube(t.configuration) for t in pool])
    forest = fit_forest(X, y, surrogate if surrogate is not None else SurrogateConfig(), seed)
    contrib = np.zeros(d)
    total = 0.0
    for tree in forest.estimators_:
        lows, highs, vals = _leaf_boxes(tree, d)
        mass = (highs - lows).prod(axis=1)
        mu = float((mass * vals).sum())
        var = float((mass * (vals - mu) ** 2).sum())
        total += var
        if var == 0.0:
            continue
        for j in range(d):
            contrib[j] += _marginal_variance(lows, highs, mass, vals, mu, j)
    if total == 0.0:
        return zero_report()
    shares = tuple(float(c / total) for c in contrib)
    return ImportanceReport(
        space_name=space.name,
        dimensions=tuple(space.names),
        subset=subset,
        shares=shares,
        display_percent=tuple(display_percent(s) for s in shares),
        n_trials=len(pool),
        top_fraction=top_fraction,
        constant_scores=False,
    )


def silverman_bandwidth(values: np.ndarray, span: float) -> float:
    """0.9 * min(std, IQR/1.34) * n**(-1/5), with degenerate-sample fallback."""
    n = len(values)
    std = float(np.std(values, ddof=1)) if n > 1 else 0.0
    iqr = float(np.subtract(*np.percentile(values, [75, 25])))
    scale = min(std, iqr / 1.34)
    if scale <= 0.0:
        scale = max(std, iqr / 1.34)
    if scale <= 0.0:
        return span / 64.0  # all values identical: narrow kernel at that value
    return 0.9 * scale * n ** (-0.2)


def _kde_on_grid(values: np.ndarray, grid: np.ndarray):
    values = np.sort(values)  # fixed summation order: sample order cannot matter
    span = float(grid[-1] - grid[0])
    # floor at one grid cell so the evaluation grid resolves the kernel
    bw = max(silverman_bandwidth(values, span), span / (GRID_POINTS - 1))
    z = (grid[:, None] - values[None, :]) / bw
    dens = np.exp(-0.5 * z * z).sum(axis=1) / (len(values) * bw * math.sqrt(2.0 * math.pi))
    area = float(np.trapezoid(dens, grid))
    return dens / area, bw


def density_report(
    trials,
    space: SearchSpace,
    top_fraction: float = DEFAULT_TOP_FRACTION,
    bad_fraction: float = DEFAULT_BAD_FRACTION,
) -> DensityReport:
    """Per-dimension density estimates for the top/bad/all/collapsed groups."""
    for label, frac in (("top_fraction", top_fraction), ("bad_fraction", bad_fraction)):
        if not 0.0 < frac <= 0.5:
            raise ValidationError(f"{label} must be in (0, 0.5], got {frac}")
    completed = _completed(trials)
    if len(completed) < 10:
        raise InsufficientTrialsError(
            f"density report needs at least 10 completed trials, got {len(completed)}"
        )
    collapsed = [t for t in completed if t.collapsed]
    healthy = sorted((t for t in completed if not t.collapsed), key=lambda t: (-t.score, t.id))
    # plain floor keeps top and bad disjoint whenever the fractions sum to <= 1
    k_top = int(len(healthy) * top_fraction)
    k_bad = int(len(healthy) * bad_fraction)
    members = {
        "top": healthy[:k_top],
        "bad": healthy[len(healthy) - k_bad :],
        "all": completed,
        "collapsed": collapsed,
    }
    groups = tuple(DensityGroup(g, len(members[g]), not members[g]) for g in DENSITY_GROUPS)
    rows = []
    for dim in space.dimensions:
        densities: dict = {}
        bandwidths: dict = {}
        if dim.kind == "categorical":
            for g in DENSITY_GROUPS:
                if not members[g]:
                    densities[g] = None
                    continue
                counts = Counter(t.configuration.values[dim.name] for t in members[g])
                densities[g] = tuple(counts.get(c, 0) / len(members[g]) for c in dim.choices)
            rows.append(DimensionDensity(dim.name, dim.kind, None, dim.choices, densities, {}))
            continue
        grid = np.linspace(dim.lo, dim.hi, GRID_POINTS)
        for g in DENSITY_GROUPS:
            if not members[g]:
                densities[g] = None
                bandwidths[g] = None
                continue
            values = np.array(
                [float(t.configuration.values[dim.name]) for t in members[g]], dtype=np.float64
            )
            dens, bw = _kde_on_grid(values, grid)
            densities[g] = tuple(float(v) for v in dens)
            bandwidths[g] = bw
        rows.append(
            DimensionDensity(
                dim.name, dim.kind, tuple(float(v) for v in grid), None, densities, bandwidths
            )
        )
    return DensityReport(
        space_name=space.name,
        groups=groups,
        dimensions=tuple(rows),
        top_fraction=top_fraction,
        bad_fraction=bad_fraction,
    )


def _importance_csv(report: ImportanceReport, fh) -> None:
    writer = csv.writer(fh)
    writer.writerow(["dimension", "subset", "n_trials", "share", "percent"])
    for name, share, pct in zip(report.dimensions, report.shares, report.display_percent):
        writer.writerow([name, report.subset, report.n_trials, share, pct])


def _density_csv(report: DensityReport, fh) -> None:
    writer = csv.writer(fh)
    writer.writerow(
        ["dimension", "kind", "group", "group_size", "group_empty", "index", "point", "density", "bandwidth"]
    )
    sizes = {g.name: g.n_trials for g in report.groups}
    for dim in report.dimensions:
        points = dim.choices if dim.kind == "categorical" else dim.grid
        for g in DENSITY_GROUPS:
            dens = dim.densities[g]
            if dens is None:
                writer.writerow([dim.name, dim.kind, g, 0, True, "", "", "", ""])
                continue
            bw = dim.bandwidths.get(g, "")
            for i, (point, value) in enumerate(zip(points, dens)):
                writer.writerow([dim.name, dim.kind, g, sizes[g], False, i, point, value, bw])


def export_report(report, path, format: str = "csv") -> None:
    """Write a report to disk as CSV or as its structured-text (JSON) mirror."""
    fmt = "structured-text" if format == "json" else format
    if fmt not in EXPORT_FORMATS:
        raise ValidationError(f"format must be one of {EXPORT_FORMATS}, got {format!r}")
    if isinstance(report, ImportanceReport):
        kind = "importance"
    elif isinstance(report, DensityReport):
        kind = "density"
    else:
        raise ValidationError(f"cannot export {type(report).__name__}")
    if fmt == "structured-text":
        doc = {"kind": kind, "report": asdict(report)}
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        if kind == "importance":
            _importance_csv(report, fh)
        else:
            _density_csv(report, fh)
