"""Prior-weighted Bayesian optimization over a SearchSpace.

The loop is deliberately simple and fully reproducible:

* the first ``n_init`` suggestions are prior draws,
* afterwards a random-forest surrogate (trees=64, min leaf=3) is fit on
  unit-cube coordinates; expected improvement is estimated from the
  per-tree prediction spread,
* the acquisition is maximized over 2048 prior-sampled plus 2048 uniform
  candidates, weighted by pi(x)^(gamma/t) with t the completed-trial count
  and gamma defaulting to budget/10 (the weight is rescaled by a constant
  before exponentiation, which cannot move the argmax),
* every second post-init suggestion is a uniform draw instead of the
  acquisition argmax. Forest predictions are constant beyond the data,
  so expected improvement alone cannot leave a cluster the prior opened
  far from the optimum; the interleaved draws restore the anytime
  behaviour at a bounded cost to exploitation,
* collapsed and failed trials enter the surrogate at worst-observed minus
  one score-range unit (the score scale is [0, 1], so the unit is 1.0),
* outstanding parallel evaluations are imputed at the incumbent score
  (constant liar).

Budget counts terminal trials, completed and failed alike. History
persists as one JSON record per line: id, values, score, collapsed,
metrics, status, wall_time.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import FIRST_COMPLETED, ThreadPoolExecutor, wait
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import ndtr, ndtri
from sklearn.ensemble import RandomForestRegressor

from .errors import BudgetExhaustedError, InsufficientTrialsError, ValidationError
from .rng import RngStream, derive_seed
from .space import (
    Configuration,
    SearchSpace,
    _prior_params,
    categorical_prior_weights,
    from_unit_cube,
    sample_from_prior,
    to_unit_cube,
)

TRIAL_STATUSES = ("pending", "completed", "failed")
SCORE_RANGE_UNIT = 1.0


@dataclass
class Trial:
    id: int
    configuration: Configuration
    score: float | None = None
    collapsed: bool = False
    metrics: dict = field(default_factory=dict)
    status: str = "pending"
    wall_time: float = 0.0

    def __post_init__(self):
        if self.status not in TRIAL_STATUSES:
            raise ValidationError(f"trial {self.id}: unknown status {self.status!r}")
        if self.status == "completed" and self.score is None:
            raise ValidationError(f"trial {self.id}: completed trials need a score")
        if self.status == "failed" and self.score is not None:
            raise ValidationError(f"trial {self.id}: failed trials cannot carry a score")


@dataclass(frozen=True)
class SurrogateConfig:
    trees: int = 64
    min_leaf: int = 3
    n_init: int = 10
    gamma: float | None = None  # None -> budget / 10
    candidates_prior: int = 2048
    candidates_uniform: int = 2048

    def resolved_gamma(self, budget: int) -> float:
        return budget / 10.0 if self.gamma is None else self.gamma


class SearchState:
    def __init__(
        self,
        space: SearchSpace,
        budget: int,
        seed: int = 0,
        surrogate: SurrogateConfig | None = None,
        history: list | None = None,
    ):
        if budget < 1:
            raise ValidationError(f"budget must be >= 1, got {budget}")
        self.space = space
        self.budget = int(budget)
        self.seed = int(seed)
        self.surrogate = surrogate if surrogate is not None else SurrogateConfig()
        self.rng = RngStream.from_keys(self.seed, "search")
        self.history: list[Trial] = list(history) if history else []
        ids = [t.id for t in self.history]
        if ids != list(range(len(ids))):
            raise ValidationError("trial ids must be contiguous from 0")

    def trials(self, *statuses: str) -> list[Trial]:
        if not statuses:
            return list(self.history)
        return [t for t in self.history if t.status in statuses]

    @property
    def terminal_count(self) -> int:
        return len(self.trials("completed", "failed"))

    def trial_seed(self, trial_id: int) -> int:
        return derive_seed(self.seed, "trial", trial_id)


def expected_improvement(mean: np.ndarray, std: np.ndarray, best: float) -> np.ndarray:
    """EI for maximization from per-candidate predicted mean and spread."""
    mean = np.asarray(mean, dtype=np.float64)
    std = np.asarray(std, dtype=np.float64)
    ei = np.maximum(mean - best, 0.0)
    positive = std > 0.0
    if np.any(positive):
        z = (mean[positive] - best) / std[positive]
        ei = ei.copy()
        ei[positive] = (mean[positive] - best) * ndtr(z) + std[positive] * np.exp(
            -0.5 * z * z
        ) / math.sqrt(2.0 * math.pi)
    return ei


def prior_log_density_batch(space: SearchSpace, coords: np.ndarray) -> np.ndarray:
    """Joint log prior density at unit-cube coordinates, up to per-dimension
    additive constants (harmless under acquisition argmax)."""
    coords = np.asarray(coords, dtype=np.float64)
    out = np.zeros(coords.shape[0], dtype=np.float64)
    for i, dim in enumerate(space.dimensions):
        u = coords[:, i]
        if dim.kind == "categorical":
            weights = np.asarray(categorical_prior_weights(dim))
            k = len(dim.choices)
            idx = np.floor(u * (k - 1) + 0.5).astype(np.int64) if k > 1 else np.zeros(len(u), np.int64)
            out += np.log(weights[np.clip(idx, 0, k - 1)])
            continue
        if dim.uniform_prior:
            continue
        t_lo, t_hi, width, mu, sigma, cdf_lo, cdf_hi = _prior_params(dim)
        t = t_lo + u * width
        z = (t - mu) / sigma
        out += -0.5 * z * z - math.log(sigma * (cdf_hi - cdf_lo))
    return out


def sample_prior_coords(space: SearchSpace, n: int, np_rng: np.random.Generator) -> np.ndarray:
    """n prior draws directly in unit-cube coordinates (vectorized)."""
    coords = np.empty((n, len(space.dimensions)), dtype=np.float64)
    for i, dim in enumerate(space.dimensions):
        u = np_rng.random(n)
        if dim.kind == "categorical":
            weights = np.asarray(categorical_prior_weights(dim))
            idx = np.searchsorted(np.cumsum(weights), u, side="right")
            k = len(dim.choices)
            coords[:, i] = 0.0 if k == 1 else np.clip(idx, 0, k - 1) / (k - 1)
            continue
        if dim.uniform_prior:
            coords[:, i] = u
            continue
        t_lo, t_hi, width, mu, sigma, cdf_lo, cdf_hi = _prior_params(dim)
        t = mu + sigma * ndtri(cdf_lo + u * (cdf_hi - cdf_lo))
        coords[:, i] = np.clip((t - t_lo) / width, 0.0, 1.0)
    return coords


def _surrogate_targets(state: SearchState) -> tuple[np.ndarray, np.ndarray, float]:
    """Unit-cube X, imputed y, and the EI incumbent for the current history."""
    real = [t.score for t in state.trials("completed") if not t.collapsed]
    worst = min(real) if real else 0.0
    penalty = worst - SCORE_RANGE_UNIT
    liar = max(real) if real else penalty
    xs, ys = [], []
    for t in state.history:
        xs.append(to_unit_cube(t.configuration))
        if t.status == "completed" and not t.collapsed:
            ys.append(t.score)
        elif t.status == "pending":
            ys.append(liar)
        else:
            ys.append(penalty)
    best = max(real) if real else penalty
    return np.asarray(xs), np.asarray(ys, dtype=np.float64), best


def suggest(state: SearchState) -> Configuration:
    """Next configuration to evaluate; appends a pending trial to history.

    Post-init suggestions alternate acquisition argmax and uniform draw;
    see the module docstring for why the uniform interleave is load-bearing.
    """
    if state.terminal_count >= state.budget:
        raise BudgetExhaustedError(
            f"budget of {state.budget} terminal trials already reached"
        )
    if len(state.history) < state.surrogate.n_init:
        cfg = sample_from_prior(state.space, state.rng)
    elif (len(state.history) - state.surrogate.n_init) % 2 == 1:
        cfg = _uniform_config(state)
    else:
        cfg = _suggest_by_acquisition(state)
    state.history.append(Trial(id=len(state.history), configuration=cfg))
    return cfg


def _uniform_config(state: SearchState) -> Configuration:
    coords = np.array([state.rng.uniform() for _ in state.space.dimensions])
    return from_unit_cube(coords, state.space)


def fit_forest(
    X: np.ndarray, y: np.ndarray, config: SurrogateConfig, random_state: int
) -> RandomForestRegressor:
    """The one forest used package-wide (surrogate and importance analysis)."""
    forest = RandomForestRegressor(
        n_estimators=config.trees,
        min_samples_leaf=config.min_leaf,
        random_state=random_state,
        n_jobs=1,
    )
    forest.fit(X, y)
    return forest


def _suggest_by_acquisition(state: SearchState) -> Configuration:
    cfg_srg = state.surrogate
    X, y, best = _surrogate_targets(state)
    forest = fit_forest(X, y, cfg_srg, int(state.rng.next_u64() % (2**31 - 1)))
    np_rng = state.rng.numpy_rng()
    cand = np.vstack(
        [
            sample_prior_coords(state.space, cfg_srg.candidates_prior, np_rng),
            np_rng.random((cfg_srg.candidates_uniform, len(state.space.dimensions))),
        ]
    )
    per_tree = np.stack([tree.predict(cand) for tree in forest.estimators_])
    ei = expected_improvement(per_tree.mean(axis=0), per_tree.std(axis=0), best)
    t = max(1, len(state.trials("completed")))
    gamma = cfg_srg.resolved_gamma(state.budget)
    log_pi = prior_log_density_batch(state.space, cand)
    weight = np.exp((gamma / t) * (log_pi - log_pi.max()))
    return from_unit_cube(cand[int(np.argmax(ei * weight))], state.space)


def report(state: SearchState, trial: Trial) -> SearchState:
    """Fill in the result for an outstanding suggestion."""
    if not 0 <= trial.id < len(state.history):
        raise ValidationError(f"unknown trial id {trial.id}")
    if state.history[trial.id].status != "pending":
        raise ValidationError(f"trial {trial.id} was already reported")
    if trial.status == "pending":
        raise ValidationError(f"trial {trial.id}: report needs a terminal status")
    state.history[trial.id] = trial
    return state


def best_trials(state: SearchState, k: int) -> list[Trial]:
    """Top-k completed non-collapsed trials, score descending, id ascending."""
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    done = [t for t in state.trials("completed") if not t.collapsed]
    if not done:
        raise InsufficientTrialsError("no completed non-collapsed trials yet")
    return sorted(done, key=lambda t: (-t.score, t.id))[:k]


def trial_to_record(trial: Trial) -> dict:
    return {
        "id": trial.id,
        "values": dict(trial.configuration.values),
        "score": trial.score,
        "collapsed": trial.collapsed,
        "metrics": dict(trial.metrics),
        "status": trial.status,
        "wall_time": trial.wall_time,
    }


def trial_from_record(doc: dict, space: SearchSpace) -> Trial:
    try:
        return Trial(
            id=doc["id"],
            configuration=Configuration(space, doc["values"]),
            score=doc["score"],
            collapsed=doc["collapsed"],
            metrics=doc.get("metrics", {}),
            status=doc["status"],
            wall_time=doc.get("wall_time", 0.0),
        )
    except KeyError as exc:
        raise ValidationError(f"history record is missing field {exc}") from exc


def append_history_record(path: str, trial: Trial) -> None:
    with open(path, "a", encoding="utf-8") as fh:
        fh.write(json.dumps(trial_to_record(trial), sort_keys=True) + "\n")


def load_history(path: str, space: SearchSpace) -> list[Trial]:
    """Replay a history file; last record per id wins, pending leftovers are
    dropped, and ids are compacted to stay contiguous."""
    records: dict[int, Trial] = {}
    if os.path.exists(path):
        with open(path, encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, 1):
                line = line.strip()
                if not line:
                    continue
                try:
                    doc = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise ValidationError(f"{path}:{line_no}: bad history line: {exc}") from exc
                trial = trial_from_record(doc, space)
                records[trial.id] = trial
    trials = [t for _, t in sorted(records.items()) if t.status != "pending"]
    return [replace(t, id=i) for i, t in enumerate(trials)]


def run_search(
    space: SearchSpace,
    evaluate,
    budget: int,
    parallelism: int = 1,
    seed: int = 0,
    surrogate: SurrogateConfig | None = None,
    history_path: str | None = None,
    resume: bool = False,
) -> SearchState:
    """Drive suggest/evaluate/report until ``budget`` terminal trials.

    ``evaluate(trial_id, values, seed)`` returns a dict with score,
    collapsed, and optional metrics/wall_time keys; raising marks the trial
    failed and the loop continues. With parallelism p, up to p evaluations
    run concurrently on threads.
    """
    if parallelism < 1:
        raise ValidationError(f"parallelism must be >= 1, got {parallelism}")
    history = None
    if resume and history_path:
        history = load_history(history_path, space)
        history = history[:budget]
    state = SearchState(space, budget, seed=seed, surrogate=surrogate, history=history)

    def run_one(trial_id: int, cfg: Configuration) -> Trial:
        try:
            result = evaluate(trial_id, dict(cfg.values), state.trial_seed(trial_id))
            score = float(result["score"])
            return Trial(
                id=trial_id,
                configuration=cfg,
                score=score,
                collapsed=bool(result.get("collapsed", False)),
                metrics=dict(result.get("metrics", {})),
                status="completed",
                wall_time=float(result.get("wall_time", 0.0)),
            )
        except Exception as exc:
            return Trial(
                id=trial_id,
                configuration=cfg,
                collapsed=False,
                metrics={"error": str(exc)},
                status="failed",
            )

    def finish(trial: Trial) -> None:
        report(state, trial)
        if history_path:
            append_history_record(history_path, trial)

    if parallelism == 1:
        while state.terminal_count < state.budget:
            cfg = suggest(state)
            finish(run_one(state.history[-1].id, cfg))
        return state

    with ThreadPoolExecutor(max_workers=parallelism) as pool:
        futures = set()
        while state.terminal_count < state.budget:
            capacity = state.budget - state.terminal_count - len(futures)
            while len(futures) < parallelism and capacity > 0:
                cfg = suggest(state)
                futures.add(pool.submit(run_one, state.history[-1].id, cfg))
                capacity -= 1
            done, futures = wait(futures, return_when=FIRST_COMPLETED)
            for fut in done:
                finish(fut.result())
    return state
