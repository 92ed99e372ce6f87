"""The ``groupaugment`` command.

Subcommands: ``spaces``, ``sample-policy``, ``apply``, ``search``,
``reeval``, ``analyze``.  Exit codes: 0 on success, 2 on usage or
validation errors, 1 on runtime failures.  Diagnostics go to standard
error; data goes to standard output or files.

Run configuration lives in a JSON file (``--config``) whose keys mirror
:class:`RunConfig`; any command-line flag overrides the file.  The default
output directory comes from ``--output-dir``, then the
``GROUPAUGMENT_OUTPUT_DIR`` environment variable, then the working
directory.  ``search`` writes ``history.jsonl``, ``summary.json``, and
``space.json`` there; ``analyze`` picks up ``space.json`` beside the
history file when ``--space`` is not given.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, fields, replace

from .analysis import density_report, export_report, fanova_importance
from .bo import SearchState, SurrogateConfig, best_trials, load_history, run_search
from .errors import (
    DegenerateConfigError,
    GroupAugmentError,
    ImageError,
    InsufficientTrialsError,
    ValidationError,
)
from .harness import (
    DEFAULT_REEVAL_REPEATS,
    SYNTHETIC_NAMES,
    ExternalEvaluator,
    SyntheticEvaluator,
    objective_from_evaluator,
    reevaluate_best,
)
from .image import load_image, save_image
from .policy import apply_policy, format_sequences, group_augment_policy_from_values, policy_from_json
from .rng import RngStream
from .space import (
    BUILTIN_SPACE_NAMES,
    builtin_space,
    sample_from_prior,
    space_from_json,
    space_to_json,
)

OUTPUT_DIR_ENV = "GROUPAUGMENT_OUTPUT_DIR"
HISTORY_FILE = "history.jsonl"
SUMMARY_FILE = "summary.json"
SPACE_FILE = "space.json"
USAGE_ERRORS = (
    ValidationError,
    DegenerateConfigError,
    InsufficientTrialsError,
    ImageError,
    json.JSONDecodeError,
)


@dataclass(frozen=True)
class RunConfig:
    space: str = "group_augment"
    evaluator: str = "quadratic"
    budget: int = 50
    parallelism: int = 1
    seed: int = 0
    output_dir: str | None = None
    split: str = "validation"
    timeout: float | None = None
    chance_level: float | None = None
    uniform_prior: bool = False
    prior_confidence: str | None = None
    trees: int | None = None
    min_leaf: int | None = None
    n_init: int | None = None
    gamma: float | None = None
    resume: bool = False

    def __post_init__(self):
        if self.budget < 1:
            raise ValidationError(f"budget must be >= 1, got {self.budget}")
        if self.parallelism < 1:
            raise ValidationError(f"parallelism must be >= 1, got {self.parallelism}")


def load_run_config(args) -> RunConfig:
    doc = {}
    if getattr(args, "config", None):
        with open(args.config, encoding="utf-8") as fh:
            doc = json.load(fh)
        if not isinstance(doc, dict):
            raise ValidationError("run config file must hold a JSON object")
    allowed = {f.name for f in fields(RunConfig)}
    extra = sorted(set(doc) - allowed)
    if extra:
        raise ValidationError(f"unknown run config keys: {extra}")
    cfg = RunConfig(**doc)
    overrides = {}
    for name in allowed:
        value = getattr(args, name, None)
        if isinstance(value, bool):
            if value:
                overrides[name] = True
        elif value is not None:
            overrides[name] = value
    return replace(cfg, **overrides)


def resolve_space(spec: str):
    if spec in BUILTIN_SPACE_NAMES:
        return builtin_space(spec)
    if os.path.exists(spec):
        with open(spec, encoding="utf-8") as fh:
            return space_from_json(fh.read())
    raise ValidationError(f"unknown space {spec!r}: not a builtin name or an existing file")


def apply_prior_overrides(space, cfg: RunConfig):
    if not cfg.uniform_prior and cfg.prior_confidence is None:
        return space
    changes = {}
    if cfg.uniform_prior:
        changes["uniform_prior"] = True
    if cfg.prior_confidence is not None:
        changes["prior_confidence"] = cfg.prior_confidence
    return replace(space, dimensions=tuple(replace(d, **changes) for d in space.dimensions))


def resolve_output_dir(configured: str | None) -> str:
    out = configured or os.environ.get(OUTPUT_DIR_ENV) or "."
    os.makedirs(out, exist_ok=True)
    return out


def make_objective(cfg: RunConfig, space):
    """Evaluator plus run_search-shaped objective; synthetic objectives skip
    wall-clock measurement so serial runs stay byte-reproducible."""
    if cfg.evaluator in SYNTHETIC_NAMES:
        evaluator = SyntheticEvaluator(cfg.evaluator, space)
        return evaluator, objective_from_evaluator(evaluator, space, split=cfg.split)
    evaluator = ExternalEvaluator(cfg.evaluator, timeout=cfg.timeout, chance_level=cfg.chance_level)
    return evaluator, objective_from_evaluator(evaluator, space, split=cfg.split, measure_time=True)


def surrogate_from_config(cfg: RunConfig) -> SurrogateConfig | None:
    if cfg.trees is None and cfg.min_leaf is None and cfg.n_init is None and cfg.gamma is None:
        return None
    base = SurrogateConfig()
    return SurrogateConfig(
        trees=base.trees if cfg.trees is None else cfg.trees,
        min_leaf=base.min_leaf if cfg.min_leaf is None else cfg.min_leaf,
        n_init=base.n_init if cfg.n_init is None else cfg.n_init,
        gamma=cfg.gamma,
    )


def cmd_spaces(args) -> int:
    if args.name is None:
        for name in BUILTIN_SPACE_NAMES:
            print(name)
        return 0
    print(space_to_json(resolve_space(args.name)))
    return 0


def cmd_sample_policy(args) -> int:
    if args.count < 1:
        raise ValidationError(f"count must be >= 1, got {args.count}")
    space = resolve_space(args.space)
    rng = RngStream.from_keys(args.seed, "sample-policy")
    cfg = sample_from_prior(space, rng)
    policy = group_augment_policy_from_values(cfg.values)
    print("configuration: " + json.dumps(cfg.values, sort_keys=True))
    for i in range(args.count):
        print(f"draw {i}")
        print(format_sequences(policy.sample_sequences(rng)))
    return 0


def cmd_apply(args) -> int:
    with open(args.policy, encoding="utf-8") as fh:
        policy = policy_from_json(fh.read())
    img = load_image(args.input)
    out = apply_policy(policy, img, RngStream.from_keys(args.seed, "apply"))
    save_image(out, args.output)
    return 0


def _summarize(state: SearchState, cfg: RunConfig) -> dict:
    completed = state.trials("completed")
    incumbent = []
    best_so_far = None
    for t in completed:
        if t.collapsed:
            continue
        if best_so_far is None or t.score > best_so_far:
            best_so_far = t.score
            incumbent.append({"trial_id": t.id, "score": t.score})
    try:
        top = best_trials(state, k=5)
    except InsufficientTrialsError:
        top = []
    return {
        "space": cfg.space,
        "evaluator": cfg.evaluator,
        "budget": cfg.budget,
        "seed": cfg.seed,
        "parallelism": cfg.parallelism,
        "counts": {
            "completed": len(completed),
            "failed": len(state.trials("failed")),
            "collapsed": sum(1 for t in completed if t.collapsed),
        },
        "incumbent": incumbent,
        "best": [
            {"trial_id": t.id, "score": t.score, "values": dict(t.configuration.values)}
            for t in top
        ],
    }


def cmd_search(args) -> int:
    cfg = load_run_config(args)
    space = apply_prior_overrides(resolve_space(cfg.space), cfg)
    out_dir = resolve_output_dir(cfg.output_dir)
    history_path = os.path.join(out_dir, HISTORY_FILE)
    resume = cfg.resume and os.path.exists(history_path)
    if not resume and os.path.exists(history_path):
        os.remove(history_path)
    with open(os.path.join(out_dir, SPACE_FILE), "w", encoding="utf-8") as fh:
        fh.write(space_to_json(space) + "\n")
    evaluator, objective = make_objective(cfg, space)
    try:
        state = run_search(
            space,
            objective,
            budget=cfg.budget,
            parallelism=cfg.parallelism,
            seed=cfg.seed,
            surrogate=surrogate_from_config(cfg),
            history_path=history_path,
            resume=resume,
        )
    finally:
        evaluator.shutdown()
    summary = _summarize(state, cfg)
    summary_path = os.path.join(out_dir, SUMMARY_FILE)
    with open(summary_path, "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    counts = summary["counts"]
    print(
        f"completed {counts['completed']} trials, "
        f"{counts['failed']} failed, {counts['collapsed']} collapsed"
    )
    if summary["best"]:
        leader = summary["best"][0]
        print(f"best score {leader['score']} (trial {leader['trial_id']})")
    print(f"history: {history_path}")
    print(f"summary: {summary_path}")
    if not counts["completed"]:
        print("error: every trial failed; see the history file for details", file=sys.stderr)
        return 1
    return 0


def cmd_reeval(args) -> int:
    cfg = load_run_config(args)
    space = apply_prior_overrides(resolve_space(cfg.space), cfg)
    out_dir = resolve_output_dir(cfg.output_dir)
    history_path = args.history or os.path.join(out_dir, HISTORY_FILE)
    trials = load_history(history_path, space)
    if not trials:
        raise InsufficientTrialsError(f"history {history_path} holds no terminal trials")
    state = SearchState(space, budget=len(trials), seed=cfg.seed, history=trials)
    repeats = DEFAULT_REEVAL_REPEATS if args.repeats is None else args.repeats
    evaluator, objective = make_objective(cfg, space)
    try:
        rows = reevaluate_best(state, k=args.k, evaluate=objective, repeats=repeats)
    finally:
        evaluator.shutdown()
    report_path = os.path.join(out_dir, "reeval.json")
    with open(report_path, "w", encoding="utf-8") as fh:
        json.dump(rows, fh, indent=2, sort_keys=True)
        fh.write("\n")
    for row in rows:
        print(
            f"trial {row['trial_id']}: search score {row['search_score']}, "
            f"repeated mean {row['mean']}, stderr {row['stderr']}, "
            f"{len(row['failures'])} failures"
        )
    print(f"report: {report_path}")
    return 0


def cmd_analyze(args) -> int:
    if args.space is not None:
        space = resolve_space(args.space)
    else:
        sibling = os.path.join(os.path.dirname(args.history) or ".", SPACE_FILE)
        if not os.path.exists(sibling):
            raise ValidationError(f"pass --space or keep {SPACE_FILE} beside the history file")
        space = resolve_space(sibling)
    trials = load_history(args.history, space)
    out_dir = resolve_output_dir(args.output_dir)
    written = []

    def export(report, stem):
        for fmt, ext in (("csv", "csv"), ("structured-text", "json")):
            path = os.path.join(out_dir, f"{stem}.{ext}")
            export_report(report, path, format=fmt)
            written.append(path)

    if args.report in ("importance", "both"):
        for subset in ("all", "best"):
            export(fanova_importance(trials, space, subset=subset), f"importance_{subset}")
    if args.report in ("density", "both"):
        export(density_report(trials, space), "density")
    for path in written:
        print(path)
    return 0


def _add_run_config_flags(sp) -> None:
    sp.add_argument("--config", default=None, help="JSON run config; flags override it")
    sp.add_argument("--space", default=None, help="builtin space name or space file")
    sp.add_argument("--evaluator", default=None, help="synthetic objective name or subprocess command")
    sp.add_argument("--budget", type=int, default=None)
    sp.add_argument("--parallelism", type=int, default=None)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--output-dir", dest="output_dir", default=None)
    sp.add_argument("--split", choices=("validation", "test"), default=None)
    sp.add_argument("--timeout", type=float, default=None, help="per-evaluation timeout in seconds")
    sp.add_argument("--chance-level", dest="chance_level", type=float, default=None)
    sp.add_argument("--uniform-prior", dest="uniform_prior", action="store_true")
    sp.add_argument(
        "--prior-confidence", dest="prior_confidence", choices=("low", "medium", "high"), default=None
    )
    sp.add_argument("--trees", type=int, default=None)
    sp.add_argument("--min-leaf", dest="min_leaf", type=int, default=None)
    sp.add_argument("--n-init", dest="n_init", type=int, default=None)
    sp.add_argument("--gamma", type=float, default=None)
    sp.add_argument("--resume", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="groupaugment", description="Augmentation policy search toolkit."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("spaces", help="list builtin search spaces, or dump one as JSON")
    sp.add_argument("name", nargs="?", default=None)
    sp.set_defaults(func=cmd_spaces)

    sp = sub.add_parser("sample-policy", help="sample a policy from the prior and print draws")
    sp.add_argument("--space", default="group_augment")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--count", type=int, default=1)
    sp.set_defaults(func=cmd_sample_policy)

    sp = sub.add_parser("apply", help="apply a policy file to an image file")
    sp.add_argument("--policy", required=True)
    sp.add_argument("--input", required=True)
    sp.add_argument("--output", required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_apply)

    sp = sub.add_parser("search", help="run a prior-weighted search")
    _add_run_config_flags(sp)
    sp.set_defaults(func=cmd_search)

    sp = sub.add_parser("reeval", help="re-evaluate the best trials of a finished search")
    _add_run_config_flags(sp)
    sp.add_argument("--history", default=None, help="history file (default: output dir)")
    sp.add_argument("--k", type=int, default=3)
    sp.add_argument("--repeats", type=int, default=None)
    sp.set_defaults(func=cmd_reeval)

    sp = sub.add_parser("analyze", help="export importance and density reports")
    sp.add_argument("--history", required=True)
    sp.add_argument("--report", choices=("importance", "density", "both"), default="both")
    sp.add_argument("--space", default=None)
    sp.add_argument("--output-dir", dest="output_dir", default=None)
    sp.set_defaults(func=cmd_analyze)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except USAGE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (GroupAugmentError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
